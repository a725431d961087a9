#!/usr/bin/env python3
"""
Quasi-extremity toolkit - command line

Usage:
    # Verdict, minimal Gleason tuple and companion a for a polynomial b
    python main.py report inputs/fixtures/b_half_one_plus_z.json --format text

    # Minimal-word shift of a free column pair
    python main.py fock-shift --a inputs/fixtures/fock_A_word12.json --b inputs/fixtures/fock_B_L1.json

Exit codes: 0 success, 2 inconclusive verdict, 1 invalid input or refusal.
"""

import argparse
import contextlib
import io
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

script_dir = Path(__file__).resolve().parent
if str(script_dir) not in sys.path:
    sys.path.insert(0, str(script_dir))

from dbr import INCONCLUSIVE, NOT_QUASI_EXTREME, make_context, qe_verdict  # noqa: E402
from fock import FockCoeffs, column_contractivity_fock, shift_nonvanishing, symbol_norms, symmetrize  # noqa: E402
from gleason import defect_identity_residual, gleason_operators, solve_min_defect  # noqa: E402
from linalg_utils import InconclusiveError  # noqa: E402
from onevar import outer_a, sarason_coeff_check, szego_integral  # noqa: E402
from poly import Poly  # noqa: E402
from realization import construct_a  # noqa: E402
from report_io import REPORT_SCHEMA, export_tables, runtime_metadata, traces_frame, write_report  # noqa: E402
from settings import load_settings, parse_overrides  # noqa: E402


def log_print(*args, **kwargs):
    """Print with immediate flush for real-time terminal output"""
    print(*args, **kwargs, flush=True)


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2


def _settings_from_args(args: argparse.Namespace):
    flags = {
        key: getattr(args, key)
        for key in ("degree", "nodes", "seed", "radius", "taylor_degree")
        if getattr(args, key, None) is not None
    }
    return load_settings(args.config, **{**flags, **parse_overrides(args.tol)})


def cmd_report(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """Verdict plus, when b is not quasi-extreme, the companion a and its certificate."""
    settings = _settings_from_args(args)
    b = Poly.load(args.input)
    log_print("=" * 80)
    log_print(f"🔍 Analyzing b = {b!r} (d={b.dim}, N={settings.degree}, seed={settings.seed})")
    log_print("=" * 80)

    ctx = make_context(b, tol=settings)
    log_print(f"[verdict] membership schedule {settings.schedule}, ladder {ctx.ladder}")
    verdict = qe_verdict(ctx)
    log_print(f"ℹ️  verdict: {verdict.status}")

    tup = solve_min_defect(ctx)
    ops = gleason_operators(ctx, tup)
    defect_value = verdict.evidence["minDefect"]["value"]
    flags: List[str] = []
    if verdict.evidence.get("estimatorsAgree") is False:
        flags.append("inconclusive-cross-check")

    report: Dict[str, Any] = {
        "schema": REPORT_SCHEMA,
        "command": "report",
        "input": {"b": b.to_dict(), "config": settings.to_config(), "nodes": ctx.nodes.to_dict()},
        "seed": settings.seed,
        "verdict": verdict.status,
        "evidence": verdict.evidence,
        "defect": defect_value,
        "gleasonTuple": tup.to_dict(),
        "metadata": runtime_metadata(),
    }

    if verdict.status == NOT_QUASI_EXTREME:
        a, cert = construct_a(ctx, verdict=verdict)
        report.update(
            {
                "a0": cert.a0,
                "aCoefficients": a.to_dict(),
                "certificate": cert.to_dict(),
                "residuals": {
                    "isometry": cert.iso_residual,
                    "defectIdentity": cert.defect_identity_residual,
                    "positivityMinEig": cert.positivity_min_eig,
                },
            }
        )
        if b.dim == 1:
            oracle = outer_a(b, settings.grid_size, underflow_tol=settings.underflow_tol, cap=settings.szego_cap)
            szego = szego_integral(b, settings.grid_size, settings.underflow_tol, settings.szego_cap)
            sarason = sarason_coeff_check(ctx, a=oracle)
            report["oracle"] = {"outerA": oracle.to_dict(), "szego": szego.to_dict()}
            report["residuals"]["oracleCoefficients"] = a.max_abs_diff(oracle.truncate(settings.taylor_degree))
            report["residuals"]["sarason"] = sarason.max_residual
            report["sarasonTable"] = sarason.table.to_dict(orient="records")
    else:
        report["a0"] = 0.0 if verdict.status != INCONCLUSIVE else None
        report["aCoefficients"] = None
        report["residuals"] = {
            "defectIdentity": defect_identity_residual(ops, ctx.nodes.prefix(min(settings.nodes, ctx.nodes.count))),
        }
    report["flags"] = flags

    if args.tables:
        tables = {"traces": traces_frame(report)}
        if "sarasonTable" in report:
            tables["sarason"] = pd.DataFrame(report["sarasonTable"])
        export_tables(tables, Path(args.tables))

    code = EXIT_INCONCLUSIVE if verdict.status == INCONCLUSIVE else EXIT_OK
    return report, code


def cmd_fock_shift(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    A = FockCoeffs.load(args.a)
    B = FockCoeffs.load(args.b) if args.b else FockCoeffs(A.d, A.L, {})
    if B.d != A.d:
        raise ValueError(f"A and B live over different alphabets: d={A.d} vs d={B.d}")
    L = A.L
    before = column_contractivity_fock(B, A, L)
    v, shifted = shift_nonvanishing(A)
    L_after = L - len(v)
    after = column_contractivity_fock(B, shifted, L_after)
    sym = symmetrize(shifted)
    log_print(f"✅ minimal word v = {v}, shifted constant term {shifted.at_empty()}")
    report = {
        "schema": REPORT_SCHEMA,
        "command": "fock-shift",
        "input": {"A": A.to_dict(), "B": B.to_dict()},
        "v": list(v),
        "shifted": shifted.to_dict(),
        "symmetrized": sym.to_dict(),
        "shiftedAtEmpty": sym.at_origin(),
        "lambdaMinBefore": before,
        "lambdaMinAfter": after,
        "drop": before - after,
        "lengths": {"before": L, "after": L_after},
        "norms": symbol_norms(shifted, L_after),
        "metadata": runtime_metadata(),
    }
    return report, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Quasi-extremity toolkit for Drury-Arveson multipliers")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", type=Path, default=None, help="Write the report here instead of stdout")
        p.add_argument("--format", choices=["json", "text"], default="json", help="Report format (default: json)")
        p.add_argument("--quiet", action="store_true", help="Suppress progress output")

    rep = sub.add_parser("report", help="Verdict, Gleason tuple and companion a for a Poly JSON file")
    rep.add_argument("input", type=Path, help="Poly JSON file describing b")
    rep.add_argument("--degree", type=int, default=None, help="Truncation degree N (default: 20)")
    rep.add_argument("--nodes", type=int, default=None, help="Nodes in the first membership stage (default: 16)")
    rep.add_argument("--seed", type=int, default=None, help="Node sampling seed (default: 42)")
    rep.add_argument("--radius", type=float, default=None, help="Sampling radius (default: 0.9)")
    rep.add_argument("--taylor-degree", type=int, default=None, help="Taylor degree of a (default: 12)")
    rep.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="Override a setting, e.g. rangeTol=1e-7")
    rep.add_argument("--config", type=Path, default=None, help="YAML settings file")
    rep.add_argument("--tables", type=Path, default=None, help="Export traces to .csv or .xlsx")
    common(rep)
    rep.set_defaults(handler=cmd_report)

    shift = sub.add_parser("fock-shift", help="Minimal-word shift of a free column pair (B, A)")
    shift.add_argument("--a", type=Path, required=True, help="FockCoeffs JSON for A")
    shift.add_argument("--b", type=Path, default=None, help="FockCoeffs JSON for B (default: 0)")
    common(shift)
    shift.set_defaults(handler=cmd_fock_shift, tables=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # progress goes to stderr when the report itself is printed on stdout
    log_stream = sys.stderr if args.out is None else sys.stdout
    if args.quiet:
        log_stream = io.StringIO()
    try:
        with contextlib.redirect_stdout(log_stream):
            report, code = args.handler(args)
            text = write_report(report, args.out, args.format)
    except InconclusiveError as e:
        log_print(f"⚠️  {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ValueError, RuntimeError, FileNotFoundError) as e:
        log_print(f"❌ ERROR: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
