"""
Report I/O helpers.

Reports are plain dicts. JSON output is canonical (sorted keys, complex numbers as
{"re", "im"}, infinities as "inf"); traces and residual tables export through
pandas to CSV or XLSX.
"""

import json
import math
import platform
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

REPORT_SCHEMA = "qe-report/1"
TOOL_NAME = "qe-toolkit"


def log_print(*args, **kwargs):
    """Print with immediate flush for real-time output"""
    print(*args, **kwargs, flush=True)


def runtime_metadata() -> Dict[str, str]:
    """Environment facts only; reports carry no timestamps."""
    return {
        "tool": TOOL_NAME,
        "schema": REPORT_SCHEMA,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        if c.imag == 0:
            return to_jsonable(c.real)
        return {"re": to_jsonable(c.real), "im": to_jsonable(c.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def report_to_json(report: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, dict) and {"re", "im"} <= value.keys():
        return f"{value['re']:.10g}{value['im']:+.10g}i"
    return str(value)


def format_text(report: Dict[str, Any]) -> str:
    data = to_jsonable(report)
    lines: List[str] = ["=" * 80, f"Quasi-extremity report ({data.get('schema', REPORT_SCHEMA)})", "=" * 80]
    if data.get("command") == "fock-shift":
        for key in ("v", "shiftedAtEmpty", "lambdaMinBefore", "lambdaMinAfter", "drop"):
            if key in data:
                lines.append(f"  {key:<22} {_fmt(data[key])}")
        if "symmetrized" in data:
            lines.append("  symmetrized:")
            for entry in data["symmetrized"]["coeffs"]:
                lines.append(f"    z^{tuple(entry['alpha'])}: {entry['re']:.10g}{entry['im']:+.10g}i")
        return "\n".join(lines) + "\n"

    lines.append(f"  verdict                {data.get('verdict')}")
    for key in ("defect", "a0"):
        if key in data:
            lines.append(f"  {key:<22} {_fmt(data[key])}")
    residuals = data.get("residuals") or {}
    if residuals:
        lines.append("─" * 70)
        lines.append("  residuals")
        for key, value in residuals.items():
            lines.append(f"    {key:<20} {_fmt(value)}")
    a = data.get("aCoefficients")
    if a:
        lines.append("─" * 70)
        lines.append("  a coefficients")
        for entry in a["coeffs"]:
            lines.append(f"    z^{tuple(entry['alpha'])}: {entry['re']:.10g}{entry['im']:+.10g}i")
    flags = data.get("flags") or []
    if flags:
        lines.append("─" * 70)
        lines.append("  flags: " + ", ".join(flags))
    return "\n".join(lines) + "\n"


def write_report(report: Dict[str, Any], out: Optional[Path] = None, fmt: str = "json") -> str:
    """Render the report and write it to `out` (or return it for stdout)."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "text":
        text = format_text(report)
    else:
        raise ValueError(f"Unknown format '{fmt}' (expected 'json' or 'text')")
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        log_print(f"💾 Report written to {out}")
    return text


def traces_frame(report: Dict[str, Any]) -> pd.DataFrame:
    """Membership traces of a report as one long table."""
    evidence = (report.get("evidence") or {})
    rows = []
    for criterion in ("bMembership", "constantsHb", "constantsHerglotz"):
        block = evidence.get(criterion) or {}
        for stage, entry in enumerate(block.get("trace") or []):
            entry = to_jsonable(entry)
            rows.append({"criterion": criterion, "stage": stage, **entry, "class": block.get("class")})
    return pd.DataFrame(rows, columns=["criterion", "stage", "nodes", "value", "residual", "rank", "class"])


def export_tables(tables: Dict[str, pd.DataFrame], path: Path) -> None:
    """Write named tables to one .xlsx workbook (one sheet each) or to <stem>_<name>.csv files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".xlsx":
        with pd.ExcelWriter(path, engine="openpyxl") as writer:
            for name, frame in tables.items():
                frame.to_excel(writer, sheet_name=name[:31], index=False)
        log_print(f"💾 Tables written to {path}")
        return
    if path.suffix.lower() != ".csv":
        raise ValueError(f"Table export needs a .csv or .xlsx path, got {path}")
    for name, frame in tables.items():
        target = path.with_name(f"{path.stem}_{name}.csv")
        frame.to_csv(target, index=False)
        log_print(f"💾 Table '{name}' written to {target}")


def export_matrix_csv(matrix: np.ndarray, labels: Sequence[Any], path: Path, col_labels: Optional[Sequence[Any]] = None) -> None:
    """Row-major dump of a (possibly complex) matrix with basis labels on both axes."""
    matrix = np.asarray(matrix)
    col_labels = labels if col_labels is None else col_labels
    frame = pd.DataFrame(
        [[_fmt(to_jsonable(x)) for x in row] for row in matrix],
        index=[str(l) for l in labels],
        columns=[str(l) for l in col_labels],
    )
    frame.to_csv(Path(path))
