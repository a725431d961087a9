"""
Colligations, transfer functions and the construction of the companion a.

A colligation [A_1..A_d, B_1..B_d; C, D] on a state space C^m has the transfer
function S(z) = D + C (I - sum_j z_j A_j)^{-1} sum_j z_j B_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from dbr import INCONCLUSIVE, QUASI_EXTREME, HbContext, Verdict, qe_verdict
from gleason import (
    GleasonOperators,
    defect_identity_residual,
    gleason_operators,
    min_defect_estimate,
    solve_min_defect,
)
from hardy import column_positivity_trace, truncated_space
from linalg_utils import InconclusiveError, QuasiExtremeError, richardson
from poly import Poly


def log_print(*args, **kwargs):
    """Print with immediate flush for real-time output"""
    print(*args, **kwargs, flush=True)


@dataclass(frozen=True, eq=False)
class Colligation:
    A: Tuple[np.ndarray, ...]
    B: Tuple[np.ndarray, ...]
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        m = self.state_dim
        if any(a.shape != (m, m) for a in self.A) or any(b.shape != (m,) for b in self.B):
            raise ValueError(f"State maps must be {m}x{m} and input vectors length {m}")
        if len(self.A) != len(self.B):
            raise ValueError(f"Got {len(self.A)} state maps but {len(self.B)} input vectors")
        if self.C.shape != (self.outputs, m):
            raise ValueError(f"Output map has shape {self.C.shape}, expected ({self.outputs}, {m})")

    @property
    def d(self) -> int:
        return len(self.A)

    @property
    def state_dim(self) -> int:
        return int(self.C.shape[1])

    @property
    def outputs(self) -> int:
        return int(np.atleast_1d(self.D).shape[0])

    def block(self) -> np.ndarray:
        """U = [[A_1, B_1], ..., [A_d, B_d], [C, D]] from C^m + C into (C^m)^d + C^p."""
        rows = [np.hstack([a, b[:, None]]) for a, b in zip(self.A, self.B)]
        rows.append(np.hstack([self.C, np.atleast_1d(self.D)[:, None]]))
        return np.vstack(rows)

    def norm(self) -> float:
        return float(np.linalg.norm(self.block(), 2))

    def to_dict(self) -> Dict[str, Any]:
        def dense(M):
            M = np.atleast_2d(M)
            return {"re": M.real.tolist(), "im": M.imag.tolist()}

        return {
            "stateDim": self.state_dim,
            "A": [dense(a) for a in self.A],
            "B": [dense(b[:, None]) for b in self.B],
            "C": dense(self.C),
            "D": dense(np.atleast_1d(self.D)[:, None]),
        }


def constant_colligation(D, d: int = 1) -> Colligation:
    D = np.atleast_1d(np.asarray(D, dtype=complex))
    return Colligation(
        A=tuple(np.zeros((0, 0), dtype=complex) for _ in range(d)),
        B=tuple(np.zeros(0, dtype=complex) for _ in range(d)),
        C=np.zeros((D.shape[0], 0), dtype=complex),
        D=D,
    )


def transfer_eval(col: Colligation, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != col.d:
        raise ValueError(f"Point has {z.shape[0]} coordinates, colligation has d={col.d}")
    if float(np.sum(np.abs(z) ** 2)) >= 1.0:
        raise ValueError(f"Point {z} is not inside the open unit ball")
    D = np.atleast_1d(col.D)
    if col.state_dim == 0:
        return D.copy()
    m = col.state_dim
    resolvent = np.eye(m, dtype=complex) - sum(zj * Aj for zj, Aj in zip(z, col.A))
    rhs = sum(zj * Bj for zj, Bj in zip(z, col.B))
    try:
        g = np.linalg.solve(resolvent, rhs)
    except np.linalg.LinAlgError as e:
        raise RuntimeError(f"Singular resolvent at z={z}: the colligation is not contractive") from e
    value = D + col.C @ g
    if float(np.linalg.norm(value)) > 1.0 + 1e-8:
        log_print(f"⚠️  Transfer function has norm {np.linalg.norm(value):.6f} > 1 at z={z}")
    return value


def transfer_taylor(col: Colligation, N: int, divergence_factor: float = 1e6) -> List[Poly]:
    """
    Taylor coefficients through degree N, one Poly per output row.

    g_alpha = sum_j [alpha_j >= 1] (B_j [alpha = e_j] + A_j g_{alpha - e_j}),
    S_alpha = D [alpha = 0] + C g_alpha.
    """
    d = col.d
    space = truncated_space(d, N)
    D = np.atleast_1d(col.D)
    coeffs = np.zeros((col.outputs, space.size), dtype=complex)
    coeffs[:, 0] = D
    m = col.state_dim
    if m == 0:
        return [Poly.from_dense(d, N, row) for row in coeffs]

    states: Dict[Tuple[int, ...], np.ndarray] = {}
    first_norm: Optional[float] = None
    for idx, alpha in enumerate(space.basis):
        if idx == 0:
            continue
        g = np.zeros(m, dtype=complex)
        for j in range(d):
            if alpha[j] == 0:
                continue
            prev = tuple(a - (1 if i == j else 0) for i, a in enumerate(alpha))
            if sum(prev) == 0:
                g = g + col.B[j]
            else:
                g = g + col.A[j] @ states[prev]
        states[alpha] = g
        coeffs[:, idx] = col.C @ g
        norm = float(np.linalg.norm(g))
        if first_norm is None and norm > 0:
            first_norm = norm
        if first_norm and norm > divergence_factor * first_norm:
            raise RuntimeError(
                f"Neumann series diverges at degree {sum(alpha)}: state norm {norm:.3e} vs {first_norm:.3e}"
            )
    return [Poly.from_dense(d, N, row) for row in coeffs]


def functional_model_colligation(ops: GleasonOperators) -> Colligation:
    """A_j = X_j, B_j = b_j, C f = f(0), D = b(0); its transfer function is b."""
    if ops.ctx.b.is_constant:
        raise ValueError("Constant b has no functional model colligation")
    return Colligation(
        A=ops.X,
        B=tuple(ops.tuple.states[j] for j in range(ops.d)),
        C=ops.output_row[None, :],
        D=np.array([ops.ctx.b.at_origin()]),
    )


@dataclass(frozen=True, eq=False)
class AColligations:
    V: Colligation
    U_tilde: Colligation
    a0: float


def build_a_colligation(ops: GleasonOperators, a0: Optional[float] = None) -> AColligations:
    """
    V = [X_j, b_j; -a0 <., b>, a0] and its two-output extension U~ whose
    first output row is the functional model's C.
    """
    if a0 is None:
        if ops.tuple.defect <= ops.ctx.tol.defect_tol:
            raise QuasiExtremeError(
                f"Minimal defect {ops.tuple.defect:.3e} vanishes: b is quasi-extreme and a0 = 0",
                evidence={"defect": ops.tuple.defect},
            )
        a0 = float(np.sqrt(ops.tuple.defect))
    if a0 <= 0:
        raise QuasiExtremeError(f"a0 must be positive, got {a0}", evidence={"a0": a0})
    if ops.b_state is None:
        raise QuasiExtremeError("b is outside the section of H(b): b is quasi-extreme", evidence={"a0": a0})

    A = ops.X
    B = tuple(ops.tuple.states[j] for j in range(ops.d))
    a_row = -a0 * ops.b_state.conj()
    V = Colligation(A=A, B=B, C=a_row[None, :], D=np.array([a0], dtype=complex))
    U_tilde = Colligation(
        A=A,
        B=B,
        C=np.vstack([ops.output_row, a_row]),
        D=np.array([ops.ctx.b.at_origin(), a0], dtype=complex),
    )
    return AColligations(V=V, U_tilde=U_tilde, a0=a0)


def isometry_residual(col2: Colligation) -> float:
    """||U^H U - I||_2 for the block operator of the colligation."""
    U = col2.block()
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1]), 2))


def isometry_blocks(col2: Colligation) -> Dict[str, float]:
    """Norms of the state/state, state/input and input/input blocks of U^H U - I."""
    U = col2.block()
    m = col2.state_dim
    R = U.conj().T @ U - np.eye(U.shape[1])
    return {
        "stateState": float(np.linalg.norm(R[:m, :m], 2)) if m else 0.0,
        "stateInput": float(np.linalg.norm(R[:m, m:], 2)) if m else 0.0,
        "inputInput": float(abs(R[m, m])),
    }


@dataclass
class Certificate:
    verdict: str
    a0: float
    iso_residual: float
    defect: float
    positivity_min_eig: float
    defect_identity_residual: float
    traces: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "a0": self.a0,
            "isoResidual": self.iso_residual,
            "defect": self.defect,
            "positivityMinEig": self.positivity_min_eig,
            "defectIdentityResidual": self.defect_identity_residual,
            "traces": self.traces,
        }


def a_coefficients_at(ctx: HbContext, N: int, N_out: int) -> Tuple[np.ndarray, float]:
    """Dense Taylor coefficients of a (degree <= N_out) and a0 from the degree-N section."""
    tup = solve_min_defect(ctx, N)
    ops = gleason_operators(ctx, tup)
    cols = build_a_colligation(ops)
    a = transfer_taylor(cols.V, N_out)[0]
    return a.to_dense(N_out), cols.a0


def construct_a(ctx: HbContext, N_out: Optional[int] = None, verdict: Optional[Verdict] = None) -> Tuple[Poly, Certificate]:
    """End to end: verdict (unless given), minimal tuple, colligation, Taylor coefficients, positivity check."""
    N_out = ctx.tol.taylor_degree if N_out is None else N_out
    d = ctx.d

    if ctx.b.is_constant:
        if not ctx.allow_constant:
            raise ValueError("Constant b is outside the scope of this analysis")
        a0 = float(np.sqrt(1.0 - abs(ctx.b.at_origin()) ** 2))
        a = Poly.constant(d, a0)
        trace = column_positivity_trace(ctx.b, a, ctx.tol.positivity_degree)
        return a, Certificate(
            verdict="Constant",
            a0=a0,
            iso_residual=0.0,
            defect=a0 ** 2,
            positivity_min_eig=min(trace),
            defect_identity_residual=0.0,
            traces={"positivity": trace},
        )

    if verdict is None:
        log_print("[construct] deciding quasi-extremity")
        verdict = qe_verdict(ctx)
    if verdict.status == QUASI_EXTREME:
        raise QuasiExtremeError("b is quasi-extreme: the only admissible a is 0", evidence=verdict.evidence)
    if verdict.status == INCONCLUSIVE:
        raise InconclusiveError("Quasi-extremity verdict is inconclusive", evidence=verdict.evidence)

    tup = solve_min_defect(ctx)
    ops = gleason_operators(ctx, tup)
    cols = build_a_colligation(ops)
    iso = isometry_residual(cols.U_tilde)
    identity = defect_identity_residual(ops, ctx.nodes.prefix(min(ctx.tol.nodes, ctx.nodes.count)))
    if iso > ctx.tol.iso_tol:
        log_print(f"⚠️  Isometry residual {iso:.3e} exceeds {ctx.tol.iso_tol:.1e}")

    log_print(f"[ladder] extrapolating Taylor coefficients over N = {ctx.ladder}")
    coeff_levels, a0_levels = [], []
    for N in ctx.ladder:
        coeffs, a0_N = a_coefficients_at(ctx, N, N_out)
        coeff_levels.append(coeffs)
        a0_levels.append(a0_N)
    coeff_est = richardson(coeff_levels, ctx.ladder)
    a0_est = richardson(a0_levels, ctx.ladder)
    a = Poly.from_dense(d, N_out, coeff_est.value)
    defect_est = min_defect_estimate(ctx)

    positivity_degree = ctx.tol.positivity_degree
    trace = column_positivity_trace(ctx.b, a, positivity_degree)
    cert = Certificate(
        verdict=verdict.status,
        a0=float(np.real(a0_est.value)),
        iso_residual=iso,
        defect=float(defect_est.value),
        positivity_min_eig=float(min(trace)),
        defect_identity_residual=identity,
        traces={
            "verdict": verdict.evidence,
            "a0": a0_est.to_dict(),
            "coefficientOrder": coeff_est.order,
            "coefficientError": coeff_est.error,
            "positivity": trace,
            "isometryBlocks": isometry_blocks(cols.U_tilde),
        },
    )
    log_print(f"✅ a constructed: a(0) = {cert.a0:.8f}, positivity min eig {cert.positivity_min_eig:.3e}")
    return a, cert
