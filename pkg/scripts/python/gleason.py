"""
Admissible tuples and the Gleason operators X_j on the degree-N section of H(b).

An admissible tuple (b_1, ..., b_d) satisfies sum_j S_j b_j = b - b(0) in P_N,
where S_j is the compressed shift. The minimal tuple minimizes sum ||b_j||^2 in
the section norm; its defect 1 - |b(0)|^2 - sum ||b_j||^2 equals |a0|^2.

On the section, X_j (Delta x) = Delta S_j^H x - <x, b> b_j, and in state
coordinates X_j* g = S_j g - <g, b_j> b.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from dbr import FiniteSection, HbContext, NodeSet, hb_norm_estimate
from hardy import shift_matrix
from linalg_utils import Extrapolation, QuasiExtremeError, least_norm_solve, richardson
from poly import Poly


def log_print(*args, **kwargs):
    """Print with immediate flush for real-time output"""
    print(*args, **kwargs, flush=True)


@dataclass(frozen=True, eq=False)
class GleasonTuple:
    b_js: Tuple[Poly, ...]
    defect: float
    norms: Tuple[float, ...]
    N: int
    states: np.ndarray
    constraint_residual: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.b_js)

    def gram(self) -> np.ndarray:
        """Section inner products <b_k, b_j>, entry [j, k]."""
        return self.states.conj() @ self.states.T

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "defect": self.defect,
            "norms": list(self.norms),
            "bJs": [p.to_dict() for p in self.b_js],
            "constraintResidual": self.constraint_residual,
        }


def constraint_matrix(ctx: HbContext, N: Optional[int] = None) -> np.ndarray:
    """Map from stacked state coordinates (c_1, ..., c_d) to sum_j S_j b_j in H^2 coordinates."""
    sec = ctx.section(N)
    return np.hstack([shift_matrix(ctx.d, sec.N, j) @ sec.synthesis for j in range(ctx.d)])


def admissible_tuple(ctx: HbContext, states: np.ndarray, N: Optional[int] = None) -> GleasonTuple:
    """Package state coordinates (shape (d, rank)) of a tuple with its defect and constraint residual."""
    sec = ctx.section(N)
    states = np.asarray(states, dtype=complex).reshape(ctx.d, sec.rank)
    b0 = ctx.b.at_origin()
    b_js = tuple(sec.space.poly(sec.vector(c)) for c in states)
    norms = tuple(float(np.vdot(c, c).real) for c in states)
    defect = 1.0 - abs(b0) ** 2 - sum(norms)
    total = Poly.zero(ctx.d)
    for j, bj in enumerate(b_js):
        total = total + Poly.variable(ctx.d, j) * bj
    residual = total.truncate(sec.N).max_abs_diff(ctx.b - b0)
    return GleasonTuple(
        b_js=b_js,
        defect=defect,
        norms=norms,
        N=sec.N,
        states=states,
        constraint_residual=residual,
    )


def _constant_tuple(ctx: HbContext, sec: FiniteSection) -> GleasonTuple:
    b0 = ctx.b.at_origin()
    return GleasonTuple(
        b_js=tuple(Poly.zero(ctx.d) for _ in range(ctx.d)),
        defect=1.0 - abs(b0) ** 2,
        norms=(0.0,) * ctx.d,
        N=sec.N,
        states=np.zeros((ctx.d, sec.rank), dtype=complex),
        constraint_residual=0.0,
    )


def solve_min_defect(ctx: HbContext, N: Optional[int] = None) -> GleasonTuple:
    """Admissible tuple of minimal norm (maximal defect) at truncation degree N."""
    sec = ctx.section(N)
    if ctx.b.is_constant:
        return _constant_tuple(ctx, sec)
    rhs = sec.coords(ctx.b - ctx.b.at_origin())
    x, residual = least_norm_solve(constraint_matrix(ctx, sec.N), rhs, ctx.tol.rcond)
    if residual > ctx.tol.range_tol:
        raise RuntimeError(f"Gleason constraint system is infeasible at N={sec.N} (relative residual {residual:.3e})")
    tup = admissible_tuple(ctx, x.reshape(ctx.d, sec.rank), sec.N)
    if tup.defect < -ctx.tol.defect_tol:
        log_print(f"⚠️  Negative defect {tup.defect:.3e} at N={sec.N}; b may fail to be contractive")
    tup.diagnostics["solveResidual"] = residual
    return tup


def min_defect_estimate(ctx: HbContext) -> Extrapolation:
    """Richardson extrapolation of the minimal defect over the context ladder."""
    values = [solve_min_defect(ctx, N).defect for N in ctx.ladder]
    return richardson(values, ctx.ladder)


def canonical_tuple(ctx: HbContext, N: Optional[int] = None) -> GleasonTuple:
    """
    Tuple built through the Herglotz space: solve the Gleason problem for
    g0 = b/(1 - b) with minimal norm ||(1 - b) h|| and map back by
    b_j = (1 - b(0)) (1 - b) h_j.
    """
    sec = ctx.section(N)
    b0 = ctx.b.at_origin()
    if abs(1.0 - b0) == 0.0:
        raise ValueError("b(0) = 1; the Cayley transform of b is undefined")
    if ctx.b.is_constant:
        return _constant_tuple(ctx, sec)
    if sec.range_residual(sec.v_b) > ctx.tol.range_tol:
        raise QuasiExtremeError(
            f"b is outside the degree-{sec.N} section of H(b); no canonical tuple",
            evidence={"rangeResidual": sec.range_residual(sec.v_b)},
        )

    T = np.eye(sec.space.size) - sec.Mc
    g0 = solve_triangular(T, sec.v_b, lower=True)
    degrees = np.array([sum(alpha) for alpha in sec.space.basis])
    block_norms = [float(np.linalg.norm(g0[degrees == n])) for n in range(sec.N + 1)]
    tail_ratio = block_norms[-1] / max(max(block_norms), np.finfo(float).tiny)
    if tail_ratio > 0.1:
        log_print(
            f"⚠️  Series of b/(1-b) is not decaying at degree {sec.N} "
            f"(top block holds {tail_ratio:.1%} of the largest block)"
        )

    rhs = g0.copy()
    rhs[0] = 0.0
    Tinv_syn = solve_triangular(T, sec.synthesis, lower=True)
    A = np.hstack([shift_matrix(ctx.d, sec.N, j) @ Tinv_syn for j in range(ctx.d)])
    x, residual = least_norm_solve(A, rhs, ctx.tol.rcond)
    if residual > ctx.tol.range_tol:
        raise RuntimeError(f"Gleason problem for b/(1-b) is infeasible at N={sec.N} (relative residual {residual:.3e})")
    tup = admissible_tuple(ctx, (1.0 - b0) * x.reshape(ctx.d, sec.rank), sec.N)
    tup.diagnostics.update({"solveResidual": residual, "seriesTailRatio": tail_ratio})
    return tup


# ============================================================================
# Operators
# ============================================================================


@dataclass(frozen=True, eq=False)
class GleasonOperators:
    ctx: HbContext
    tuple: GleasonTuple
    section: FiniteSection
    X: Tuple[np.ndarray, ...]
    b_state: Optional[np.ndarray]

    @property
    def d(self) -> int:
        return self.ctx.d

    @property
    def Xstar(self) -> Tuple[np.ndarray, ...]:
        return tuple(Xj.conj().T for Xj in self.X)

    @property
    def output_row(self) -> np.ndarray:
        """State coordinates to f(0)."""
        return self.section.synthesis[0, :].copy()

    def state_of(self, f: Poly) -> np.ndarray:
        return self.section.state(self.section.coords(f))

    def kernel_state(self, w) -> np.ndarray:
        return self.section.kernel_states([w])[:, 0]


def gleason_operators(ctx: HbContext, tup: GleasonTuple) -> GleasonOperators:
    sec = ctx.section(tup.N)
    Uh = sec.U.conj().T
    inv = 1.0 / sec.sqrt_lam
    row_b = (sec.v_b.conj() @ sec.U) * inv
    X = []
    for j in range(ctx.d):
        S = shift_matrix(ctx.d, sec.N, j)
        core = (sec.sqrt_lam[:, None] * (Uh @ S.conj().T @ sec.U)) * inv[None, :]
        X.append(core - np.outer(tup.states[j], row_b))
    b_state = sec.state(sec.v_b) if sec.range_residual(sec.v_b) <= ctx.tol.range_tol else None
    return GleasonOperators(ctx=ctx, tuple=tup, section=sec, X=tuple(X), b_state=b_state)


def apply_X_on_kernel(ops: GleasonOperators, j: int, w) -> np.ndarray:
    """State of X_j kappa_w = conj(w_j) Delta K^{N-1}_w - conj(b(w)) b_j."""
    sec = ops.section
    w = np.asarray(w, dtype=complex).reshape(-1)
    K = sec.space.kernel_vectors(w[None, :])[:, 0]
    degrees = np.array([sum(alpha) for alpha in sec.space.basis])
    K_prev = np.where(degrees < sec.N, K, 0.0)
    shifted = sec.sqrt_lam * (sec.U.conj().T @ K_prev)
    return np.conj(w[j]) * shifted - np.conj(ops.ctx.b.evaluate(w)) * ops.tuple.states[j]


def apply_Xstar(ops: GleasonOperators, j: int, f: Poly) -> Poly:
    """X_j* f = z_j f - <f, b_j> b, with z_j f truncated to degree N."""
    sec = ops.section
    if f.degree > sec.N:
        raise ValueError(f"f has degree {f.degree} > truncation degree {sec.N}")
    shifted = (Poly.variable(ops.d, j) * f).truncate(sec.N)
    coeff = sec.inner(f, ops.tuple.b_js[j])
    return shifted - ops.ctx.b.scale(coeff)


def defect_identity_residual(
    ops: GleasonOperators,
    nodes: NodeSet | np.ndarray,
    a0_sq: Optional[float] = None,
) -> float:
    """
    max |<(I - sum X_j* X_j) kappa_w, kappa_z> - (kappa_0 (x) kappa_0 + |a0|^2 b (x) b) entry|
    over node pairs, computed from kernel values without inverting anything.
    """
    sec = ops.section
    pts = nodes.points if isinstance(nodes, NodeSet) else np.atleast_2d(np.asarray(nodes, dtype=complex))
    a0_sq = ops.tuple.defect if a0_sq is None else a0_sq
    K = sec.space.kernel_vectors(pts)
    delta = sec.delta
    bz = ops.ctx.b.evaluate(pts)

    lhs = K.conj().T @ delta @ K
    for j in range(ops.d):
        SK = shift_matrix(ops.d, sec.N, j).conj().T @ K
        v_bj = sec.vector(ops.tuple.states[j])
        p = v_bj.conj() @ SK
        lhs -= SK.conj().T @ delta @ SK
        lhs += np.outer(bz, p) + np.outer(p.conj(), bz.conj())
        lhs -= ops.tuple.norms[j] * np.outer(bz, bz.conj())

    r0 = delta[0, :] @ K
    rhs = np.outer(r0.conj(), r0) + a0_sq * np.outer(bz, bz.conj())
    return float(np.max(np.abs(lhs - rhs)))


def a0_from_hbnorm(ctx: HbContext) -> float:
    """|a0|^2 = 1 / (1 + ||b||_b^2) with the extrapolated H(b) norm."""
    est = hb_norm_estimate(ctx, ctx.b)
    if not est.is_finite:
        raise QuasiExtremeError(
            "b is not in H(b): b is quasi-extreme and a0 = 0",
            evidence={"hbNormEstimate": est.to_dict()},
        )
    return 1.0 / (1.0 + float(est.value))
