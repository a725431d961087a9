"""
de Branges-Rovnyak and Herglotz kernels, H(b) norm estimators and the
quasi-extremity verdict.

Two independent estimators of ||f||_b^2 are provided:
  - membership_score: f(Z)^H K(Z)^+ f(Z) over a node set Z, with a range check.
  - hb_norm_trunc: the range norm of Delta_N = I - C_b C_b^H on P_N, where C_b is
    the compression of M_b to polynomials of degree <= N (see FiniteSection).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from hardy import h2_norm_sq, mult_matrix, multiplier_norm_lower, truncated_space
from linalg_utils import (
    ContractivityError,
    Extrapolation,
    doubling_ladder,
    hermitian_part,
    psd_factor,
    richardson,
)
from poly import Poly
from settings import Tolerances

QUASI_EXTREME = "QuasiExtreme"
NOT_QUASI_EXTREME = "NotQuasiExtreme"
INCONCLUSIVE = "Inconclusive"


def log_print(*args, **kwargs):
    """Print with immediate flush for real-time output"""
    print(*args, **kwargs, flush=True)


# ============================================================================
# Node sets
# ============================================================================


@dataclass(frozen=True, eq=False)
class NodeSet:
    points: np.ndarray
    seed: Optional[int]
    radius: float

    @property
    def count(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def prefix(self, n: int) -> "NodeSet":
        if n > self.count:
            raise ValueError(f"Requested {n} nodes but only {self.count} were sampled")
        return NodeSet(points=self.points[:n], seed=self.seed, radius=self.radius)

    def to_dict(self) -> Dict[str, Any]:
        if self.seed is not None:
            return {"seed": self.seed, "radius": self.radius, "count": self.count}
        return {
            "radius": self.radius,
            "points": [[{"re": float(c.real), "im": float(c.imag)} for c in z] for z in self.points],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], d: int, avoid: Optional[Poly] = None) -> "NodeSet":
        radius = float(data.get("radius", 0.9))
        if "points" in data:
            pts = np.array(
                [[complex(c["re"], c.get("im", 0.0)) for c in z] for z in data["points"]], dtype=complex
            ).reshape(-1, d)
            _check_in_ball(pts)
            return cls(points=pts, seed=None, radius=radius)
        return sample_nodes(d, int(data["count"]), int(data["seed"]), radius, avoid=avoid)


def _check_in_ball(points: np.ndarray) -> None:
    norms = np.sum(np.abs(points) ** 2, axis=1)
    if np.any(norms >= 1.0):
        bad = points[int(np.argmax(norms))]
        raise ValueError(f"Point {bad} is not inside the open unit ball")


def sample_nodes(
    d: int,
    count: int,
    seed: int,
    radius: float = 0.9,
    avoid: Optional[Poly] = None,
    guard: float = 1e-8,
    batch: int = 256,
) -> NodeSet:
    """
    Uniform points in the ball of the given radius by rejection on the real 2d-cube.

    Sampling runs in fixed-size batches from one generator, so a smaller count
    yields a prefix of a larger one. With `avoid`, points where |1 - avoid(z)| < guard
    are rejected.
    """
    if not 0.0 < radius < 1.0:
        raise ValueError(f"radius must lie in (0, 1), got {radius}")
    rng = np.random.default_rng(seed)
    accepted: List[np.ndarray] = []
    total = 0
    while total < count:
        x = rng.uniform(-radius, radius, size=(batch, 2 * d))
        z = x[:, :d] + 1j * x[:, d:]
        ok = np.sum(np.abs(z) ** 2, axis=1) <= radius ** 2
        if avoid is not None:
            ok &= np.abs(1.0 - avoid.evaluate(z)) >= guard
        accepted.append(z[ok])
        total += int(ok.sum())
    points = np.concatenate(accepted)[:count]
    return NodeSet(points=points, seed=seed, radius=radius)


# ============================================================================
# Kernels
# ============================================================================


def _as_points(z, d: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(z, dtype=complex))
    if pts.shape[1] != d:
        raise ValueError(f"Expected points in C^{d}, got shape {np.shape(z)}")
    _check_in_ball(pts)
    return pts


def _szego_matrix(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 - Z @ W.conj().T)


def kb_matrix(b: Poly, Z, W=None) -> np.ndarray:
    """Matrix of k^b(z_i, w_j) = (1 - b(z_i) conj(b(w_j))) / (1 - <z_i, w_j>)."""
    Z = _as_points(Z, b.dim)
    W = Z if W is None else _as_points(W, b.dim)
    bz = b.evaluate(Z)
    bw = bz if W is Z else b.evaluate(W)
    return (1.0 - np.outer(bz, bw.conj())) * _szego_matrix(Z, W)


def kb_eval(b: Poly, z, w) -> complex:
    return complex(kb_matrix(b, [z], [w])[0, 0])


def _herglotz_prefactors(b: Poly, pts: np.ndarray) -> np.ndarray:
    one_minus = 1.0 - b.evaluate(pts)
    if np.any(one_minus == 0):
        raise ValueError("b attains the value 1 at a queried point; the Herglotz kernel is singular there")
    return one_minus


def herglotz_kernel_matrix(b: Poly, Z, W=None) -> np.ndarray:
    """K^b(z, w) = k^b(z, w) / ((1 - b(z)) conj(1 - b(w)))."""
    Z = _as_points(Z, b.dim)
    W = Z if W is None else _as_points(W, b.dim)
    pz = _herglotz_prefactors(b, Z)
    pw = pz if W is Z else _herglotz_prefactors(b, W)
    return kb_matrix(b, Z, W) / np.outer(pz, pw.conj())


def herglotz_kernel_eval(b: Poly, z, w) -> complex:
    return complex(herglotz_kernel_matrix(b, [z], [w])[0, 0])


def herglotz_cayley_eval(b: Poly, z, w) -> complex:
    """The same kernel written as (G(z) + conj G(w)) / (2 (1 - <z, w>)), G = (1 + b)/(1 - b)."""
    Z = _as_points([z], b.dim)
    W = _as_points([w], b.dim)
    pz, pw = _herglotz_prefactors(b, Z)[0], _herglotz_prefactors(b, W)[0]
    gz = (1.0 + b.evaluate(Z)[0]) / pz
    gw = (1.0 + b.evaluate(W)[0]) / pw
    return complex(0.5 * (gz + gw.conjugate()) * _szego_matrix(Z, W)[0, 0])


# ============================================================================
# Degree-N section of H(b)
# ============================================================================


class FiniteSection:
    """
    P_N carrying the range norm of Delta_N = I - C_b C_b^H.

    Delta_N = U diag(lam) U^H (small eigenvalues dropped). Elements of the
    section are Delta_N x; their orthonormal "state" coordinates are
    c = lam^{-1/2} U^H v for v = Delta_N x, and v = U lam^{1/2} c.
    """

    def __init__(self, b: Poly, N: int, rcond: float = 1e-12):
        if N < max(b.degree, 0):
            raise ValueError(f"Truncation degree {N} is below deg b = {b.degree}")
        self.b = b
        self.N = N
        self.space = truncated_space(b.dim, N)
        self.Mc = mult_matrix(b, N, N)
        self.delta = hermitian_part(np.eye(self.space.size) - self.Mc @ self.Mc.conj().T)
        factor = psd_factor(self.delta, rcond)
        self.U = factor.U
        self.lam = factor.lam
        self.sqrt_lam = np.sqrt(factor.lam)
        self.dropped = factor.dropped
        self.v_b = self.space.coords(b)

    @property
    def d(self) -> int:
        return self.b.dim

    @property
    def rank(self) -> int:
        return int(self.lam.size)

    @cached_property
    def synthesis(self) -> np.ndarray:
        """U lam^{1/2}: state coordinates to H^2 coordinates."""
        return self.U * self.sqrt_lam[None, :]

    def coords(self, f: Poly) -> np.ndarray:
        return self.space.coords(f)

    def range_residual(self, v: np.ndarray) -> float:
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            return 0.0
        return float(np.linalg.norm(v - self.U @ (self.U.conj().T @ v))) / norm

    def state(self, v: np.ndarray) -> np.ndarray:
        return (self.U.conj().T @ v) / self.sqrt_lam

    def vector(self, c: np.ndarray) -> np.ndarray:
        return self.synthesis @ c

    def norm_sq(self, f: Poly, range_tol: float = 1e-6) -> float:
        v = self.coords(f)
        if self.range_residual(v) > range_tol:
            return math.inf
        c = self.state(v)
        return float(np.vdot(c, c).real)

    def inner(self, f: Poly, g: Poly) -> complex:
        """<f, g> in the range norm, for f, g in the section."""
        return complex(np.vdot(self.state(self.coords(g)), self.state(self.coords(f))))

    def kernel_states(self, points) -> np.ndarray:
        """State coordinates of kappa_w = Delta_N K^N_w, one column per point."""
        K = self.space.kernel_vectors(_as_points(points, self.d))
        return self.sqrt_lam[:, None] * (self.U.conj().T @ K)


# ============================================================================
# Context
# ============================================================================


@dataclass(frozen=True, eq=False)
class HbContext:
    b: Poly
    N: int
    nodes: NodeSet
    tol: Tolerances = field(default_factory=Tolerances)
    allow_constant: bool = False
    _sections: Dict[int, FiniteSection] = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.b.dim

    def section(self, N: Optional[int] = None) -> FiniteSection:
        N = self.N if N is None else N
        if N not in self._sections:
            self._sections[N] = FiniteSection(self.b, N, self.tol.rcond)
        return self._sections[N]

    @cached_property
    def ladder(self) -> List[int]:
        """Truncation degrees N, 2N, 4N, ... used for extrapolated estimates."""
        return doubling_ladder(
            self.N,
            self.tol.richardson_levels,
            lambda n: comb(n + self.d, self.d),
            self.tol.max_basis,
        )

    @cached_property
    def kernel(self) -> np.ndarray:
        return kb_matrix(self.b, self.nodes.points)


def make_context(
    b: Poly,
    N: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    nodes: Optional[NodeSet] = None,
    allow_constant: bool = False,
) -> HbContext:
    """Screen b and bundle it with a truncation degree and a seeded node set."""
    tol = tol or Tolerances()
    N = tol.degree if N is None else N
    if b.is_constant and not allow_constant:
        raise ValueError("Constant b is outside the scope of this analysis (pass allow_constant for the degenerate path)")
    if N < max(b.degree, 0):
        raise ValueError(f"Truncation degree {N} is below deg b = {b.degree}")

    lower = multiplier_norm_lower(b, N)
    if lower > 1.0 + tol.contract_tol:
        raise ContractivityError(f"b is not contractive: multiplier norm is at least {lower:.6f}")

    if nodes is None:
        nodes = sample_nodes(
            b.dim,
            max(tol.schedule),
            tol.seed,
            tol.radius,
            avoid=b,
            guard=tol.herglotz_guard,
            batch=tol.sample_batch,
        )
    ctx = HbContext(b=b, N=N, nodes=nodes, tol=tol, allow_constant=allow_constant)
    kernel_matrix(ctx)
    return ctx


def kernel_matrix(ctx: HbContext) -> np.ndarray:
    """Node kernel matrix of k^b; raises ContractivityError when it is indefinite beyond tolerance."""
    K = ctx.kernel
    lam_min = float(np.linalg.eigvalsh(hermitian_part(K))[0])
    trace = float(np.trace(K).real)
    if lam_min < -ctx.tol.kernel_tol * trace:
        raise ContractivityError(
            f"b is not contractive: node kernel matrix has eigenvalue {lam_min:.3e} (trace {trace:.3e})"
        )
    return K


# ============================================================================
# Estimators
# ============================================================================


@dataclass
class MembershipScore:
    value: float
    residual: float
    rank: int
    nodes: int

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "residual": self.residual, "rank": self.rank, "nodes": self.nodes}


def membership_score(
    ctx: HbContext,
    f: Poly,
    nodes: Optional[NodeSet] = None,
    kernel: str = "hb",
) -> MembershipScore:
    """
    f(Z)^H K(Z)^+ f(Z) for the H(b) kernel ("hb") or the Herglotz kernel ("herglotz").

    The value is +inf when f(Z) is not in the range of K(Z) up to rangeTol.
    """
    nodes = nodes or ctx.nodes
    Z = nodes.points
    if kernel == "hb":
        K = kb_matrix(ctx.b, Z)
    elif kernel == "herglotz":
        K = herglotz_kernel_matrix(ctx.b, Z)
    else:
        raise ValueError(f"Unknown kernel '{kernel}' (expected 'hb' or 'herglotz')")
    fz = np.asarray(f.evaluate(Z))
    norm = float(np.linalg.norm(fz))
    factor = psd_factor(K, ctx.tol.rcond)
    coef = factor.U.conj().T @ fz
    if norm == 0.0:
        return MembershipScore(value=0.0, residual=0.0, rank=factor.rank, nodes=nodes.count)
    residual = float(np.linalg.norm(fz - factor.U @ coef)) / norm
    if residual > ctx.tol.range_tol:
        value = math.inf
    else:
        value = float(np.sum(np.abs(coef) ** 2 / factor.lam))
    return MembershipScore(value=value, residual=residual, rank=factor.rank, nodes=nodes.count)


def hb_norm_trunc(ctx: HbContext, f: Poly, N: Optional[int] = None) -> float:
    """<Delta_N^+ f, f> at degree N (context degree by default); +inf when f is outside ran Delta_N."""
    section = ctx.section(N)
    if f.degree > section.N:
        raise ValueError(f"f has degree {f.degree} > truncation degree {section.N}")
    return section.norm_sq(f, ctx.tol.range_tol)


def hb_norm_estimate(ctx: HbContext, f: Poly) -> Extrapolation:
    """Richardson extrapolation of hb_norm_trunc over the context ladder."""
    levels = [N for N in ctx.ladder if N >= f.degree]
    if not levels:
        raise ValueError(f"f has degree {f.degree} beyond every truncation level {ctx.ladder}")
    values = [hb_norm_trunc(ctx, f, N) for N in levels]
    return richardson(values, levels)


def hb_norm_sq(ctx: HbContext, f: Poly) -> float:
    return float(hb_norm_estimate(ctx, f).value)


# ============================================================================
# Verdict
# ============================================================================


def classify_trace(scores: Sequence[float], f_norm_sq: float, tol: Tolerances) -> str:
    """'diverge', 'plateau' or 'undecided' for a membership trace over growing node sets."""
    cap = tol.div_cap * max(f_norm_sq, np.finfo(float).tiny)
    run = longest = 0
    for s in scores:
        run = run + 1 if math.isinf(s) else 0
        longest = max(longest, run)
    if longest >= 2 or any(math.isfinite(s) and s > cap for s in scores):
        return "diverge"
    tail = list(scores[-3:])
    if len(tail) == 3 and all(math.isfinite(s) for s in tail):
        increments = []
        for prev, cur in zip(tail[:-1], tail[1:]):
            increments.append(0.0 if cur == 0 else abs(cur - prev) / abs(cur))
        if all(inc < tol.plateau_tol for inc in increments):
            return "plateau"
    return "undecided"


@dataclass
class Verdict:
    status: str
    evidence: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {"status": self.status, "evidence": self.evidence}


def membership_bracket(scores: Sequence[float], schedule: Sequence[int], d: int) -> Tuple[float, float]:
    """
    Interval expected to hold the limit of a nested membership trace.

    Scores over nested node sets are projections onto growing kernel spans, so
    the last score is a lower bound. The upper end is one Richardson step over
    the last two doubling stages, assuming the deficit decays no slower than
    n^(-1/(4d)), the square root of the fill distance in the 2d-real ball.
    """
    last = scores[-1]
    if len(scores) < 2 or not all(math.isfinite(s) for s in scores[-2:]):
        return last, last
    step = richardson(list(scores[-2:]), list(schedule[-2:]), rate=1.0 / (4 * d), order=1)
    return last, max(last, float(step.value))


def qe_verdict(ctx: HbContext, schedule: Optional[Sequence[int]] = None) -> Verdict:
    """
    Decide quasi-extremity from three criteria: b in H(b) (membership of b),
    constants in H(b) (membership of 1) and a positive minimal defect of
    admissible tuples.

    k^b_0 = 1 - b * conj(b(0)) lies in H(b), so when b(0) = 0 the constants
    always belong to H(b) and the H(b) trace of 1 says nothing. In that case
    the constants criterion is read in the Herglotz space, where 1 has finite
    norm exactly when b is in H(b). Both traces are reported either way.
    """
    from gleason import min_defect_estimate

    if ctx.b.is_constant:
        raise ValueError("Constant b is outside the scope of the quasi-extremity verdict")
    tol = ctx.tol
    schedule = list(schedule or tol.schedule)
    one = Poly.constant(ctx.d, 1.0)

    b_trace, hb_one_trace, herglotz_one_trace = [], [], []
    for n in schedule:
        subset = ctx.nodes.prefix(n)
        b_trace.append(membership_score(ctx, ctx.b, subset))
        hb_one_trace.append(membership_score(ctx, one, subset))
        herglotz_one_trace.append(membership_score(ctx, one, subset, kernel="herglotz"))
    b_scores = [s.value for s in b_trace]
    b_class = classify_trace(b_scores, h2_norm_sq(ctx.b), tol)
    hb_one_class = classify_trace([s.value for s in hb_one_trace], 1.0, tol)
    herglotz_one_class = classify_trace([s.value for s in herglotz_one_trace], 1.0, tol)
    if abs(ctx.b.at_origin()) > tol.defect_tol:
        constants_criterion, one_class = "hb", hb_one_class
    else:
        constants_criterion, one_class = "herglotz", herglotz_one_class

    defect = min_defect_estimate(ctx)
    hb_est = hb_norm_estimate(ctx, ctx.b)
    low, high = membership_bracket(b_scores, schedule, ctx.d)
    estimators_agree: Optional[bool] = None
    if hb_est.is_finite and math.isfinite(high):
        trunc = float(hb_est.value)
        estimators_agree = low * (1.0 - tol.cross_tol) <= trunc <= high * (1.0 + tol.cross_tol)
        if not estimators_agree:
            log_print(
                f"⚠️  H(b) norm estimators disagree: truncation {trunc:.6g} "
                f"outside membership bracket [{low:.6g}, {high:.6g}] (crossTol {tol.cross_tol:g})"
            )

    defect_value = float(defect.value)
    if b_class == "plateau" and one_class == "plateau" and defect_value > tol.defect_tol:
        status = NOT_QUASI_EXTREME
    elif b_class == "diverge" and one_class == "diverge" and defect_value <= tol.defect_tol:
        status = QUASI_EXTREME
    else:
        status = INCONCLUSIVE

    evidence = {
        "schedule": schedule,
        "bMembership": {"trace": [s.to_dict() for s in b_trace], "class": b_class, "limitBracket": [low, high]},
        "constantsHb": {"trace": [s.to_dict() for s in hb_one_trace], "class": hb_one_class},
        "constantsHerglotz": {"trace": [s.to_dict() for s in herglotz_one_trace], "class": herglotz_one_class},
        "constantsCriterion": constants_criterion,
        "minDefect": {"value": defect_value, **defect.to_dict()},
        "hbNormEstimate": {"value": float(hb_est.value), **hb_est.to_dict()},
        "estimatorsAgree": estimators_agree,
        "notEvaluated": ["unique_admissible_tuple", "unique_gleason_solution"],
    }
    return Verdict(status=status, evidence=evidence)
