"""
One-variable oracle (d = 1).

For a polynomial b with sup |b| <= 1 on the circle, 1 - |b|^2 is a non-negative
trigonometric polynomial, so its outer factor a is a polynomial of the same
degree (Fejer-Riesz). spectral_factor computes it from polynomial roots;
outer_a(method="cepstrum") uses FFT analytic completion of log(1 - |b|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_triangular, toeplitz

from dbr import HbContext
from gleason import gleason_operators, solve_min_defect
from linalg_utils import ContractivityError, QuasiExtremeError, richardson
from poly import Poly


def log_print(*args, **kwargs):
    """Print with immediate flush for real-time output"""
    print(*args, **kwargs, flush=True)


def _require_univariate(b: Poly) -> None:
    if b.dim != 1:
        raise ValueError(f"One-variable oracle needs d = 1, got d = {b.dim}")


def _coeff_array(p: Poly) -> np.ndarray:
    return p.to_dense(max(p.degree, 0))


@dataclass(frozen=True, eq=False)
class CircleGrid:
    M: int
    theta: np.ndarray
    values: np.ndarray

    @property
    def defect(self) -> np.ndarray:
        return 1.0 - self.values


def circle_grid(b: Poly, M: int, midpoint: bool = True) -> CircleGrid:
    """|b|^2 at theta_k = 2 pi (k + 1/2) / M (or 2 pi k / M)."""
    _require_univariate(b)
    if M < 8 or M & (M - 1):
        raise ValueError(f"Grid size must be a power of two >= 8, got {M}")
    shift = 0.5 if midpoint else 0.0
    theta = 2.0 * np.pi * (np.arange(M) + shift) / M
    values = np.abs(b.evaluate(np.exp(1j * theta)[:, None])) ** 2
    if float(values.max()) > 1.0 + 1e-12:
        raise ContractivityError(f"|b|^2 reaches {values.max():.12f} > 1 on the unit circle")
    return CircleGrid(M=M, theta=theta, values=values)


def laurent_defect_coeffs(b: Poly) -> np.ndarray:
    """Coefficients l_k (k = -n..n) of 1 - |b(e^{it})|^2 = sum_k l_k e^{ikt}."""
    _require_univariate(b)
    c = _coeff_array(b)
    n = c.size - 1
    ell = np.zeros(2 * n + 1, dtype=complex)
    for k in range(-n, n + 1):
        ell[k + n] = -sum(c[m + k] * np.conj(c[m]) for m in range(n + 1) if 0 <= m + k <= n)
    ell[n] += 1.0
    return ell


def spectral_factor(b: Poly, tol: float = 1e-12, pair_tol: float = 1e-4, grid: int = 256) -> Poly:
    """
    Outer polynomial a with |a|^2 + |b|^2 = 1 on the circle and a(0) > 0.

    Roots of z^n (1 - |b|^2) come in pairs (r, 1/conj r); the outside ones are
    kept. Double roots on the circle split numerically and are merged back.
    """
    ell = laurent_defect_coeffs(b)
    n = (ell.size - 1) // 2
    scale = float(np.max(np.abs(ell)))
    if scale <= tol:
        raise QuasiExtremeError("1 - |b|^2 vanishes identically on the circle: b is extreme", evidence={})
    significant = np.nonzero(np.abs(ell) > tol * scale)[0]
    n_eff = int(max(abs(int(k) - n) for k in significant))
    if n_eff == 0:
        return Poly.constant(1, math.sqrt(ell[n].real))

    trimmed = ell[n - n_eff : n + n_eff + 1]
    roots = np.roots(trimmed[::-1])
    moduli = np.abs(roots)
    outside = list(roots[moduli > 1.0 + pair_tol])
    near = [r / abs(r) for r in roots[np.abs(moduli - 1.0) <= pair_tol]]
    if len(near) % 2:
        raise RuntimeError(f"Odd number ({len(near)}) of roots on the unit circle; cannot pair them")
    while near:
        root = near.pop(0)
        partner = min(range(len(near)), key=lambda i: abs(near[i] - root))
        merged = root + near.pop(partner)
        outside.append(merged / abs(merged))
    if len(outside) != n_eff:
        raise RuntimeError(f"Expected {n_eff} factor roots, found {len(outside)}")

    q = np.poly(outside)[::-1]
    theta = 2.0 * np.pi * (np.arange(grid) + 0.5) / grid
    zeta = np.exp(1j * theta)
    q_vals = np.polyval(q[::-1], zeta)
    target = 1.0 - np.abs(b.evaluate(zeta[:, None])) ** 2
    weight = np.abs(q_vals) ** 2
    c_sq = float(np.sum(target * weight) / np.sum(weight ** 2))
    phase = np.conj(q[0]) / abs(q[0])
    return Poly.from_univariate(math.sqrt(max(c_sq, 0.0)) * phase * q)


@dataclass
class SzegoResult:
    value: float
    quadrature: float
    extreme: bool
    refinements: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self):
        return {
            "value": self.value,
            "quadrature": self.quadrature,
            "extreme": self.extreme,
            "refinements": [{"M": M, "quadrature": q} for M, q in self.refinements],
        }


def _log_quadrature(b: Poly, M: int, underflow_tol: float) -> Tuple[float, bool]:
    grid = circle_grid(b, M)
    v = grid.defect
    small = v <= underflow_tol
    logs = np.where(small, np.log(np.finfo(float).tiny), np.log(np.where(small, 1.0, v)))
    return float(np.mean(logs)), bool(small.any())


def szego_integral(
    b: Poly,
    M: int = 4096,
    underflow_tol: float = 1e-14,
    cap: float = 50.0,
) -> SzegoResult:
    """
    Mean of log(1 - |b|^2) over the circle, or -inf.

    When the grid hits values at or below underflow_tol the grid is doubled
    twice; a quadrature below -cap flags -inf. A finite integral is reported
    as 2 log a(0) from the spectral factor, with the quadrature kept.
    """
    _require_univariate(b)
    quad, underflow = _log_quadrature(b, M, underflow_tol)
    refinements = [(M, quad)]
    if underflow:
        for k in (1, 2):
            quad, underflow = _log_quadrature(b, M * 2 ** k, underflow_tol)
            refinements.append((M * 2 ** k, quad))
        if quad < -cap:
            return SzegoResult(value=-math.inf, quadrature=quad, extreme=True, refinements=refinements)
    try:
        a = spectral_factor(b)
    except QuasiExtremeError:
        return SzegoResult(value=-math.inf, quadrature=quad, extreme=True, refinements=refinements)
    value = 2.0 * math.log(a.at_origin().real)
    if abs(value - quad) > 1e-3:
        log_print(f"⚠️  Szego quadrature {quad:.8f} differs from 2 log a(0) = {value:.8f}")
    return SzegoResult(value=value, quadrature=quad, extreme=False, refinements=refinements)


def _cepstral_outer(b: Poly, M: int, underflow_tol: float) -> Poly:
    grid = circle_grid(b, M, midpoint=False)
    L = np.log(np.maximum(grid.defect, underflow_tol))
    c = np.fft.fft(L) / M
    h = np.zeros(M, dtype=complex)
    h[0] = c[0] / 2.0
    h[1 : M // 2] = c[1 : M // 2]
    log_a = np.fft.ifft(h) * M
    a_grid = np.exp(log_a)
    coeffs = np.fft.fft(a_grid) / M
    return Poly.from_univariate(coeffs[: M // 4 + 1])


def outer_a(b: Poly, M: int = 4096, method: str = "roots", underflow_tol: float = 1e-14, cap: float = 50.0) -> Poly:
    """Outer a with |a|^2 + |b|^2 = 1 on the circle and a(0) > 0; refuses extreme b."""
    _require_univariate(b)
    szego = szego_integral(b, M, underflow_tol, cap)
    if szego.extreme:
        raise QuasiExtremeError("Szego integral diverges: b is extreme, no outer companion", evidence=szego.to_dict())
    if method == "roots":
        return spectral_factor(b)
    if method == "cepstrum":
        return _cepstral_outer(b, M, underflow_tol)
    raise ValueError(f"Unknown method '{method}' (expected 'roots' or 'cepstrum')")


def sarason_pair_norm(b: Poly, f: Poly, a: Optional[Poly] = None) -> float:
    """
    ||f||_b^2 = ||f||^2 + ||f+||^2 where T_conj(a) f+ = T_conj(b) f.

    Both co-analytic Toeplitz operators are upper triangular on the
    coefficients of f, so f+ comes from one triangular solve.
    """
    _require_univariate(b)
    a = a if a is not None else spectral_factor(b)
    if f.is_zero:
        return 0.0
    n = f.degree
    fc = f.to_dense(n)

    def upper_toeplitz(p: Poly) -> np.ndarray:
        col = np.zeros(n + 1, dtype=complex)
        row = np.zeros(n + 1, dtype=complex)
        coeffs = _coeff_array(p)
        k = min(coeffs.size, n + 1)
        row[:k] = np.conj(coeffs[:k])
        col[0] = row[0]
        return toeplitz(col, row)

    rhs = upper_toeplitz(b) @ fc
    f_plus = solve_triangular(upper_toeplitz(a), rhs, lower=False)
    return float(np.vdot(fc, fc).real + np.vdot(f_plus, f_plus).real)


@dataclass
class SarasonCheck:
    table: pd.DataFrame
    a0_residual: float

    @property
    def max_residual(self) -> float:
        if self.table.empty:
            return self.a0_residual
        return max(float(self.table["residual"].max()), self.a0_residual)


def sarason_coeff_check(ctx: HbContext, n_max: Optional[int] = None, a: Optional[Poly] = None) -> SarasonCheck:
    """
    Compare <X^n b, b>_b (extrapolated over the ladder) with -a_n / a(0) from the
    outer factor, for n = 1..n_max, plus |a(0)|^2 against 1/(1 + ||b||_b^2).
    """
    b = ctx.b
    _require_univariate(b)
    n_max = ctx.tol.sarason_terms if n_max is None else n_max
    a = a if a is not None else outer_a(b, ctx.tol.grid_size, underflow_tol=ctx.tol.underflow_tol, cap=ctx.tol.szego_cap)
    a0 = a.at_origin()

    levels, norms = [], []
    for N in ctx.ladder:
        tup = solve_min_defect(ctx, N)
        ops = gleason_operators(ctx, tup)
        if ops.b_state is None:
            raise QuasiExtremeError(f"b is outside the degree-{N} section of H(b)", evidence={"N": N})
        x = ops.b_state.copy()
        row = []
        for _ in range(n_max):
            x = ops.X[0] @ x
            row.append(np.vdot(ops.b_state, x))
        levels.append(np.array(row))
        norms.append(float(np.vdot(ops.b_state, ops.b_state).real))
    model = richardson(levels, ctx.ladder)
    hb_norm = richardson(norms, ctx.ladder)

    records = []
    for n in range(1, n_max + 1):
        value = complex(np.atleast_1d(model.value)[n - 1])
        oracle = -a.coefficient((n,)) / a0
        records.append({"n": n, "model": value, "oracle": oracle, "residual": abs(value - oracle)})
    table = pd.DataFrame.from_records(records, columns=["n", "model", "oracle", "residual"])
    a0_residual = abs(abs(a0) ** 2 - 1.0 / (1.0 + float(hb_norm.value)))
    return SarasonCheck(table=table, a0_residual=a0_residual)


def outer_identity_residual(b: Poly, a: Poly, M: int = 1024) -> float:
    """max | |a|^2 + |b|^2 - 1 | on the midpoint grid."""
    theta = 2.0 * np.pi * (np.arange(M) + 0.5) / M
    zeta = np.exp(1j * theta)[:, None]
    return float(np.max(np.abs(np.abs(a.evaluate(zeta)) ** 2 + np.abs(b.evaluate(zeta)) ** 2 - 1.0)))
