"""
Truncated Drury-Arveson space.

All matrices use orthonormal coordinates v_alpha = p_alpha * sqrt(w_alpha) over
enumerate_basis(d, N), so adjoints are conjugate transposes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

from linalg_utils import hermitian_part, min_eig
from poly import MultiIndex, Poly, add_index, basis_index, enumerate_basis, monomial_weight, monomials_at, sub_index


@dataclass(frozen=True)
class TruncatedSpace:
    d: int
    N: int
    basis: Tuple[MultiIndex, ...]
    weights: np.ndarray
    index: Dict[MultiIndex, int]

    @property
    def size(self) -> int:
        return len(self.basis)

    def coords(self, f: Poly) -> np.ndarray:
        if f.dim != self.d:
            raise ValueError(f"Dimension mismatch: space has d={self.d}, polynomial has d={f.dim}")
        return f.to_dense(self.N) * np.sqrt(self.weights)

    def poly(self, v: np.ndarray) -> Poly:
        return Poly.from_dense(self.d, self.N, np.asarray(v) / np.sqrt(self.weights))

    def kernel_vectors(self, points: np.ndarray) -> np.ndarray:
        """Columns are the coordinates of the truncated Szego kernels K^N_w."""
        mono = monomials_at(points, self.basis)
        return (mono / np.sqrt(self.weights)[None, :]).conj().T

    def evaluation_rows(self, points: np.ndarray) -> np.ndarray:
        """Rows map coordinates v to f(z) for each point z."""
        return monomials_at(points, self.basis) / np.sqrt(self.weights)[None, :]


@lru_cache(maxsize=None)
def truncated_space(d: int, N: int) -> TruncatedSpace:
    basis = enumerate_basis(d, N)
    weights = np.array([float(monomial_weight(alpha)) for alpha in basis])
    weights.setflags(write=False)
    return TruncatedSpace(d=d, N=N, basis=basis, weights=weights, index=basis_index(d, N))


def h2_inner(p: Poly, q: Poly) -> complex:
    """<p, q> in H^2_d; exact for polynomials."""
    if p.dim != q.dim:
        raise ValueError(f"Dimension mismatch: {p.dim} vs {q.dim}")
    total = 0j
    for alpha, c in p.coeffs.items():
        e = q.coeffs.get(alpha)
        if e is not None:
            total += float(monomial_weight(alpha)) * c * e.conjugate()
    return total


def h2_norm_sq(p: Poly) -> float:
    return h2_inner(p, p).real


def mult_adjoint_apply(b: Poly, f: Poly) -> Poly:
    """M_b^* f, with coefficient c_gamma = sum_beta conj(b_beta) f_{beta+gamma} w_{beta+gamma} / w_gamma."""
    if b.dim != f.dim:
        raise ValueError(f"Dimension mismatch: {b.dim} vs {f.dim}")
    out: Dict[MultiIndex, complex] = {}
    for alpha, fa in f.coeffs.items():
        wa = monomial_weight(alpha)
        for beta, bb in b.coeffs.items():
            gamma = sub_index(alpha, beta)
            if gamma is None:
                continue
            ratio = float(wa / monomial_weight(gamma))
            out[gamma] = out.get(gamma, 0j) + bb.conjugate() * fa * ratio
    return Poly(f.dim, out)


def mult_matrix(b: Poly, N_in: int, N_out: int) -> np.ndarray:
    """Compression of M_b from P_{N_in} into P_{N_out}, entry [alpha', beta] = b_{alpha'-beta} sqrt(w_alpha'/w_beta)."""
    src = truncated_space(b.dim, N_in)
    dst = truncated_space(b.dim, N_out)
    M = np.zeros((dst.size, src.size), dtype=complex)
    for col, beta in enumerate(src.basis):
        for gamma, c in b.coeffs.items():
            target = add_index(beta, gamma)
            row = dst.index.get(target)
            if row is not None:
                M[row, col] += c * np.sqrt(dst.weights[row] / src.weights[col])
    return M


@lru_cache(maxsize=None)
def _shift_cache(d: int, N: int, j: int) -> np.ndarray:
    S = mult_matrix(Poly.variable(d, j), N, N)
    S.setflags(write=False)
    return S


def shift_matrix(d: int, N: int, j: int) -> np.ndarray:
    """Compressed shift S_j = P_N M_{z_j} |P_N (0-based j)."""
    return _shift_cache(d, N, j)


def multiplier_norm_lower(b: Poly, N: int) -> float:
    """Largest singular value of M_b from P_N into P_{N+deg b}; a lower bound for the multiplier norm."""
    if b.is_zero:
        return 0.0
    return float(np.linalg.norm(mult_matrix(b, N, N + max(b.degree, 0)), 2))


def positivity_matrix(b: Poly, a: Poly, N: int) -> np.ndarray:
    """Q_N = compression of I - M_b^* M_b - M_a^* M_a to P_N."""
    if b.dim != a.dim:
        raise ValueError(f"Dimension mismatch: {b.dim} vs {a.dim}")
    Q = np.eye(truncated_space(b.dim, N).size, dtype=complex)
    for p in (b, a):
        if p.is_zero:
            continue
        M = mult_matrix(p, N, N + max(p.degree, 0))
        Q -= M.conj().T @ M
    return hermitian_part(Q)


def column_positivity(b: Poly, a: Poly, N: int) -> float:
    """lambda_min of Q_N; non-negative for every N when the column [M_b; M_a] is contractive."""
    return min_eig(positivity_matrix(b, a, N))


def column_positivity_trace(b: Poly, a: Poly, N_max: int) -> List[float]:
    """lambda_min(Q_N) for N = 0..N_max, read off the leading blocks of Q_{N_max}."""
    Q = positivity_matrix(b, a, N_max)
    trace = []
    for N in range(N_max + 1):
        k = truncated_space(b.dim, N).size
        trace.append(min_eig(Q[:k, :k]))
    return trace
