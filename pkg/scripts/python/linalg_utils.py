"""
Shared numerics: exception types, Hermitian helpers, the least-norm solver
and adaptive Richardson extrapolation over a doubling truncation ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np


class ContractivityError(ValueError):
    """b was refuted as a contractive multiplier by a screening test."""


class QuasiExtremeError(RuntimeError):
    """The operation needs a non-quasi-extreme b."""

    def __init__(self, message: str, evidence: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.evidence = evidence or {}


class InconclusiveError(RuntimeError):
    """The quasi-extremity verdict could not be decided."""

    def __init__(self, message: str, evidence: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.evidence = evidence or {}


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def min_eig(M: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of M."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(M))[0])


@dataclass(frozen=True)
class PsdFactor:
    """Kept part of the eigendecomposition M = U diag(lam) U^H of a PSD matrix."""

    U: np.ndarray
    lam: np.ndarray
    dropped: int

    @property
    def rank(self) -> int:
        return int(self.lam.size)


def psd_factor(M: np.ndarray, rcond: float) -> PsdFactor:
    """Eigenvalues below rcond * lam_max are treated as zero."""
    lam, U = np.linalg.eigh(hermitian_part(M))
    top = float(lam[-1]) if lam.size else 0.0
    if top <= 0.0:
        return PsdFactor(U=U[:, :0], lam=lam[:0], dropped=int(lam.size))
    keep = lam > rcond * top
    return PsdFactor(U=U[:, keep], lam=lam[keep], dropped=int((~keep).sum()))


def least_norm_solve(A: np.ndarray, rhs: np.ndarray, rcond: float = 1e-12) -> Tuple[np.ndarray, float]:
    """
    Minimal-norm x with A x = rhs.

    Eliminating x = A^H y from the KKT system [[I, A^H], [A, 0]] leaves the
    Hermitian system (A A^H) y = rhs, solved by eigendecomposition with the
    given cutoff. Returns x and the relative constraint residual.
    """
    G = A @ A.conj().T
    factor = psd_factor(G, rcond)
    y = factor.U @ ((factor.U.conj().T @ rhs) / factor.lam)
    x = A.conj().T @ y
    scale = max(float(np.linalg.norm(rhs)), np.finfo(float).tiny)
    residual = float(np.linalg.norm(A @ x - rhs)) / scale
    return x, residual


@dataclass
class Extrapolation:
    """Result of Richardson extrapolation over levels N0, 2*N0, 4*N0, ..."""

    value: Union[float, np.ndarray]
    order: int
    error: float
    levels: List[int]
    raw: List[Any] = field(default_factory=list)

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.value)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "levels": list(self.levels),
            "raw": [np.asarray(r).tolist() if np.ndim(r) else r for r in self.raw],
            "order": self.order,
            "error": self.error,
        }


def richardson(
    values: Sequence[Union[float, np.ndarray]],
    levels: Sequence[int],
    rate: float = 1.0,
    order: Optional[int] = None,
) -> Extrapolation:
    """
    Adaptive Richardson extrapolation in N^-rate for levels that double.

    Column j removes the N^-(j*rate) error term. The column with the smallest
    change on the finest row wins unless `order` fixes it; vectors are
    compared in the max norm. Any non-finite level makes the result non-finite.
    """
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if len(values) != len(levels) or not values:
        raise ValueError(f"Need matching non-empty values and levels, got {len(values)} and {len(levels)}")
    rows = [np.asarray(v, dtype=complex if np.iscomplexobj(v) else float) for v in values]
    scalar = rows[0].ndim == 0
    if not all(np.all(np.isfinite(r)) for r in rows):
        inf = math.inf if scalar else np.full(rows[0].shape, np.inf)
        return Extrapolation(value=inf, order=0, error=math.inf, levels=list(levels), raw=list(values))

    K = len(rows)
    table: List[List[np.ndarray]] = [[r] for r in rows]
    for k in range(1, K):
        for j in range(1, k + 1):
            factor = 2.0 ** (j * rate)
            prev = table[k][j - 1]
            table[k].append(prev + (prev - table[k - 1][j - 1]) / (factor - 1.0))

    last = table[K - 1]
    errors = [math.inf if K < 2 else float(np.max(np.abs(rows[-1] - rows[-2])))]
    for j in range(1, K):
        errors.append(float(np.max(np.abs(last[j] - last[j - 1]))))
    best = int(np.argmin(errors)) if order is None else min(max(order, 0), K - 1)
    value = last[best]
    if scalar:
        value = value.item()
    return Extrapolation(value=value, order=best, error=errors[best], levels=list(levels), raw=list(values))


def doubling_ladder(N0: int, levels: int, basis_size, max_basis: int) -> List[int]:
    """N0, 2*N0, ... keeping at most `levels` entries whose basis fits in max_basis."""
    ladder = [N0]
    while len(ladder) < levels and basis_size(ladder[-1] * 2) <= max_basis:
        ladder.append(ladder[-1] * 2)
    return ladder
