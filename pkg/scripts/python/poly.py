"""
Multi-indices, words and sparse polynomials on the unit ball of C^d.

Polynomials are stored as {alpha: coefficient} maps with zero coefficients
dropped. The Drury-Arveson norm of a monomial is ||z^alpha||^2 = alpha!/|alpha|!,
computed once in exact rational arithmetic by monomial_weight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

MultiIndex = Tuple[int, ...]
Word = Tuple[int, ...]
Scalar = Union[int, float, complex]


def graded_key(alpha: MultiIndex) -> Tuple[int, Tuple[int, ...]]:
    """Sort key for graded lexicographic order: degree first, then (1,0) before (0,1)."""
    return (sum(alpha), tuple(-a for a in alpha))


@lru_cache(maxsize=None)
def monomial_weight(alpha: MultiIndex) -> Fraction:
    """Exact weight alpha!/|alpha|! of z^alpha in H^2_d."""
    if any(a < 0 for a in alpha):
        raise ValueError(f"Multi-index has negative entries: {alpha}")
    numerator = 1
    for a in alpha:
        numerator *= factorial(a)
    return Fraction(numerator, factorial(sum(alpha)))


def _indices_of_degree(d: int, n: int) -> List[MultiIndex]:
    if d == 1:
        return [(n,)]
    out: List[MultiIndex] = []
    for first in range(n, -1, -1):
        for rest in _indices_of_degree(d - 1, n - first):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def enumerate_basis(d: int, N: int) -> Tuple[MultiIndex, ...]:
    """All multi-indices with |alpha| <= N in graded lexicographic order."""
    if d < 1:
        raise ValueError(f"Dimension must be >= 1, got {d}")
    if N < 0:
        raise ValueError(f"Degree must be >= 0, got {N}")
    basis: List[MultiIndex] = []
    for n in range(N + 1):
        basis.extend(_indices_of_degree(d, n))
    assert len(basis) == comb(N + d, d)
    return tuple(basis)


@lru_cache(maxsize=None)
def basis_index(d: int, N: int) -> Dict[MultiIndex, int]:
    return {alpha: i for i, alpha in enumerate(enumerate_basis(d, N))}


def unit_index(d: int, j: int) -> MultiIndex:
    """Multi-index e_j (0-based j)."""
    if not 0 <= j < d:
        raise ValueError(f"Variable index {j} out of range for d={d}")
    return tuple(1 if i == j else 0 for i in range(d))


def add_index(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub_index(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex | None:
    """alpha - beta, or None when some entry would go negative."""
    diff = tuple(a - b for a, b in zip(alpha, beta))
    if any(x < 0 for x in diff):
        return None
    return diff


@dataclass(frozen=True)
class Poly:
    """Sparse polynomial in d variables with complex coefficients."""

    dim: int
    coeffs: Dict[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"Dimension must be >= 1, got {self.dim}")
        cleaned: Dict[MultiIndex, complex] = {}
        for alpha, c in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim:
                raise ValueError(f"Multi-index {alpha} has length {len(alpha)}, expected {self.dim}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"Multi-index has negative entries: {alpha}")
            c = complex(c)
            if c != 0:
                cleaned[alpha] = cleaned.get(alpha, 0j) + c
        cleaned = {k: v for k, v in cleaned.items() if v != 0}
        object.__setattr__(self, "coeffs", dict(sorted(cleaned.items(), key=lambda kv: graded_key(kv[0]))))

    # ------------------------------------------------------------------ constructors

    @classmethod
    def zero(cls, d: int) -> "Poly":
        return cls(d, {})

    @classmethod
    def constant(cls, d: int, c: Scalar) -> "Poly":
        return cls(d, {(0,) * d: c})

    @classmethod
    def variable(cls, d: int, j: int) -> "Poly":
        """The coordinate function z_{j+1} (0-based j)."""
        return cls(d, {unit_index(d, j): 1.0})

    @classmethod
    def from_dense(cls, d: int, N: int, values: Sequence[Scalar]) -> "Poly":
        """Coefficient vector in enumerate_basis(d, N) order."""
        basis = enumerate_basis(d, N)
        if len(values) != len(basis):
            raise ValueError(f"Expected {len(basis)} coefficients for d={d}, N={N}, got {len(values)}")
        return cls(d, {alpha: c for alpha, c in zip(basis, values)})

    @classmethod
    def from_univariate(cls, values: Sequence[Scalar]) -> "Poly":
        return cls(1, {(k,): c for k, c in enumerate(values)})

    # ------------------------------------------------------------------ properties

    @property
    def degree(self) -> int:
        """Maximal total degree; -1 stands for the degree of the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(sum(alpha) for alpha in self.coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return self.degree <= 0

    def coefficient(self, alpha: Iterable[int]) -> complex:
        return self.coeffs.get(tuple(alpha), 0j)

    def at_origin(self) -> complex:
        return self.coefficient((0,) * self.dim)

    def to_dense(self, N: int) -> np.ndarray:
        """Coefficients in enumerate_basis(d, N) order; raises if degree > N."""
        if self.degree > N:
            raise ValueError(f"Polynomial of degree {self.degree} does not fit in P_{N}")
        index = basis_index(self.dim, N)
        out = np.zeros(len(index), dtype=complex)
        for alpha, c in self.coeffs.items():
            out[index[alpha]] = c
        return out

    # ------------------------------------------------------------------ arithmetic

    def _check_dim(self, other: "Poly") -> None:
        if not isinstance(other, Poly):
            raise TypeError(f"Expected Poly, got {type(other).__name__}")
        if other.dim != self.dim:
            raise ValueError(f"Dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: Union["Poly", Scalar]) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.constant(self.dim, other)
        self._check_dim(other)
        out = dict(self.coeffs)
        for alpha, c in other.coeffs.items():
            out[alpha] = out.get(alpha, 0j) + c
        return Poly(self.dim, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.dim, {alpha: -c for alpha, c in self.coeffs.items()})

    def __sub__(self, other: Union["Poly", Scalar]) -> "Poly":
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "Poly":
        return (-self) + other

    def scale(self, c: Scalar) -> "Poly":
        return Poly(self.dim, {alpha: c * v for alpha, v in self.coeffs.items()})

    def __mul__(self, other: Union["Poly", Scalar]) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        self._check_dim(other)
        out: Dict[MultiIndex, complex] = {}
        for alpha, c in self.coeffs.items():
            for beta, e in other.coeffs.items():
                gamma = add_index(alpha, beta)
                out[gamma] = out.get(gamma, 0j) + c * e
        return Poly(self.dim, out)

    def __rmul__(self, other: Scalar) -> "Poly":
        return self.scale(other)

    def truncate(self, N: int) -> "Poly":
        return Poly(self.dim, {alpha: c for alpha, c in self.coeffs.items() if sum(alpha) <= N})

    def homogeneous_part(self, n: int) -> "Poly":
        return Poly(self.dim, {alpha: c for alpha, c in self.coeffs.items() if sum(alpha) == n})

    def conj(self) -> "Poly":
        """Polynomial with conjugated coefficients, z -> conj(p(conj z))."""
        return Poly(self.dim, {alpha: c.conjugate() for alpha, c in self.coeffs.items()})

    def max_abs_diff(self, other: "Poly") -> float:
        diff = self - other
        return max((abs(c) for c in diff.coeffs.values()), default=0.0)

    # ------------------------------------------------------------------ evaluation

    def evaluate(self, z: Union[Sequence[Scalar], np.ndarray]) -> Union[complex, np.ndarray]:
        """Value at one point (shape (d,)) or at a batch of points (shape (n, d))."""
        pts = np.asarray(z, dtype=complex)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"Points must have shape (d,) or (n, d) with d={self.dim}, got {np.shape(z)}")
        out = np.zeros(pts.shape[0], dtype=complex)
        for alpha, c in self.coeffs.items():
            out += c * np.prod(pts ** np.asarray(alpha), axis=1)
        return complex(out[0]) if single else out

    def __call__(self, z):
        return self.evaluate(z)

    # ------------------------------------------------------------------ JSON

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.dim,
            "coeffs": [
                {"alpha": list(alpha), "re": float(c.real), "im": float(c.imag)}
                for alpha, c in self.coeffs.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Poly":
        if not isinstance(data, dict) or "d" not in data or "coeffs" not in data:
            raise ValueError("Poly JSON needs keys 'd' and 'coeffs'")
        d = int(data["d"])
        coeffs: Dict[MultiIndex, complex] = {}
        for entry in data["coeffs"]:
            try:
                alpha = tuple(int(a) for a in entry["alpha"])
                value = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            except (KeyError, TypeError, ValueError) as e:
                raise ValueError(f"Malformed Poly coefficient entry {entry!r}: {e}") from e
            if alpha in coeffs:
                raise ValueError(f"Duplicate multi-index {alpha} in Poly JSON")
            coeffs[alpha] = value
        return cls(d, coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Poly":
        path = Path(path)
        try:
            with path.open("r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Malformed JSON in {path}: {e}") from e
        return cls.from_dict(data)

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"Poly(d={self.dim}, 0)"
        terms = ", ".join(f"{alpha}: {c:.6g}" for alpha, c in self.coeffs.items())
        return f"Poly(d={self.dim}, {{{terms}}})"


def monomials_at(points: np.ndarray, basis: Sequence[MultiIndex]) -> np.ndarray:
    """Matrix of z^alpha values, shape (n_points, len(basis))."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    exps = np.asarray(basis, dtype=int)
    return np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
