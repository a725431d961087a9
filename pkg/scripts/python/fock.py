"""
Truncated full Fock space over C^d.

Words are tuples of letters 1..d ordered by (length, lexicographic). The left
creation operator L_i sends e_w to e_{iw}; a free polynomial F = sum_w f_w L^w
acts by F e_u = sum_w f_w e_{wu}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from hardy import multiplier_norm_lower
from linalg_utils import min_eig
from poly import MultiIndex, Poly, Word


@lru_cache(maxsize=None)
def words(d: int, L: int) -> Tuple[Word, ...]:
    """All words of length <= L, by length then lexicographically."""
    if d < 1 or L < 0:
        raise ValueError(f"Need d >= 1 and L >= 0, got d={d}, L={L}")
    out = []
    for n in range(L + 1):
        out.extend(product(range(1, d + 1), repeat=n))
    return tuple(out)


@lru_cache(maxsize=None)
def word_index(d: int, L: int) -> Dict[Word, int]:
    return {w: i for i, w in enumerate(words(d, L))}


def word_key(w: Word) -> Tuple[int, Word]:
    return (len(w), w)


def profile(w: Word, d: int) -> MultiIndex:
    """Commutative exponent of a word: letter counts."""
    counts = [0] * d
    for letter in w:
        counts[letter - 1] += 1
    return tuple(counts)


@dataclass(frozen=True)
class FockCoeffs:
    d: int
    L: int
    coeffs: Dict[Word, complex] = field(default_factory=dict)

    def __post_init__(self):
        cleaned: Dict[Word, complex] = {}
        for w, c in self.coeffs.items():
            w = tuple(int(x) for x in w)
            if any(not 1 <= x <= self.d for x in w):
                raise ValueError(f"Word {w} has letters outside 1..{self.d}")
            if len(w) > self.L:
                raise ValueError(f"Word {w} is longer than L={self.L}")
            c = complex(c)
            if c != 0:
                cleaned[w] = c
        object.__setattr__(self, "coeffs", dict(sorted(cleaned.items(), key=lambda kv: word_key(kv[0]))))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.coeffs), default=-1)

    def at_empty(self) -> complex:
        return self.coeffs.get((), 0j)

    def with_length(self, L: int) -> "FockCoeffs":
        return FockCoeffs(self.d, L, {w: c for w, c in self.coeffs.items() if len(w) <= L})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "L": self.L,
            "coeffs": [{"word": list(w), "re": c.real, "im": c.imag} for w, c in self.coeffs.items()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FockCoeffs":
        if not isinstance(data, dict) or not {"d", "L", "coeffs"} <= data.keys():
            raise ValueError("FockCoeffs JSON needs keys 'd', 'L' and 'coeffs'")
        coeffs: Dict[Word, complex] = {}
        for entry in data["coeffs"]:
            try:
                w = tuple(int(x) for x in entry["word"])
                coeffs[w] = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            except (KeyError, TypeError, ValueError) as e:
                raise ValueError(f"Malformed FockCoeffs entry {entry!r}: {e}") from e
        return cls(int(data["d"]), int(data["L"]), coeffs)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FockCoeffs":
        path = Path(path)
        try:
            with path.open("r", encoding="utf-8") as f:
                return cls.from_dict(json.load(f))
        except json.JSONDecodeError as e:
            raise ValueError(f"Malformed JSON in {path}: {e}") from e


def left_creation_matrix(i: int, L: int, d: int) -> np.ndarray:
    """L_i on words of length <= L; words that would exceed L are sent to 0."""
    if not 1 <= i <= d:
        raise ValueError(f"Letter {i} out of range 1..{d}")
    index = word_index(d, L)
    M = np.zeros((len(index), len(index)))
    for w, col in index.items():
        if len(w) < L:
            M[index[(i,) + w], col] = 1.0
    return M


def operator_matrix(F: FockCoeffs, L: int, L_out: Optional[int] = None) -> np.ndarray:
    """F e_u = sum_w f_w e_{wu} from words of length <= L into words of length <= L_out (default L)."""
    L_out = L if L_out is None else L_out
    src = word_index(F.d, L)
    dst = word_index(F.d, L_out)
    M = np.zeros((len(dst), len(src)), dtype=complex)
    for u, col in src.items():
        for w, c in F.coeffs.items():
            row = dst.get(w + u)
            if row is not None:
                M[row, col] += c
    return M


def free_operator_norm(F: FockCoeffs, L: int) -> float:
    """Norm of F from words of length <= L into words of length <= L + deg F."""
    if F.is_zero:
        return 0.0
    return float(np.linalg.norm(operator_matrix(F, L, L + F.degree), 2))


def symmetrize(F: FockCoeffs) -> Poly:
    """lambda(F): coefficient of z^alpha is the sum of f_w over words with profile alpha."""
    out: Dict[MultiIndex, complex] = {}
    for w, c in F.coeffs.items():
        alpha = profile(w, F.d)
        out[alpha] = out.get(alpha, 0j) + c
    return Poly(F.d, out)


def lift_ordered(p: Poly, L: Optional[int] = None) -> FockCoeffs:
    """p(L) with z^alpha -> L_1^alpha_1 ... L_d^alpha_d."""
    L = max(p.degree, 0) if L is None else L
    coeffs: Dict[Word, complex] = {}
    for alpha, c in p.coeffs.items():
        w = tuple(letter for letter, a in enumerate(alpha, start=1) for _ in range(a))
        coeffs[w] = c
    return FockCoeffs(p.dim, L, coeffs)


def lift_symmetric(p: Poly, L: Optional[int] = None) -> FockCoeffs:
    """Spread p_alpha evenly over every word with profile alpha."""
    L = max(p.degree, 0) if L is None else L
    coeffs: Dict[Word, complex] = {}
    for alpha, c in p.coeffs.items():
        matching = [w for w in words(p.dim, sum(alpha)) if len(w) == sum(alpha) and profile(w, p.dim) == alpha]
        for w in matching:
            coeffs[w] = c / len(matching)
    return FockCoeffs(p.dim, L, coeffs)


def shift_nonvanishing(A: FockCoeffs, tol: float = 0.0) -> Tuple[Word, FockCoeffs]:
    """
    v = first word (length, then lex) with |c_v| > tol, and A~ = L_v* A with
    coefficients c~_u = c_{vu}; A~ lives on words of length <= L - |v|.
    """
    nonzero = [w for w, c in A.coeffs.items() if abs(c) > tol]
    if not nonzero:
        raise ValueError("A is zero; there is no word with a nonvanishing coefficient")
    v = min(nonzero, key=word_key)
    shifted = {w[len(v):]: c for w, c in A.coeffs.items() if w[: len(v)] == v}
    return v, FockCoeffs(A.d, A.L - len(v), shifted)


def column_contractivity_fock(B: FockCoeffs, A: FockCoeffs, L: int) -> float:
    """lambda_min(I - B^H B - A^H A) on words of length <= L (a necessary condition only)."""
    if B.d != A.d:
        raise ValueError(f"Dimension mismatch: {B.d} vs {A.d}")
    Q = np.eye(len(word_index(A.d, L)), dtype=complex)
    for F in (B, A):
        M = operator_matrix(F, L, L + max(F.degree, 0))
        Q -= M.conj().T @ M
    return min_eig(Q)


def random_free_polynomial(d: int, degree: int, rng: np.random.Generator, constant: bool = True) -> FockCoeffs:
    coeffs = {}
    for w in words(d, degree):
        if not w and not constant:
            continue
        coeffs[w] = complex(rng.normal(), rng.normal())
    return FockCoeffs(d, degree, coeffs)


def random_column_pair(
    d: int,
    degree: int,
    L: int,
    rng: np.random.Generator,
) -> Tuple[FockCoeffs, FockCoeffs]:
    """Random (B, A) with A(empty word) = 0, scaled so the column [B; A] is contractive on words <= L."""
    B = random_free_polynomial(d, degree, rng)
    A = random_free_polynomial(d, degree, rng, constant=False)
    stacked = np.vstack([operator_matrix(B, L, L + degree), operator_matrix(A, L, L + degree)])
    scale = 1.0 / float(np.linalg.norm(stacked, 2))

    def rescale(F: FockCoeffs) -> FockCoeffs:
        return FockCoeffs(F.d, L, {w: c * scale for w, c in F.coeffs.items()})

    return rescale(B), rescale(A)


def symbol_norms(F: FockCoeffs, N: int) -> Dict[str, float]:
    """Free operator norm of F next to the multiplier lower bound of lambda(F); no equality is implied."""
    return {
        "freeOperatorNorm": free_operator_norm(F, N),
        "multiplierNormLower": multiplier_norm_lower(symmetrize(F), N),
    }
