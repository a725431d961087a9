#!/usr/bin/env python3
"""
Tests for the truncated Fock space, symmetrization and the minimal-word shift.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from fock import (  # noqa: E402
    FockCoeffs,
    column_contractivity_fock,
    free_operator_norm,
    left_creation_matrix,
    lift_ordered,
    lift_symmetric,
    profile,
    random_column_pair,
    shift_nonvanishing,
    symbol_norms,
    symmetrize,
    word_index,
    words,
)
from poly import Poly  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[2] / "inputs" / "fixtures"


def test_words_are_ordered_by_length_then_lex():
    assert words(2, 2) == ((), (1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2))
    assert len(words(3, 3)) == 1 + 3 + 9 + 27
    assert profile((2, 1, 2), 2) == (1, 2)
    with pytest.raises(ValueError):
        words(0, 2)


@pytest.mark.parametrize("d,L", [(1, 4), (2, 3), (3, 2)])
def test_creation_operator_relations(d, L):
    index = word_index(d, L)
    short = [col for w, col in index.items() if len(w) < L]
    mats = [left_creation_matrix(i, L, d) for i in range(1, d + 1)]
    for i, Mi in enumerate(mats):
        for j, Mj in enumerate(mats):
            gram = (Mi.T @ Mj)[np.ix_(short, short)]
            assert np.allclose(gram, np.eye(len(short)) if i == j else 0.0)
    range_projection = sum(M @ M.T for M in mats)
    expected = np.diag([0.0 if not w else 1.0 for w in index])
    assert np.allclose(range_projection, expected)


def test_creation_operator_rejects_bad_letter():
    with pytest.raises(ValueError):
        left_creation_matrix(3, 2, 2)


def test_fock_coeffs_validation():
    with pytest.raises(ValueError):
        FockCoeffs(2, 3, {(1, 3): 1.0})
    with pytest.raises(ValueError):
        FockCoeffs(2, 1, {(1, 2): 1.0})
    with pytest.raises(ValueError):
        FockCoeffs.from_dict({"d": 2, "coeffs": []})
    F = FockCoeffs(2, 3, {(2,): 1.0, (1, 2): 0.0, (): 0.5})
    assert list(F.coeffs) == [(), (2,)]
    assert F.degree == 1
    assert FockCoeffs.from_dict(F.to_dict()).coeffs == F.coeffs


def test_symmetrize_examples():
    assert symmetrize(FockCoeffs(2, 2, {(1, 2): 0.5})) == Poly(2, {(1, 1): 0.5})
    assert symmetrize(FockCoeffs(2, 2, {(1, 2): 1.0, (2, 1): 2.0})) == Poly(2, {(1, 1): 3.0})
    assert symmetrize(FockCoeffs(2, 2, {(1, 2): 1.0, (2, 1): -1.0})).is_zero


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_lifts_invert_symmetrization(seed):
    rng = np.random.default_rng(seed)
    p = Poly(2, {(0, 0): rng.normal(), (1, 1): complex(rng.normal(), rng.normal()), (0, 2): rng.normal()})
    assert symmetrize(lift_symmetric(p)).max_abs_diff(p) < 1e-14
    assert symmetrize(lift_ordered(p)).max_abs_diff(p) < 1e-14
    spread = lift_symmetric(Poly(2, {(1, 1): 1.0}))
    assert spread.coeffs == {(1, 2): 0.5, (2, 1): 0.5}


def test_shift_examples():
    A = FockCoeffs.load(FIXTURES / "fock_A_word12.json")
    v, shifted = shift_nonvanishing(A)
    assert v == (1, 2)
    assert shifted.coeffs == {(): 0.5}
    assert shifted.L == 2

    A = FockCoeffs(2, 3, {(2,): 1.0, (1, 1): 3.0, (2, 1): -1.0})
    v, shifted = shift_nonvanishing(A)
    assert v == (2,)
    assert shifted.coeffs == {(): 1.0, (1,): -1.0}

    with pytest.raises(ValueError):
        shift_nonvanishing(FockCoeffs(2, 3, {}))


def test_column_contractivity_examples():
    zero = FockCoeffs(2, 3, {})
    L1 = FockCoeffs(2, 3, {(1,): 1.0})
    L2 = FockCoeffs(2, 3, {(2,): 1.0})
    assert column_contractivity_fock(zero, zero, 3) == pytest.approx(1.0)
    assert column_contractivity_fock(L1, zero, 3) == pytest.approx(0.0, abs=1e-12)
    assert column_contractivity_fock(L1, L2, 3) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        column_contractivity_fock(FockCoeffs(1, 3, {}), zero, 3)


def test_free_operator_norm_examples():
    assert free_operator_norm(FockCoeffs(2, 3, {(1,): 1.0}), 3) == pytest.approx(1.0)
    assert free_operator_norm(FockCoeffs.load(FIXTURES / "fock_A_word12.json"), 4) == pytest.approx(0.5)
    assert free_operator_norm(FockCoeffs(2, 3, {}), 3) == 0.0


@pytest.mark.parametrize("seed", range(25))
def test_shift_preserves_column_contractivity(seed):
    rng = np.random.default_rng(seed)
    L = 5
    B, A = random_column_pair(2, 2, L, rng)
    assert A.at_empty() == 0
    before = column_contractivity_fock(B, A, L)
    assert before >= -1e-10
    v, shifted = shift_nonvanishing(A)
    assert abs(symmetrize(shifted).at_origin()) > 0
    after = column_contractivity_fock(B, shifted, L - len(v))
    assert before - after <= 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_symbol_norms_order(seed):
    rng = np.random.default_rng(seed)
    _, A = random_column_pair(2, 2, 4, rng)
    norms = symbol_norms(A, 4)
    assert norms["multiplierNormLower"] <= norms["freeOperatorNorm"] + 1e-8

    commutator = FockCoeffs(2, 2, {(1, 2): 1.0, (2, 1): -1.0})
    norms = symbol_norms(commutator, 3)
    assert norms["multiplierNormLower"] == 0.0
    assert norms["freeOperatorNorm"] >= np.sqrt(2) - 1e-12
