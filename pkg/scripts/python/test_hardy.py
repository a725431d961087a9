#!/usr/bin/env python3
"""
Tests for the truncated Drury-Arveson space: inner products, multiplier
adjoints and positivity compressions.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from hardy import (  # noqa: E402
    column_positivity,
    column_positivity_trace,
    h2_inner,
    mult_adjoint_apply,
    mult_matrix,
    multiplier_norm_lower,
    positivity_matrix,
    shift_matrix,
    truncated_space,
)
from poly import Poly, enumerate_basis  # noqa: E402


def _random_poly(rng, d, degree):
    basis = enumerate_basis(d, degree)
    values = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return Poly.from_dense(d, degree, values)


def test_h2_inner_examples():
    z1, z2 = Poly.variable(2, 0), Poly.variable(2, 1)
    one = Poly.constant(2, 1)
    assert h2_inner(z1, z1) == pytest.approx(1.0)
    assert h2_inner(z1 * z2, z1 * z2) == pytest.approx(0.5)
    assert h2_inner(one, z1) == 0


def test_mult_adjoint_examples():
    z1 = Poly.variable(2, 0)
    assert mult_adjoint_apply(z1, z1) == Poly.constant(2, 1.0)
    b = Poly(2, {(0, 0): 0.3 + 0.4j, (1, 1): 2.0})
    assert mult_adjoint_apply(b, Poly.constant(2, 1.0)) == Poly.constant(2, 0.3 - 0.4j)
    assert mult_adjoint_apply(Poly.zero(2), z1).is_zero


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_mult_adjoint_is_adjoint(seed, d):
    rng = np.random.default_rng(seed)
    b = _random_poly(rng, d, 2)
    f = _random_poly(rng, d, 4)
    for g in (_random_poly(rng, d, 1), _random_poly(rng, d, 2)):
        lhs = h2_inner(mult_adjoint_apply(b, f), g)
        rhs = h2_inner(f, b * g)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))
    assert mult_adjoint_apply(b, f).degree <= f.degree


def test_coordinates_are_orthonormal():
    rng = np.random.default_rng(3)
    space = truncated_space(2, 4)
    p, q = _random_poly(rng, 2, 4), _random_poly(rng, 2, 4)
    assert np.vdot(space.coords(q), space.coords(p)) == pytest.approx(h2_inner(p, q))
    assert space.poly(space.coords(p)).max_abs_diff(p) < 1e-12
    assert space.weights.min() > 0


def test_shift_matrix_matches_multiplication():
    rng = np.random.default_rng(4)
    f = _random_poly(rng, 2, 3)
    space = truncated_space(2, 3)
    for j in range(2):
        shifted = space.poly(shift_matrix(2, 3, j) @ space.coords(f))
        expected = (Poly.variable(2, j) * f).truncate(3)
        assert shifted.max_abs_diff(expected) < 1e-12


def test_mult_matrix_adjoint_matches_polynomial_adjoint():
    rng = np.random.default_rng(5)
    b = _random_poly(rng, 2, 2)
    f = _random_poly(rng, 2, 5)
    M = mult_matrix(b, 3, 5)
    src, dst = truncated_space(2, 3), truncated_space(2, 5)
    via_matrix = src.poly(M.conj().T @ dst.coords(f))
    assert via_matrix.max_abs_diff(mult_adjoint_apply(b, f).truncate(3)) < 1e-10


def test_column_positivity_examples():
    c = 0.6
    b = Poly.constant(1, c)
    a = Poly.constant(1, np.sqrt(1 - c ** 2))
    assert abs(column_positivity(b, a, 6)) < 1e-12

    b = Poly.from_univariate([0.5, 0.5])
    a = Poly.from_univariate([0.5, -0.5])
    assert abs(column_positivity(b, a, 10)) < 1e-10

    z = Poly.variable(1, 0)
    assert column_positivity(z, z, 5) == pytest.approx(-1.0)


def test_multiplier_norm_lower_examples():
    z = Poly.variable(1, 0)
    for N in (1, 4, 9):
        assert multiplier_norm_lower(z, N) == pytest.approx(1.0)
    assert multiplier_norm_lower(Poly.constant(2, 0.3 - 0.4j), 3) == pytest.approx(0.5)

    rotated = Poly(2, {(1, 0): 1 / np.sqrt(2), (0, 1): 1 / np.sqrt(2)})
    bounds = [multiplier_norm_lower(rotated, N) for N in range(1, 9)]
    assert all(x <= 1.0 + 1e-12 for x in bounds)
    assert all(a <= b + 1e-12 for a, b in zip(bounds, bounds[1:]))
    assert bounds[-1] > 0.9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_positivity_matrix_is_hermitian_and_nested(seed):
    rng = np.random.default_rng(seed)
    b = _random_poly(rng, 2, 2)
    b = b.scale(0.5 / multiplier_norm_lower(b, 8))
    a = Poly.zero(2)
    Q = positivity_matrix(b, a, 6)
    assert np.allclose(Q, Q.conj().T)
    trace = column_positivity_trace(b, a, 6)
    assert min(trace) >= -1e-10
    assert all(later <= earlier + 1e-10 for earlier, later in zip(trace, trace[1:]))
    assert trace[-1] == pytest.approx(column_positivity(b, a, 6), abs=1e-12)
