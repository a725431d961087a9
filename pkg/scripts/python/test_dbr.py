#!/usr/bin/env python3
"""
Tests for de Branges-Rovnyak and Herglotz kernels, the two H(b) norm
estimators and the quasi-extremity verdict.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from dbr import (  # noqa: E402
    NOT_QUASI_EXTREME,
    QUASI_EXTREME,
    NodeSet,
    classify_trace,
    hb_norm_estimate,
    hb_norm_trunc,
    herglotz_cayley_eval,
    herglotz_kernel_eval,
    kb_eval,
    kernel_matrix,
    make_context,
    membership_bracket,
    membership_score,
    qe_verdict,
    sample_nodes,
)
from linalg_utils import ContractivityError  # noqa: E402
from poly import Poly  # noqa: E402
from settings import Tolerances  # noqa: E402

HALF_ONE_PLUS_Z = Poly.from_univariate([0.5, 0.5])
HALF_Z = Poly.from_univariate([0.0, 0.5])
Z = Poly.variable(1, 0)
TWO_VAR = Poly(2, {(1, 0): 0.5, (0, 2): 0.25})


def _points(rng, d, n, radius=0.85):
    z = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    z /= np.linalg.norm(z, axis=1)[:, None]
    return radius * rng.uniform(size=(n, 1)) ** (1 / (2 * d)) * z


def _explicit_nodes(points):
    return NodeSet(points=np.asarray(points, dtype=complex).reshape(len(points), -1), seed=None, radius=0.9)


# ============================================================================
# Kernels
# ============================================================================


def test_kb_eval_examples():
    assert kb_eval(Z, [0.3], [0.2 - 0.5j]) == pytest.approx(1.0)
    w = np.array([0.1 + 0.2j])
    assert kb_eval(Poly.zero(1), [0.4], w) == pytest.approx(1 / (1 - 0.4 * np.conj(w[0])))
    assert kb_eval(HALF_ONE_PLUS_Z, [0.0], [0.0]) == pytest.approx(0.75)


def test_herglotz_kernel_examples():
    w = [0.3j]
    assert herglotz_kernel_eval(Poly.zero(1), [0.5], w) == pytest.approx(1 / (1 - 0.5 * np.conj(0.3j)))
    assert herglotz_kernel_eval(HALF_ONE_PLUS_Z, [0.0], [0.0]) == pytest.approx(3.0)
    assert herglotz_kernel_eval(Z, [0.0], [0.0]) == pytest.approx(1.0)


def test_herglotz_kernel_singular_point():
    with pytest.raises(ValueError):
        herglotz_kernel_eval(Poly.from_univariate([0.0, 2.0]), [0.5], [0.1])


def test_points_outside_ball_rejected():
    with pytest.raises(ValueError):
        kb_eval(HALF_ONE_PLUS_Z, [1.0], [0.0])


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("b", [HALF_ONE_PLUS_Z, HALF_Z, TWO_VAR])
def test_kernel_symmetry_and_cayley_form(seed, b):
    rng = np.random.default_rng(seed)
    pts = _points(rng, b.dim, 10)
    for z, w in zip(pts[:5], pts[5:]):
        assert abs(kb_eval(b, z, w) - np.conj(kb_eval(b, w, z))) < 1e-12
        assert abs(herglotz_kernel_eval(b, z, w) - np.conj(herglotz_kernel_eval(b, w, z))) < 1e-12
        assert abs(herglotz_kernel_eval(b, z, w) - herglotz_cayley_eval(b, z, w)) < 1e-10


def test_kernel_matrix_examples():
    ctx = make_context(HALF_ONE_PLUS_Z, nodes=_explicit_nodes([0.0, 0.5]))
    K = kernel_matrix(ctx)
    expected = np.array([[0.75, 0.625], [0.625, 7 / 12]])
    assert np.allclose(K, expected, atol=1e-14)

    ctx = make_context(Poly.zero(1), nodes=_explicit_nodes([0.0]), allow_constant=True)
    assert np.allclose(kernel_matrix(ctx), [[1.0]])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_kernel_matrix_of_z_has_rank_one(seed):
    tol = Tolerances(seed=seed)
    ctx = make_context(Z, tol=tol)
    K = kernel_matrix(ctx)
    assert np.allclose(K, np.ones_like(K), atol=1e-12)
    s = np.linalg.svd(K, compute_uv=False)
    assert np.all(s[1:] <= 1e-10 * s[0])


# ============================================================================
# Context screening and nodes
# ============================================================================


def test_make_context_refuses_non_contractive_b():
    with pytest.raises(ContractivityError):
        make_context(Poly.from_univariate([0.6, 0.6]))


def test_make_context_refuses_constant_b():
    with pytest.raises(ValueError):
        make_context(Poly.constant(1, 0.6))


def test_make_context_refuses_low_degree():
    with pytest.raises(ValueError):
        make_context(TWO_VAR, N=1)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sample_nodes_is_seeded_and_prefix_stable(seed):
    small = sample_nodes(2, 30, seed, 0.9)
    large = sample_nodes(2, 600, seed, 0.9)
    assert np.array_equal(small.points, large.points[:30])
    assert np.array_equal(small.points, sample_nodes(2, 30, seed, 0.9).points)
    assert np.all(np.sum(np.abs(large.points) ** 2, axis=1) <= 0.81)
    assert len({tuple(p) for p in large.points}) == large.count


def test_sample_nodes_avoids_herglotz_singularities():
    b = Poly.from_univariate([0.0, 1.0])
    nodes = sample_nodes(1, 200, 3, 0.9, avoid=b, guard=0.2)
    assert np.all(np.abs(1.0 - b.evaluate(nodes.points)) >= 0.2)


def test_node_set_json_forms():
    nodes = sample_nodes(1, 12, 5, 0.8)
    assert nodes.to_dict() == {"seed": 5, "radius": 0.8, "count": 12}
    again = NodeSet.from_dict(nodes.to_dict(), d=1)
    assert np.array_equal(again.points, nodes.points)

    explicit = NodeSet.from_dict({"points": [[{"re": 0.1, "im": 0.2}], [{"re": -0.3}]]}, d=1)
    assert explicit.count == 2
    with pytest.raises(ValueError):
        NodeSet.from_dict({"points": [[{"re": 1.0, "im": 0.0}]]}, d=1)


# ============================================================================
# Estimators
# ============================================================================


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_membership_examples_for_z(seed):
    ctx = make_context(Z, tol=Tolerances(seed=seed))
    one = Poly.constant(1, 1.0)
    assert membership_score(ctx, one).value == pytest.approx(1.0, rel=1e-10)
    assert math.isinf(membership_score(ctx, Z, ctx.nodes.prefix(2)).value)


def test_membership_in_hardy_space_for_zero_b():
    ctx = make_context(Poly.zero(2), allow_constant=True, tol=Tolerances(nodes=8, stages=4))
    z1 = Poly.variable(2, 0)
    trace = [membership_score(ctx, z1, ctx.nodes.prefix(n)).value for n in ctx.tol.schedule]
    assert all(x <= 1.0 + 1e-6 for x in trace)
    assert trace[-1] > 0.9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_membership_is_monotone_under_adding_nodes(seed):
    ctx = make_context(HALF_ONE_PLUS_Z, tol=Tolerances(seed=seed))
    rng = np.random.default_rng(seed)
    pts = _points(rng, 1, 20)
    previous = 0.0
    for n in range(1, 9):
        score = membership_score(ctx, HALF_ONE_PLUS_Z, _explicit_nodes(pts[:n])).value
        assert score >= previous - 1e-9 * max(1.0, previous)
        previous = score


def test_unknown_kernel_rejected():
    ctx = make_context(HALF_Z)
    with pytest.raises(ValueError):
        membership_score(ctx, HALF_Z, kernel="szego")


def test_hb_norm_trunc_for_constant_b():
    f = Poly.from_univariate([1.0, -2.0, 0.5j])
    assert hb_norm_trunc(make_context(Poly.zero(1), allow_constant=True), f) == pytest.approx(1.0 + 4.0 + 0.25)
    c = 0.6
    ctx = make_context(Poly.constant(1, c), allow_constant=True)
    assert hb_norm_trunc(ctx, f) == pytest.approx(5.25 / (1 - c ** 2))


def test_hb_norm_of_half_one_plus_z():
    ctx = make_context(HALF_ONE_PLUS_Z)
    # degree-N section value is (6N + 1) / (2N + 3), increasing to 3
    for N in (2, 5, 20):
        assert hb_norm_trunc(ctx, HALF_ONE_PLUS_Z, N) == pytest.approx((6 * N + 1) / (2 * N + 3), rel=1e-9)
    est = hb_norm_estimate(ctx, HALF_ONE_PLUS_Z)
    assert 2.99 <= est.value <= 3.01


def test_hb_norm_outside_section_is_infinite():
    ctx = make_context(Z)
    assert math.isinf(hb_norm_trunc(ctx, Z))
    assert not hb_norm_estimate(ctx, Z).is_finite


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_estimators_agree_for_half_z(seed):
    ctx = make_context(HALF_Z, tol=Tolerances(seed=seed))
    trunc = hb_norm_estimate(ctx, HALF_Z).value
    score = membership_score(ctx, HALF_Z).value
    assert trunc == pytest.approx(1 / 3, rel=1e-6)
    assert abs(trunc - score) / trunc <= 0.01


def test_membership_bracket():
    schedule = [16, 32, 64, 128, 256]
    slow = [3.0 - n ** -0.5 for n in schedule]
    low, high = membership_bracket(slow, schedule, 1)
    assert low == slow[-1]
    assert low < 3.0 < high < 3.2
    assert membership_bracket([1 / 3] * 5, schedule, 1) == (1 / 3, 1 / 3)
    assert membership_bracket([1.0, math.inf], schedule[:2], 1) == (math.inf, math.inf)
    # a decreasing tail (rounding) never pulls the upper end below the last score
    assert membership_bracket([2.0, 1.999], schedule[:2], 2) == (1.999, 1.999)


@pytest.mark.parametrize("b, seed", [(HALF_ONE_PLUS_Z, 42), (HALF_Z, 0), (HALF_Z, 1)])
def test_verdict_cross_check_passes_for_non_extreme_fixtures(b, seed):
    verdict = qe_verdict(make_context(b, tol=Tolerances(seed=seed)))
    low, high = verdict.evidence["bMembership"]["limitBracket"]
    trunc = verdict.evidence["hbNormEstimate"]["value"]
    assert low * 0.99 <= trunc <= high * 1.01
    assert verdict.evidence["estimatorsAgree"] is True


# ============================================================================
# Verdict
# ============================================================================


def test_classify_trace():
    tol = Tolerances()
    assert classify_trace([1.0, math.inf, math.inf], 1.0, tol) == "diverge"
    assert classify_trace([1.0, 2.0e7], 1.0, tol) == "diverge"
    assert classify_trace([1.0, 2.0, 2.001, 2.0015], 1.0, tol) == "plateau"
    assert classify_trace([1.0, 2.0, 4.0], 1.0, tol) == "undecided"
    assert classify_trace([1.0, math.inf, 2.0], 1.0, tol) == "undecided"


def test_verdict_for_z_is_quasi_extreme():
    verdict = qe_verdict(make_context(Z))
    assert verdict.status == QUASI_EXTREME
    assert verdict.evidence["bMembership"]["class"] == "diverge"
    assert verdict.evidence["constantsHerglotz"]["class"] == "diverge"
    assert verdict.evidence["constantsCriterion"] == "herglotz"
    assert abs(verdict.evidence["minDefect"]["value"]) <= 1e-8
    # k^z = 1, so H(z) is the constants with ||1||_b = 1
    hb_one = verdict.evidence["constantsHb"]
    assert all(entry["value"] == pytest.approx(1.0, rel=1e-8) for entry in hb_one["trace"])
    assert hb_one["class"] == "plateau"


@pytest.mark.parametrize("b", [HALF_ONE_PLUS_Z, HALF_Z])
def test_verdict_for_non_extreme_fixtures(b):
    verdict = qe_verdict(make_context(b))
    assert verdict.status == NOT_QUASI_EXTREME
    assert verdict.evidence["minDefect"]["value"] > 0.2
    assert set(verdict.evidence["notEvaluated"]) == {"unique_admissible_tuple", "unique_gleason_solution"}
    assert len(verdict.evidence["bMembership"]["trace"]) == len(verdict.evidence["schedule"])
    assert len(verdict.evidence["constantsHb"]["trace"]) == len(verdict.evidence["schedule"])


def test_constants_are_scored_in_hb_when_b_does_not_vanish_at_origin():
    verdict = qe_verdict(make_context(HALF_ONE_PLUS_Z))
    assert verdict.evidence["constantsCriterion"] == "hb"
    hb_one = verdict.evidence["constantsHb"]
    assert hb_one["class"] == "plateau"
    values = [entry["value"] for entry in hb_one["trace"]]
    assert all(math.isfinite(v) for v in values)
    # ||1||_b^2 = 2 for b = (1 + z)/2; node scores approach it from below
    assert 1.9 <= values[-1] <= 2.0 + 1e-6


def test_verdict_for_two_variables_reports_evidence():
    verdict = qe_verdict(make_context(Poly(2, {(1, 0): 1.0}), N=8))
    assert verdict.status in {QUASI_EXTREME, NOT_QUASI_EXTREME, "Inconclusive"}
    keys = {"bMembership", "constantsHb", "constantsHerglotz", "constantsCriterion", "minDefect", "estimatorsAgree"}
    assert keys <= verdict.evidence.keys()
    assert verdict.evidence["constantsCriterion"] == "herglotz"


def test_verdict_rejects_constant_b():
    ctx = make_context(Poly.constant(1, 0.2), allow_constant=True)
    with pytest.raises(ValueError):
        qe_verdict(ctx)
