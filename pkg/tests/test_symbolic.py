# tests/test_symbolic.py
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from hybrid.errors import DegenerateVariance, DomainError, NotConjugate, NotRoot, UnknownParent
from hybrid.symbolic import (
    AffineExpr, BernoulliParams, Blocked, GaussianParams, NeedsApprox, SymBernoulli, SymDelta, SymGaussian,
    SymbolicState, dump,
)


def gaussian(mean, variance, **terms):
    return SymGaussian(AffineExpr.build(mean, {int(k[1:]): v for k, v in terms.items()}), variance)


def kalman_step(prior_mean, prior_var, obs, q, r):
    m, v = prior_mean, prior_var + q
    k = v / (v + r)
    return m + k * (obs - m), (1 - k) * v


# ============================================================
# AFFINE EXPRESSIONS
# ============================================================

def test_affine_canonical_form():
    e = AffineExpr.var(0, 2.0) + AffineExpr.var(1) - AffineExpr.var(0, 2.0) + AffineExpr.const(3.0)
    assert e.terms == ((1, 1.0),)
    assert e.intercept == 3.0
    assert e.substitute(1, 4.0) == AffineExpr.const(7.0)


def test_affine_substitute_expr():
    e = AffineExpr.build(1.0, {0: 2.0, 1: 1.0})
    out = e.substitute_expr(0, AffineExpr.build(0.5, {2: 3.0}))
    assert out == AffineExpr.build(2.0, {1: 1.0, 2: 6.0})


# ============================================================
# GRAPH OPERATIONS
# ============================================================

def test_assume_folds_realized_parents():
    s = SymbolicState()
    a = s.assume(SymDelta(2.0))
    b = s.assume(gaussian(1.0, 1.0, n0=3.0))
    assert a == 0
    assert s.node(b).dist == SymGaussian(AffineExpr.const(7.0), 1.0)


def test_assume_rejects_bad_parameters():
    s = SymbolicState()
    with pytest.raises(DegenerateVariance):
        s.assume(gaussian(0.0, 0.0))
    with pytest.raises(DomainError):
        s.assume(SymBernoulli(1.5))
    with pytest.raises(UnknownParent):
        s.assume(gaussian(0.0, 1.0, n7=1.0))


def test_swap_two_nodes_matches_closed_form():
    s = SymbolicState()
    p = s.assume(gaussian(1.0, 4.0))
    c = s.assume(gaussian(0.5, 1.0, n0=2.0))
    s.swap(c, p)
    child, parent = s.node(c).dist, s.node(p).dist
    assert child.mean == AffineExpr.const(2.5)
    assert child.variance == pytest.approx(17.0)
    # Posterior of p given c: precision-weighted.
    gain = 2.0 * 4.0 / 17.0
    assert parent.mean.coef(c) == pytest.approx(gain)
    assert parent.mean.intercept == pytest.approx(1.0 - gain * 2.5)
    assert parent.variance == pytest.approx(4.0 / 17.0)
    assert s.check_acyclic()


def test_swap_reverses_linear_edge():
    s = SymbolicState()
    x = s.assume(gaussian(0.0, 1.0))
    y = s.assume(gaussian(1.0, 4.0, n0=2.0))
    s.swap(y, x)
    assert s.node(y).dist.mean == AffineExpr.const(1.0)
    assert s.node(y).dist.variance == pytest.approx(8.0)
    posterior = s.node(x).dist
    assert posterior.mean.coef(y) == pytest.approx(0.25)
    assert posterior.mean.intercept == pytest.approx(-0.25)
    assert posterior.variance == pytest.approx(0.5)


def test_swap_requires_gaussians_and_an_edge():
    s = SymbolicState()
    b = s.assume(SymBernoulli(0.5))
    g = s.assume(gaussian(0.0, 1.0))
    h = s.assume(gaussian(0.0, 1.0))
    with pytest.raises(NotConjugate):
        s.swap(g, b)
    with pytest.raises(NotConjugate):
        s.swap(h, g)


def _random_config(draw_coef, draw_var, draw_mean, three):
    s = SymbolicState()
    p1 = s.assume(gaussian(draw_mean[0], draw_var[0]))
    if three:
        p2 = s.assume(gaussian(draw_mean[1], draw_var[1], n0=draw_coef[1]))
        c = s.assume(SymGaussian(AffineExpr.build(draw_mean[2], {p1: draw_coef[0], p2: draw_coef[2]}), draw_var[2]))
        return s, c, p2
    c = s.assume(gaussian(draw_mean[1], draw_var[1], n0=draw_coef[0]))
    return s, c, p1


coefs = st.floats(min_value=-3, max_value=3).filter(lambda x: abs(x) > 0.05)
variances = st.floats(min_value=0.05, max_value=20)
means = st.floats(min_value=-5, max_value=5)


@settings(max_examples=1000, deadline=None)
@given(
    st.lists(coefs, min_size=3, max_size=3),
    st.lists(variances, min_size=3, max_size=3),
    st.lists(means, min_size=3, max_size=3),
    st.booleans(),
    st.lists(st.floats(min_value=-4, max_value=4), min_size=3, max_size=3),
)
def test_swap_preserves_joint(cs, vs, ms, three, point):
    s, child, parent = _random_config(cs, vs, ms, three)
    values = {nid: point[i] for i, nid in enumerate(sorted(s.nodes))}
    before = s.log_joint(values)
    s.swap(child, parent)
    after = s.log_joint(values)
    assert s.check_acyclic()
    assert after == pytest.approx(before, abs=1e-9, rel=1e-9)


def test_hoist_chain_gives_marginal():
    s = SymbolicState()
    x0 = s.assume(gaussian(0.0, 1.0))
    x1 = s.assume(gaussian(0.0, 1.0, n0=1.0))
    x2 = s.assume(gaussian(0.0, 1.0, n1=1.0))
    assert s.hoist(x2) is None
    assert s.is_root(x2)
    assert s.node(x2).dist.variance == pytest.approx(3.0)
    assert s.check_acyclic()
    assert s.marginal_of(x0) == GaussianParams(pytest.approx(0.0), pytest.approx(1.0))


def test_marginal_of_leaves_state_untouched():
    s = SymbolicState()
    x0 = s.assume(gaussian(0.0, 1.0))
    x1 = s.assume(gaussian(0.0, 1.0, n0=1.0))
    x2 = s.assume(gaussian(0.0, 1.0, n1=1.0))
    before = dump(s)
    assert s.marginal_of(x2) == GaussianParams(pytest.approx(0.0), pytest.approx(3.0))
    assert dump(s) == before
    assert not s.is_root(x2)
    assert s.parents(x1) == (x0,)


def test_hoist_is_blocked_by_bernoulli_ancestor():
    s = SymbolicState()
    b = s.assume(SymBernoulli(0.3))
    g = s.assume(gaussian(0.0, 1.0, n0=2.0))
    before = dump(s)
    assert s.hoist(g) == Blocked(b)
    assert dump(s) == before
    assert s.marginal_of(g) == NeedsApprox(b)


def test_realize_requires_root_and_substitutes():
    s = SymbolicState()
    x = s.assume(gaussian(0.0, 1.0))
    y = s.assume(gaussian(1.0, 1.0, n0=2.0))
    with pytest.raises(NotRoot):
        s.realize(y, 0.0)
    s.realize(x, 3.0)
    assert s.node(x).dist == SymDelta(3.0)
    assert s.node(y).dist.mean == AffineExpr.const(7.0)


def test_score():
    s = SymbolicState()
    g = s.assume(gaussian(1.0, 4.0))
    b = s.assume(SymBernoulli(0.25))
    assert s.score(g, 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi * 4.0))
    assert s.score(b, 1.0) == pytest.approx(math.log(0.25))
    with pytest.raises(DomainError):
        s.score(b, 0.5)


def test_kalman_observation_sequence_matches_filter():
    s = SymbolicState()
    x = s.assume(gaussian(0.0, 10.0))
    mean, var = 0.0, 10.0
    for obs in [0.3, -0.2, 1.1, 0.7]:
        x_new = s.assume(gaussian(0.0, 1.0, **{f"n{x}": 1.0}))
        y = s.assume(gaussian(0.0, 0.5, **{f"n{x_new}": 1.0}))
        assert s.hoist(y) is None
        s.realize(y, obs)
        assert s.hoist(x_new) is None
        s.prune([x_new])
        mean, var = kalman_step(mean, var, obs, 1.0, 0.5)
        x = x_new
        got = s.marginal_of(x)
        assert_allclose([got.mean, got.variance], [mean, var], rtol=1e-10, atol=1e-10)
    assert s.live_count([x]) == 1


def test_marginal_of_bernoulli_and_delta():
    s = SymbolicState()
    b = s.assume(SymBernoulli(0.2))
    d = s.assume(SymDelta(1.5))
    assert s.marginal_of(b) == BernoulliParams(0.2)
    assert s.marginal_of(d) == GaussianParams(1.5, 0.0)


def test_prune_and_live_count():
    s = SymbolicState()
    a = s.assume(gaussian(0.0, 1.0))
    b = s.assume(gaussian(0.0, 1.0, n0=1.0))
    s.assume(gaussian(0.0, 1.0))
    assert s.live_count([b]) == 2
    assert s.prune([b]) == 1
    assert sorted(s.nodes) == [a, b]


def test_topological_order_breaks_ties_by_id():
    s = SymbolicState()
    s.assume(gaussian(0.0, 1.0))
    s.assume(gaussian(0.0, 1.0))
    s.assume(gaussian(0.0, 1.0, n1=1.0, n0=1.0))
    assert s.topological_order() == [0, 1, 2]


def test_dump_is_stable():
    s = SymbolicState()
    s.assume(gaussian(0.0, 100.0), name="x")
    s.assume(SymBernoulli(0.1), name="o")
    s.assume(gaussian(0.0, 1.0, n0=1.0), name="y")
    assert dump(s) == "\n".join([
        "n0 [x] = gaussian(mean=0, var=100)",
        "n1 [o] = bernoulli(p=0.10000000000000001)",
        "n2 [y] = gaussian(mean=0 + 1*n0, var=1)",
    ])


def test_copy_is_independent():
    s = SymbolicState()
    x = s.assume(gaussian(0.0, 1.0))
    t = s.copy()
    t.realize(x, 1.0)
    assert isinstance(s.node(x).dist, SymGaussian)
    assert t.assume(gaussian(0.0, 1.0)) == s.assume(gaussian(0.0, 1.0))


def test_sample_root_uses_stream():
    s = SymbolicState()
    x = s.assume(gaussian(2.0, 1e-6))
    rng = np.random.default_rng(0)
    assert s.sample_root(x, rng) == pytest.approx(2.0, abs=0.01)
