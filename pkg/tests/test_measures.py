import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weakot import (DiscreteMeasure, DomainError, ParameterError, ShapeError,
                    common_refinement, convex_order_leq, is_majorized,
                    monotone_rearrangement, quantile, uniform)
from weakot.measures import cdf

from _strategies import finite, measures


class TestConstruction:
    def test_sorts_merges_and_normalizes(self):
        mu = DiscreteMeasure([2.0, 0.0, 2.0], [1.0, 1.0, 2.0])
        assert mu.atoms.tolist() == [0.0, 2.0]
        np.testing.assert_allclose(mu.weights, [0.25, 0.75])

    def test_zero_weights_dropped(self):
        mu = DiscreteMeasure([0.0, 1.0], [0.0, 3.0])
        assert mu == DiscreteMeasure([1.0])

    def test_default_weights_uniform(self):
        np.testing.assert_allclose(uniform([0, 1, 2, 3]).weights, 0.25)

    @pytest.mark.parametrize("atoms, weights, err", [
        ([], None, ParameterError),
        ([0.0, np.nan], None, DomainError),
        ([0.0], [-1.0], DomainError),
        ([0.0, 1.0], [1.0], ShapeError),
        ([0.0], [0.0], DomainError),
    ])
    def test_rejects_bad_input(self, atoms, weights, err):
        with pytest.raises(err):
            DiscreteMeasure(atoms, weights)

    @given(measures())
    def test_invariants_and_idempotence(self, mu):
        assert np.all(np.diff(mu.atoms) > 0)
        assert np.all(mu.weights > 0)
        assert abs(mu.weights.sum() - 1.0) <= 1e-12
        assert np.isfinite(mu.mean)
        assert DiscreteMeasure(mu.atoms, mu.weights) == mu

    def test_immutable(self):
        mu = uniform([0, 1])
        with pytest.raises(ValueError):
            mu.atoms[0] = 5.0


class TestQuantile:
    def test_two_point(self):
        mu = uniform([0, 1])
        assert quantile(mu, 0.25) == 0.0
        assert quantile(mu, 0.5) == 0.0
        assert quantile(mu, 0.75) == 1.0
        assert quantile(mu, 1.0) == 1.0

    def test_dirac(self):
        mu = DiscreteMeasure([3.0])
        assert np.all(quantile(mu, [1e-9, 0.3, 1.0]) == 3.0)

    @pytest.mark.parametrize("t", [0.0, -0.1, 1.0000001, np.nan])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            quantile(uniform([0, 1]), t)

    @given(measures(), st.floats(1e-6, 1.0))
    def test_galois_adjunction(self, mu, t):
        q = quantile(mu, t)
        for x in np.concatenate((mu.atoms, mu.atoms - 1e-3, mu.atoms + 1e-3)):
            assert (q <= x) == (t <= cdf(mu, x))

    def test_cdf_steps(self):
        mu = DiscreteMeasure([0.0, 1.0], [0.3, 0.7])
        assert cdf(mu, -1) == 0.0
        assert cdf(mu, 0.0) == pytest.approx(0.3)
        assert cdf(mu, 0.5) == pytest.approx(0.3)
        assert cdf(mu, 1.0) == 1.0


class TestMajorization:
    @pytest.mark.parametrize("a, b, expected", [
        ((1, 1), (0, 2), True),
        ((0, 2), (1, 1), False),
        ((1, 2, 3), (0, 2, 4), True),
        ((1, 1), (0, 3), False),
    ])
    def test_examples(self, a, b, expected):
        assert is_majorized(a, b) is expected

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            is_majorized([1, 2], [1, 2, 3])

    @given(st.lists(finite, min_size=1, max_size=6))
    def test_reflexive_and_mean_vector_is_smallest(self, a):
        assert is_majorized(a, a)
        assert is_majorized(np.full(len(a), np.mean(a)), a, tol=1e-9 * (1 + len(a)))

    @given(st.lists(st.integers(-4, 4), min_size=1, max_size=5), st.data())
    def test_partial_order(self, a, data):
        n = len(a)
        vec = st.lists(st.integers(-4, 4), min_size=n, max_size=n)
        b, c = data.draw(vec), data.draw(vec)
        if is_majorized(a, b) and is_majorized(b, c):
            assert is_majorized(a, c)
        if is_majorized(a, b) and is_majorized(b, a):
            assert sorted(a) == sorted(b)


def _pl_convex_order(nu1, nu2):
    """Brute force over convex piecewise-linear functions with kinks on atoms."""
    grid = np.union1d(nu1.atoms, nu2.atoms)
    tests = [lambda x: x, lambda x: -x]
    tests += [lambda x, k=k: np.maximum(x - k, 0.0) for k in grid]
    tests += [lambda x, k=k: np.maximum(k - x, 0.0) for k in grid]
    for i, j in itertools.combinations(range(grid.size), 2):
        tests.append(lambda x, a=grid[i], b=grid[j]: np.abs(x - a) + np.abs(x - b))
    return all(nu1.expect(f) <= nu2.expect(f) + 1e-9 for f in tests)


class TestConvexOrder:
    def test_examples(self):
        assert convex_order_leq(DiscreteMeasure([0.0]), uniform([-1, 1]))
        assert not convex_order_leq(uniform([-1, 1]), DiscreteMeasure([0.0]))
        assert convex_order_leq(uniform([1, 1]), uniform([0, 2]))
        assert is_majorized((1, 1), (0, 2))

    @given(st.integers(1, 6), st.data())
    def test_agrees_with_majorization(self, n, data):
        vec = st.lists(st.integers(-3, 3).map(float), min_size=n, max_size=n)
        a, b = data.draw(vec), data.draw(vec)
        assert convex_order_leq(uniform(a), uniform(b)) == is_majorized(a, b)

    @given(measures(max_size=4), measures(max_size=4))
    def test_agrees_with_piecewise_linear_family(self, nu1, nu2):
        assert convex_order_leq(nu1, nu2) == _pl_convex_order(nu1, nu2)

    @given(measures(), measures())
    def test_implies_equal_means(self, nu1, nu2):
        if convex_order_leq(nu1, nu2):
            assert abs(nu1.mean - nu2.mean) <= 1e-9


class TestRearrangement:
    def test_identity(self):
        mu = uniform([0, 1])
        assert [(s, t) for _, s, t, _ in monotone_rearrangement(mu, mu).rows()] == [
            (0.0, 0.0), (1.0, 1.0)]

    def test_order_preserving(self):
        rows = monotone_rearrangement(uniform([0, 1]), uniform([2, 5])).rows()
        assert [(s, t) for _, s, t, _ in rows] == [(0.0, 2.0), (1.0, 5.0)]

    def test_splitting_a_dirac(self):
        rows = monotone_rearrangement(DiscreteMeasure([0.0]), uniform([-1, 1])).rows()
        assert rows == [(0.5, 0.0, -1.0, 0.5), (1.0, 0.0, 1.0, 0.5)]

    @given(measures(), measures())
    def test_pushforward_and_monotone(self, mu, nu):
        m = monotone_rearrangement(mu, nu)
        assert np.all(np.diff(m.target) >= 0)
        assert np.all(np.diff(m.source) >= 0)
        push, src = m.pushforward(), m.source_measure()
        np.testing.assert_array_equal(push.atoms, nu.atoms)
        np.testing.assert_allclose(push.weights, nu.weights, atol=1e-12)
        np.testing.assert_array_equal(src.atoms, mu.atoms)
        np.testing.assert_allclose(src.weights, mu.weights, atol=1e-12)

    @given(measures(), measures())
    def test_refinement_matches_quantiles(self, mu, nu):
        ref = common_refinement(mu, nu)
        assert ref.upper[-1] == 1.0
        assert abs(ref.masses.sum() - 1.0) <= 1e-12
        mids = ref.midpoints
        np.testing.assert_array_equal(ref.source, quantile(mu, mids))
        np.testing.assert_array_equal(ref.target, quantile(nu, mids))
