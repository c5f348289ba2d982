"""Cost matrices, the exact assignment solver, and the divergence metric."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otmap.errors import InvalidCost, PoolTooLarge, SizeMismatch, UnsupportedMetric
from otmap.ot import (
    Assignment,
    CostMatrix,
    CostMetric,
    PointSet,
    assignment_cost_gradient,
    matched_distances,
    ot_divergence,
    pairwise_cost,
    solve_assignment,
)


def brute_force_min_cost(values: np.ndarray) -> float:
    """Exhaustive minimum over all permutations; the independence oracle."""
    k = values.shape[0]
    best = np.inf
    for perm in itertools.permutations(range(k)):
        best = min(best, values[np.arange(k), perm].sum())
    return float(best)


class TestPointSet:
    def test_rejects_nan(self):
        with pytest.raises(InvalidCost):
            PointSet([[0.0, np.nan]])

    def test_rejects_empty(self):
        with pytest.raises(SizeMismatch):
            PointSet(np.empty((0, 2)))

    def test_rejects_1d(self):
        with pytest.raises(SizeMismatch):
            PointSet([1.0, 2.0])

    def test_data_is_read_only(self):
        ps = PointSet([[1.0, 2.0]])
        with pytest.raises(ValueError):
            ps.data[0, 0] = 3.0


class TestPairwiseCost:
    def test_pythagorean_euclidean(self):
        c = pairwise_cost(PointSet([[0.0, 0.0]]), PointSet([[3.0, 4.0]]), CostMetric.EUCLIDEAN)
        np.testing.assert_allclose(c.values, [[5.0]])

    def test_pythagorean_squared(self):
        c = pairwise_cost(PointSet([[0.0, 0.0]]), PointSet([[3.0, 4.0]]), CostMetric.SQUARED_EUCLIDEAN)
        np.testing.assert_allclose(c.values, [[25.0]])

    def test_l1_matrix(self):
        a = PointSet([[1.0, 1.0], [0.0, 0.0]])
        b = PointSet([[1.0, 1.0], [2.0, 2.0]])
        c = pairwise_cost(a, b, CostMetric.L1)
        np.testing.assert_allclose(c.values, [[0.0, 2.0], [2.0, 4.0]])

    def test_size_mismatch_names_shapes(self):
        with pytest.raises(SizeMismatch, match=r"\(1, 2\).*\(2, 2\)"):
            pairwise_cost(PointSet([[0.0, 0.0]]), PointSet([[1.0, 1.0], [2.0, 2.0]]), CostMetric.L1)

    def test_dimension_mismatch(self):
        with pytest.raises(SizeMismatch):
            pairwise_cost(PointSet([[0.0, 0.0]]), PointSet([[1.0, 1.0, 1.0]]), CostMetric.L1)

    def test_dense_limit(self):
        big = PointSet(np.zeros((16385, 1)))
        with pytest.raises(PoolTooLarge):
            pairwise_cost(big, big, CostMetric.EUCLIDEAN)

    def test_recompute_invariant(self):
        rng = np.random.default_rng(5)
        a, b = PointSet(rng.normal(size=(6, 3))), PointSet(rng.normal(size=(6, 3)))
        c = pairwise_cost(a, b, CostMetric.SQUARED_EUCLIDEAN)
        manual = ((a.data[:, None, :] - b.data[None, :, :]) ** 2).sum(axis=2)
        np.testing.assert_allclose(c.values, manual, rtol=1e-12, atol=1e-12)


class TestSolveAssignment:
    def test_zero_diagonal(self):
        sol = solve_assignment(CostMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]), CostMetric.L1))
        assert sol.perm.tolist() == [0, 1]
        assert sol.total_cost == 0.0

    def test_zero_anti_diagonal(self):
        sol = solve_assignment(CostMatrix(np.array([[5.0, 0.0], [0.0, 5.0]]), CostMetric.L1))
        assert sol.perm.tolist() == [1, 0]
        assert sol.total_cost == 0.0

    def test_non_square(self):
        with pytest.raises(SizeMismatch):
            solve_assignment(CostMatrix(np.zeros((2, 3)), CostMetric.L1))

    def test_nan_entry(self):
        with pytest.raises(InvalidCost):
            solve_assignment(CostMatrix(np.array([[np.nan, 1.0], [1.0, 0.0]]), CostMetric.L1))

    def test_matches_brute_force_on_200_random_6x6(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            values = rng.random((6, 6))
            sol = solve_assignment(CostMatrix(values, CostMetric.L1))
            assert sorted(sol.perm.tolist()) == list(range(6))
            assert sol.total_cost == pytest.approx(brute_force_min_cost(values), abs=1e-12)

    def test_deterministic_for_fixed_input(self):
        values = np.ones((5, 5))  # fully tied: any permutation is optimal
        first = solve_assignment(CostMatrix(values, CostMetric.L1))
        second = solve_assignment(CostMatrix(values.copy(), CostMetric.L1))
        assert first.perm.tolist() == second.perm.tolist()

    @settings(max_examples=60, deadline=None)
    @given(
        k=st.integers(min_value=2, max_value=7),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_optimality_property(self, k, seed):
        values = np.random.default_rng(seed).random((k, k))
        sol = solve_assignment(CostMatrix(values, CostMetric.L1))
        assert sorted(sol.perm.tolist()) == list(range(k))
        assert sol.total_cost == pytest.approx(brute_force_min_cost(values), abs=1e-12)


class TestOtDivergence:
    def test_identity_is_zero(self):
        pts = PointSet(np.random.default_rng(0).normal(size=(100, 2)))
        for metric in CostMetric:
            assert ot_divergence(pts, pts, metric, metric) == 0.0

    def test_single_forced_pair(self):
        assert ot_divergence(PointSet([[0.0, 0.0]]), PointSet([[3.0, 4.0]])) == pytest.approx(5.0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        a = PointSet(rng.normal(size=(40, 2)))
        b_rows = rng.normal(size=(40, 2))
        before = ot_divergence(a, PointSet(b_rows))
        after = ot_divergence(a, PointSet(b_rows[rng.permutation(40)]))
        assert before == pytest.approx(after, rel=1e-12)

    def test_scale_covariance(self):
        rng = np.random.default_rng(11)
        a_rows, b_rows = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
        s = 3.7
        for metric in (CostMetric.EUCLIDEAN, CostMetric.L1):
            base = ot_divergence(PointSet(a_rows), PointSet(b_rows), metric, metric)
            scaled = ot_divergence(PointSet(s * a_rows), PointSet(s * b_rows), metric, metric)
            assert scaled == pytest.approx(s * base, rel=1e-9)
        # assignment choice under squared cost is unchanged by scaling
        perm1 = solve_assignment(
            pairwise_cost(PointSet(a_rows), PointSet(b_rows), CostMetric.SQUARED_EUCLIDEAN)
        ).perm
        perm2 = solve_assignment(
            pairwise_cost(PointSet(s * a_rows), PointSet(s * b_rows), CostMetric.SQUARED_EUCLIDEAN)
        ).perm
        assert perm1.tolist() == perm2.tolist()

    def test_small_perturbation_bound(self):
        rng = np.random.default_rng(3)
        a_rows = rng.normal(size=(50, 2))
        eps = 1e-3
        noise = rng.uniform(-1.0, 1.0, size=(50, 2))
        noise *= eps / np.maximum(np.linalg.norm(noise, axis=1, keepdims=True), 1e-12)
        b = PointSet(a_rows[rng.permutation(50)] + noise)
        assert ot_divergence(PointSet(a_rows), b) <= eps + 1e-12

    def test_symmetry_when_metrics_match(self):
        rng = np.random.default_rng(13)
        a = PointSet(rng.normal(size=(25, 3)))
        b = PointSet(rng.normal(size=(25, 3)))
        m = CostMetric.SQUARED_EUCLIDEAN
        assert ot_divergence(a, b, m, m) == pytest.approx(ot_divergence(b, a, m, m), rel=1e-12)


class TestAssignmentCostGradient:
    def test_zero_at_minimum(self):
        rng = np.random.default_rng(2)
        a = PointSet(rng.normal(size=(6, 2)))
        sigma = Assignment(perm=np.arange(6), total_cost=0.0)
        grad = assignment_cost_gradient(a, a, sigma)
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_single_point_closed_form(self):
        a, b = PointSet([[1.0, 0.0]]), PointSet([[0.0, 0.0]])
        sigma = Assignment(perm=np.array([0]), total_cost=1.0)
        np.testing.assert_allclose(assignment_cost_gradient(a, b, sigma), [[2.0, 0.0]])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        k, d = 5, 3
        a_rows = rng.normal(size=(k, d))
        b = PointSet(rng.normal(size=(k, d)))
        sigma = solve_assignment(pairwise_cost(PointSet(a_rows), b, CostMetric.SQUARED_EUCLIDEAN))

        def frozen_objective(flat: np.ndarray) -> float:
            pts = PointSet(flat.reshape(k, d))
            return float(matched_distances(pts, b, sigma, CostMetric.SQUARED_EUCLIDEAN).mean())

        grad = assignment_cost_gradient(PointSet(a_rows), b, sigma)
        h = 1e-6
        flat = a_rows.ravel().copy()
        for idx in range(flat.size):
            up, down = flat.copy(), flat.copy()
            up[idx] += h
            down[idx] -= h
            fd = (frozen_objective(up) - frozen_objective(down)) / (2 * h)
            rel = abs(fd - grad.ravel()[idx]) / max(abs(fd), 1e-12)
            assert rel < 1e-5

    def test_rejects_other_metrics(self):
        a = PointSet([[0.0, 0.0]])
        sigma = Assignment(perm=np.array([0]), total_cost=0.0)
        with pytest.raises(UnsupportedMetric):
            assignment_cost_gradient(a, a, sigma, CostMetric.EUCLIDEAN)
