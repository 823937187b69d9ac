"""Effort allocation: closed forms, brute-force simplex oracle, dominance."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftsearch.allocation import (
    Allocation,
    CellPrior,
    ExponentialDetection,
    TabulatedDetection,
    evaluate,
    from_cell_map,
    optimize,
    posterior_given_failure,
)
from driftsearch.geo import DomainError


class TestEvaluate:
    def test_zero_allocation(self):
        prior = CellPrior(np.array([0.5, 0.5]))
        det = ExponentialDetection(1.0, 2)
        p, c = evaluate(np.zeros(2), prior, det)
        assert (p, c) == (0.0, 0.0)

    def test_single_cell_closed_form(self):
        prior = CellPrior(np.array([1.0]))
        det = ExponentialDetection(1.0, 1)
        p, c = evaluate(np.array([1.0]), prior, det)
        assert p == pytest.approx(1 - math.exp(-1), abs=1e-12)  # 0.6321
        assert c == 1.0

    def test_two_cells(self):
        prior = CellPrior(np.array([0.5, 0.5]))
        det = ExponentialDetection(1.0, 2)
        p, c = evaluate(np.array([1.0, 0.0]), prior, det)
        assert p == pytest.approx(0.5 * (1 - math.exp(-1)), abs=1e-12)  # 0.3161
        assert c == 1.0

    def test_negative_effort_rejected(self):
        prior = CellPrior(np.array([1.0]))
        det = ExponentialDetection(1.0, 1)
        with pytest.raises(DomainError):
            evaluate(np.array([-0.1]), prior, det)


def brute_force_simplex(prior, det, budget, resolution=1e-3):
    """Grid search over the 3-simplex at the given resolution (oracle)."""
    steps = int(round(budget / resolution))
    z1 = np.arange(steps + 1) * resolution
    best_p = -1.0
    best = None
    for a in z1:
        z2 = np.arange(int(round((budget - a) / resolution)) + 1) * resolution
        z3 = budget - a - z2
        p = (
            prior.probs[0] * (1 - np.exp(-det.rhos[0] * a))
            + prior.probs[1] * (1 - np.exp(-det.rhos[1] * z2))
            + prior.probs[2] * (1 - np.exp(-det.rhos[2] * z3))
        )
        k = int(np.argmax(p))
        if p[k] > best_p:
            best_p = float(p[k])
            best = (a, float(z2[k]), float(z3[k]))
    return best, best_p


class TestOptimize:
    def test_single_cell_gets_everything(self):
        prior = CellPrior(np.array([1.0]))
        det = ExponentialDetection(0.7, 1)
        alloc = optimize(prior, det, 5.0)
        assert alloc.efforts[0] == pytest.approx(5.0, abs=1e-9)

    def test_symmetric_cells_split_evenly(self):
        prior = CellPrior(np.array([0.5, 0.5]))
        det = ExponentialDetection(1.3, 2)
        alloc = optimize(prior, det, 4.0)
        assert alloc.efforts[0] == pytest.approx(2.0, abs=1e-9)
        assert alloc.efforts[1] == pytest.approx(2.0, abs=1e-9)

    def test_three_cells_match_brute_force(self):
        prior = CellPrior(np.array([0.5, 0.3, 0.2]))
        det = ExponentialDetection(1.0, 3)
        budget = 2.0
        alloc = optimize(prior, det, budget)
        best, best_p = brute_force_simplex(prior, det, budget)
        for mine, brute in zip(alloc.efforts, best):
            assert abs(mine - brute) <= 1e-3 + 1e-9
        p, c = evaluate(alloc, prior, det)
        assert p >= best_p - 1e-9
        assert c <= budget + 1e-9

    def test_marginal_rates_equalized(self):
        gen = np.random.default_rng(4)
        probs = gen.random(6)
        probs /= probs.sum()
        rhos = gen.uniform(0.3, 3.0, 6)
        prior = CellPrior(probs)
        det = ExponentialDetection(rhos)
        t = 3.0
        alloc = optimize(prior, det, t)
        rates = probs * rhos * np.exp(-rhos * alloc.efforts)
        funded = alloc.efforts > 0
        lam = rates[funded]
        assert np.ptp(lam) < 1e-6
        assert np.all(rates[~funded] <= lam.max() + 1e-6)

    def test_never_loses_to_random_allocations(self):
        gen = np.random.default_rng(9)
        probs = gen.random(6)
        probs /= probs.sum()
        rhos = gen.uniform(0.2, 2.0, 6)
        prior = CellPrior(probs)
        det = ExponentialDetection(rhos)
        t = 4.0
        alloc = optimize(prior, det, t)
        p_star, _ = evaluate(alloc, prior, det)
        n = 100_000
        z = gen.dirichlet(np.ones(6), size=n) * t
        z[n // 2 :] *= gen.random((n - n // 2, 1))  # include partial spends
        p_rand = (1 - np.exp(-rhos[None, :] * z)) @ probs
        assert p_star >= float(p_rand.max()) - 1e-9

    def test_budget_monotonicity(self):
        prior = CellPrior(np.array([0.5, 0.3, 0.2]))
        det = ExponentialDetection(np.array([1.0, 0.7, 2.0]))
        last = -1.0
        for t in np.linspace(0.0, 6.0, 25):
            p, _ = evaluate(optimize(prior, det, float(t)), prior, det)
            assert p >= last - 1e-12
            last = p

    def test_two_half_budgets_equal_one_full(self):
        # sequential optimal increments of T/2 achieve the same total
        # detection probability as one optimal increment of T
        prior = CellPrior(np.array([0.45, 0.35, 0.2]))
        det = ExponentialDetection(np.array([1.2, 0.8, 1.7]))
        t = 3.0
        one_shot, _ = evaluate(optimize(prior, det, t), prior, det)
        a1 = optimize(prior, det, t / 2)
        p1, _ = evaluate(a1, prior, det)
        post = posterior_given_failure(prior, a1, det)
        a2 = optimize(post, det, t / 2)
        p2, _ = evaluate(a2, post, det)
        total = p1 + (1 - p1) * p2
        assert total == pytest.approx(one_shot, abs=1e-6)

    def test_zero_budget(self):
        prior = CellPrior(np.array([0.6, 0.4]))
        det = ExponentialDetection(1.0, 2)
        alloc = optimize(prior, det, 0.0)
        np.testing.assert_array_equal(alloc.efforts, [0.0, 0.0])

    def test_zero_probability_cell_unfunded(self):
        prior = CellPrior(np.array([0.0, 1.0]))
        det = ExponentialDetection(1.0, 2)
        alloc = optimize(prior, det, 2.0)
        assert alloc.efforts[0] == 0.0
        assert alloc.efforts[1] == pytest.approx(2.0, abs=1e-9)


class TestTabulated:
    def concave_curve(self):
        z = np.array([0.0, 1.0, 2.0, 4.0])
        b = np.array([0.0, 0.5, 0.75, 0.9])
        return (z, b)

    def test_concavity_enforced(self):
        z = np.array([0.0, 1.0, 2.0])
        b = np.array([0.0, 0.2, 0.9])  # increasing slope
        with pytest.raises(DomainError, match="concavity"):
            TabulatedDetection([(z, b)])

    def test_matches_exponential_via_sampled_curve(self):
        # a finely tabulated exponential should allocate like the closed form
        rho = 1.0
        z = np.linspace(0, 10, 2001)
        b = 1 - np.exp(-rho * z)
        det_tab = TabulatedDetection([(z, b), (z, b)])
        det_exp = ExponentialDetection(rho, 2)
        prior = CellPrior(np.array([0.7, 0.3]))
        t = 2.0
        tab = optimize(prior, det_tab, t)
        exp = optimize(prior, det_exp, t)
        np.testing.assert_allclose(tab.efforts, exp.efforts, atol=5e-3)

    def test_greedy_respects_budget(self):
        det = TabulatedDetection([self.concave_curve()] * 3)
        prior = CellPrior(np.array([0.5, 0.3, 0.2]))
        alloc = optimize(prior, det, 3.0)
        assert float(alloc.efforts.sum()) <= 3.0 + 1e-9


class TestPosteriorGivenFailure:
    def test_zero_allocation_identity(self):
        prior = CellPrior(np.array([0.6, 0.4]))
        det = ExponentialDetection(1.0, 2)
        post = posterior_given_failure(prior, Allocation(np.zeros(2), 0.0), det)
        np.testing.assert_allclose(post.probs, prior.probs, atol=1e-15)

    def test_fully_searched_cell_empties(self):
        prior = CellPrior(np.array([0.5, 0.5]))
        det = ExponentialDetection(1.0, 2)
        post = posterior_given_failure(prior, Allocation(np.array([60.0, 0.0]), 60.0), det)
        assert post.probs[1] == pytest.approx(1.0, abs=1e-9)

    def test_hand_case(self):
        # failure-weighted: (0.6*0.5, 0.4*1) -> (0.4286, 0.5714)
        class FixedDet:
            def __len__(self):
                return 2

            def prob(self, efforts):
                return np.array([0.5, 0.0])

        prior = CellPrior(np.array([0.6, 0.4]))
        post = posterior_given_failure(prior, Allocation(np.array([1.0, 0.0]), 1.0), FixedDet())
        np.testing.assert_allclose(post.probs, [0.3 / 0.7, 0.4 / 0.7], atol=1e-9)


class TestCellMapBridge:
    def test_round_trip_from_grid(self, frame):
        from driftsearch.geo import GridSpec, ParticleSet, grid_aggregate

        gen = np.random.default_rng(8)
        xs = gen.uniform(-4000, 4000, 400)
        ys = gen.uniform(-4000, 4000, 400)
        lats, lons = frame.unproject_arrays(xs, ys)
        ps = ParticleSet.equal_weights(lats, lons)
        cm = grid_aggregate(ps, GridSpec(frame, 2000.0, (-4000, -4000, 4000, 4000)))
        prior, indices = from_cell_map(cm)
        assert abs(prior.probs.sum() - 1.0) < 1e-12
        assert len(prior) == len(indices)
        det = ExponentialDetection(1.0, len(prior))
        alloc = optimize(prior, det, 10.0)
        p, c = evaluate(alloc, prior, det)
        assert 0 < p < 1 and c <= 10.0 + 1e-9
