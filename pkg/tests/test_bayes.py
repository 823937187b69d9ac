"""Posterior updates: hand oracles, sequential/batch equivalence, joint state."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftsearch.bayes import (
    FunctionIncrement,
    IncrementResult,
    bayes_update,
    degraded_failure,
    joint_beacon_update,
    run_chain,
    systematic_resample,
)
from driftsearch.geo import DomainError, ParticleSet


def make_set(weights, lats=None):
    weights = np.asarray(weights, dtype=np.float64)
    n = len(weights)
    lats = np.arange(n, dtype=np.float64) if lats is None else np.asarray(lats)
    return ParticleSet(np.arange(n), lats, np.zeros(n), weights)


def hand_bayes(weights, failure):
    """Direct transcription of the update rule, kept independent of the code."""
    num = [f * w for f, w in zip(failure, weights)]
    z = sum(num)
    return [x / z for x in num]


class TestBayesUpdate:
    def test_no_information_update_keeps_weights(self):
        ps = make_set([0.25, 0.25, 0.5])
        out = bayes_update(ps, np.ones(3))
        np.testing.assert_allclose(out.weights, ps.weights, atol=1e-15)

    def test_two_particle_hand_case(self):
        ps = make_set([0.5, 0.5])
        out = bayes_update(ps, np.array([0.1, 1.0]))
        np.testing.assert_allclose(out.weights, [1 / 11, 10 / 11], atol=1e-12)

    def test_all_detected_errors(self):
        ps = make_set([0.5, 0.5])
        with pytest.raises(DomainError, match="exhausts all probability"):
            bayes_update(ps, np.zeros(2))

    def test_positions_unchanged(self):
        ps = make_set([0.3, 0.7], lats=[1.5, -2.5])
        out = bayes_update(ps, np.array([0.2, 0.9]))
        np.testing.assert_array_equal(out.lats, ps.lats)
        np.testing.assert_array_equal(out.ids, ps.ids)

    def test_random_sets_match_hand_oracle(self):
        gen = np.random.default_rng(17)
        for _ in range(10):
            n = int(gen.integers(2, 21))
            w = gen.random(n)
            w /= w.sum()
            f = gen.random(n)
            ps = make_set(w)
            out = bayes_update(ps, f)
            np.testing.assert_allclose(out.weights, hand_bayes(w, f), atol=1e-12)

    def test_sequential_equals_batch(self):
        gen = np.random.default_rng(23)
        n = 50
        w = gen.random(n)
        w /= w.sum()
        ps = make_set(w)
        increments = [gen.random(n) for _ in range(4)]
        seq = ps
        for f in increments:
            seq = bayes_update(seq, f)
        batch = bayes_update(ps, np.prod(increments, axis=0))
        np.testing.assert_allclose(seq.weights, batch.weights, atol=1e-12)

    @given(c=st.floats(0.01, 1.0))
    @settings(max_examples=50)
    def test_scale_invariance(self, c):
        gen = np.random.default_rng(5)
        n = 12
        w = gen.random(n)
        w /= w.sum()
        f = gen.random(n) * 0.9 + 0.05
        a = bayes_update(make_set(w), f)
        b = bayes_update(make_set(w), c * f)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)

    def test_monotone_reweighting(self):
        gen = np.random.default_rng(31)
        n = 30
        w = gen.random(n)
        w /= w.sum()
        f = gen.random(n)
        out = bayes_update(make_set(w), f)
        ratio = out.weights / w
        order = np.argsort(f)
        assert np.all(np.diff(ratio[order]) >= -1e-15)

    def test_normalized_after_update(self):
        gen = np.random.default_rng(37)
        w = gen.random(100)
        w /= w.sum()
        out = bayes_update(make_set(w), gen.random(100))
        assert abs(out.weights.sum() - 1.0) < 1e-12


class TestDegradedFailure:
    def test_endpoints(self):
        assert degraded_failure(np.array([1.0])).failure[0] == 1.0
        assert degraded_failure(np.array([0.0])).failure[0] == 0.7

    def test_midpoint(self):
        assert degraded_failure(np.array([0.5])).failure[0] == pytest.approx(0.85, abs=1e-15)

    def test_beta_validated(self):
        with pytest.raises(DomainError):
            degraded_failure(np.array([0.5]), beta=1.5)

    def test_q_validated(self):
        with pytest.raises(DomainError):
            degraded_failure(np.array([1.5]))


class TestJointBeaconUpdate:
    def test_out_of_range_everywhere_is_identity(self):
        ps = make_set([0.3, 0.7]).with_beacon_prior(0.8)
        out = joint_beacon_update(ps, np.ones(2))
        np.testing.assert_allclose(out.particles.weights, ps.weights, atol=1e-15)
        np.testing.assert_allclose(out.particles.beacon_functional, [0.8, 0.8], atol=1e-15)
        assert out.beacon_failed_probability == pytest.approx(0.2, abs=1e-12)

    def test_two_location_toy_against_enumeration(self):
        # location A in acoustic range (failure 0.23 if functional), B outside
        w = np.array([0.6, 0.4])
        p_func = 0.7704
        f_functional = np.array([0.23, 1.0])
        ps = make_set(w).with_beacon_prior(p_func)
        out = joint_beacon_update(ps, f_functional)
        # enumeration over 4 joint states
        states = {}
        for i in range(2):
            states[(i, "func")] = w[i] * p_func * f_functional[i]
            states[(i, "fail")] = w[i] * (1 - p_func) * 1.0
        z = sum(states.values())
        for i in range(2):
            marg = (states[(i, "func")] + states[(i, "fail")]) / z
            assert out.particles.weights[i] == pytest.approx(marg, abs=1e-12)
        p_fail = (states[(0, "fail")] + states[(1, "fail")]) / z
        assert out.beacon_failed_probability == pytest.approx(p_fail, abs=1e-12)

    def test_failed_slice_is_untouched_by_acoustic(self):
        gen = np.random.default_rng(3)
        w = gen.random(20)
        w /= w.sum()
        ps = make_set(w).with_beacon_prior(0.84)
        out = joint_beacon_update(ps, gen.random(20))
        np.testing.assert_allclose(out.conditional_failed.weights, w, atol=1e-12)

    def test_degenerate_functional_prior_equals_plain_update(self):
        gen = np.random.default_rng(7)
        w = gen.random(15)
        w /= w.sum()
        f = gen.random(15) * 0.8 + 0.1
        joint = joint_beacon_update(make_set(w).with_beacon_prior(1.0), f)
        plain = bayes_update(make_set(w), f)
        np.testing.assert_allclose(joint.particles.weights, plain.weights, atol=1e-12)
        assert joint.beacon_failed_probability == 0.0

    def test_missing_prior_errors(self):
        with pytest.raises(DomainError, match="beacon-state prior"):
            joint_beacon_update(make_set([1.0]), np.ones(1))


class TestRunChain:
    def test_empty_increments(self):
        ps = make_set([0.4, 0.6])
        chain = run_chain(ps, [])
        assert chain.labels() == ["prior"]
        assert chain.final is ps

    def test_single_increment_matches_direct_update(self):
        ps = make_set([0.4, 0.6])
        f = np.array([0.5, 1.0])
        chain = run_chain(ps, [FunctionIncrement("one", lambda p: f)])
        direct = bayes_update(ps, f)
        np.testing.assert_array_equal(chain.final.weights, direct.weights)

    def test_halts_preserving_partials(self):
        ps = make_set([0.5, 0.5])

        def boom(_):
            raise RuntimeError("sensor file missing")

        chain = run_chain(
            ps,
            [
                FunctionIncrement("ok", lambda p: np.array([0.5, 1.0])),
                FunctionIncrement("bad", boom),
                FunctionIncrement("never", lambda p: np.ones(2)),
            ],
        )
        assert chain.failed_stage == "bad"
        assert chain.labels() == ["prior", "ok"]
        assert isinstance(chain.error, RuntimeError)

    def test_four_increments_equal_combined_product(self):
        gen = np.random.default_rng(11)
        n = 40
        w = gen.random(n)
        w /= w.sum()
        ps = make_set(w)
        fs = [gen.random(n) * 0.9 + 0.1 for _ in range(4)]
        chain = run_chain(
            ps, [FunctionIncrement(f"i{k}", lambda p, f=f: f) for k, f in enumerate(fs)]
        )
        combined = bayes_update(ps, np.prod(fs, axis=0))
        np.testing.assert_allclose(chain.final.weights, combined.weights, atol=1e-12)


class TestSystematicResample:
    def test_equalizes_weights(self):
        gen = np.random.default_rng(2)
        w = gen.random(50)
        w /= w.sum()
        ps = make_set(w)
        out = systematic_resample(ps, 200, seed=1)
        assert len(out) == 200
        np.testing.assert_array_equal(out.weights, np.full(200, 1 / 200))

    def test_concentrates_on_heavy_particles(self):
        w = np.array([0.9] + [0.1 / 9] * 9)
        ps = make_set(w)
        out = systematic_resample(ps, 1000, seed=3)
        frac_heavy = np.mean(out.lats == 0.0)
        assert abs(frac_heavy - 0.9) < 0.01
