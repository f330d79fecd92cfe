import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specsim.dist import (
    Categorical,
    DegenerateResidualError,
    acceptance_rate,
    entropy,
    kl_divergence,
    residual,
    sample,
    total_variation,
)
from tests.conftest import random_categorical


class _ScriptedRng:
    """Deterministic uniform source for trace-level tests."""

    def __init__(self, values):
        self.values = list(values)

    def uniform(self):
        return self.values.pop(0)


def probs_strategy(min_size=2, max_size=8):
    return st.lists(
        st.floats(min_value=1e-6, max_value=1.0), min_size=min_size, max_size=max_size
    ).map(lambda xs: Categorical(np.array(xs) / sum(xs)))


class TestCategorical:
    def test_rejects_non_1d(self):
        with pytest.raises(ValueError):
            Categorical([[0.5, 0.5]])

    def test_rejects_single_outcome(self):
        with pytest.raises(ValueError):
            Categorical([1.0])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Categorical([1.2, -0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            Categorical([0.5, 0.6])

    def test_renormalizes_within_tolerance(self):
        c = Categorical([0.5, 0.5 + 5e-10])
        assert math.isclose(float(c.probs.sum()), 1.0, abs_tol=1e-15)

    def test_probs_read_only(self):
        c = Categorical([0.5, 0.5])
        with pytest.raises(ValueError):
            c.probs[0] = 1.0


class TestSample:
    def test_point_mass_first(self):
        assert sample(Categorical([1.0, 0.0]), _ScriptedRng([0.99])) == 0

    def test_point_mass_last(self):
        assert sample(Categorical([0.0, 0.0, 1.0]), _ScriptedRng([0.01])) == 2

    def test_consumes_exactly_one_uniform(self):
        r = _ScriptedRng([0.3, 0.9])
        sample(Categorical([0.5, 0.5]), r)
        assert len(r.values) == 1

    def test_inverse_cdf_boundaries(self):
        p = Categorical([0.25, 0.25, 0.5])
        assert sample(p, _ScriptedRng([0.2])) == 0
        assert sample(p, _ScriptedRng([0.25])) == 1  # side="right" at the cut
        assert sample(p, _ScriptedRng([0.49])) == 1
        assert sample(p, _ScriptedRng([0.5])) == 2

    def test_empirical_frequency(self, rng):
        p = Categorical([0.5, 0.5])
        n = 10**6
        draws = np.searchsorted(np.cumsum(p.probs), rng.random(n), side="right")
        freq = float(np.mean(draws == 0))
        assert 0.498 <= freq <= 0.502  # 3 sigma for a fair binomial at 1e6


class TestTotalVariation:
    def test_identical(self):
        p = Categorical([0.3, 0.7])
        assert total_variation(p, p) == 0.0

    def test_disjoint(self):
        assert total_variation(Categorical([1, 0]), Categorical([0, 1])) == 1.0

    def test_hand_value(self):
        p = Categorical([0.5, 0.3, 0.2])
        q = Categorical([0.2, 0.5, 0.3])
        assert math.isclose(total_variation(p, q), 0.3, abs_tol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            total_variation(Categorical([0.5, 0.5]), Categorical([0.4, 0.3, 0.3]))


class TestKl:
    def test_identical_zero(self):
        p = Categorical([0.3, 0.7])
        assert kl_divergence(p, p) == 0.0

    def test_hand_value(self):
        got = kl_divergence(Categorical([0.5, 0.5]), Categorical([0.25, 0.75]))
        want = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        assert math.isclose(got, want, rel_tol=1e-12)
        assert math.isclose(got, 0.143841, abs_tol=1e-6)

    def test_support_escape_is_inf(self):
        assert kl_divergence(Categorical([1, 0]), Categorical([0, 1])) == float("inf")

    def test_zero_times_log_zero(self):
        # p has a zero entry where q is positive: contributes nothing.
        got = kl_divergence(Categorical([1.0, 0.0]), Categorical([0.5, 0.5]))
        assert math.isclose(got, math.log(2.0), rel_tol=1e-12)

    @given(probs_strategy(), probs_strategy())
    @settings(max_examples=100, deadline=None)
    def test_nonnegative(self, p, q):
        if p.size != q.size:
            return
        assert kl_divergence(p, q) >= -1e-15


class TestAcceptanceRate:
    def test_identical_one(self):
        p = Categorical([0.3, 0.7])
        assert acceptance_rate(p, p) == 1.0

    def test_disjoint_zero(self):
        assert acceptance_rate(Categorical([1, 0]), Categorical([0, 1])) == 0.0

    def test_hand_value(self):
        p = Categorical([0.5, 0.3, 0.2])
        q = Categorical([0.2, 0.5, 0.3])
        assert math.isclose(acceptance_rate(p, q), 0.7, abs_tol=1e-15)

    def test_identity_with_tv_random(self, rng):
        for _ in range(1000):
            size = int(rng.integers(2, 12))
            p = random_categorical(rng, size)
            q = random_categorical(rng, size)
            assert abs(acceptance_rate(p, q) - (1.0 - total_variation(p, q))) <= 1e-12
            direct = float(np.minimum(p.probs, q.probs).sum())
            assert abs(acceptance_rate(p, q) - direct) <= 1e-12


class TestResidual:
    def test_hand_value(self):
        p = Categorical([0.5, 0.3, 0.2])
        q = Categorical([0.2, 0.5, 0.3])
        r = residual(p, q)
        assert np.allclose(r.probs, [1.0, 0.0, 0.0])

    def test_two_point(self):
        r = residual(Categorical([0.6, 0.4]), Categorical([0.4, 0.6]))
        assert np.allclose(r.probs, [1.0, 0.0])

    def test_disjoint_gives_p(self):
        r = residual(Categorical([1, 0]), Categorical([0, 1]))
        assert np.allclose(r.probs, [1.0, 0.0])

    def test_degenerate_raises(self):
        p = Categorical([0.5, 0.5])
        with pytest.raises(DegenerateResidualError):
            residual(p, p)

    def test_repair_identity_random(self, rng):
        # min(p,q) + TV * residual == p elementwise: the algebraic core of
        # lossless verification.
        for _ in range(500):
            size = int(rng.integers(2, 10))
            p = random_categorical(rng, size)
            q = random_categorical(rng, size)
            tv = total_variation(p, q)
            rebuilt = np.minimum(p.probs, q.probs) + tv * residual(p, q).probs
            assert np.max(np.abs(rebuilt - p.probs)) <= 1e-12


class TestPinsker:
    def test_random_pairs(self, rng):
        for _ in range(10**4):
            size = int(rng.integers(2, 8))
            p = random_categorical(rng, size)
            q = random_categorical(rng, size)
            tv = total_variation(p, q)
            assert tv <= math.sqrt(kl_divergence(p, q) / 2.0) + 1e-12


class TestEntropy:
    def test_fair_coin(self):
        assert math.isclose(entropy(Categorical([0.5, 0.5])), math.log(2.0), rel_tol=1e-12)

    def test_point_mass_zero(self):
        assert entropy(Categorical([1.0, 0.0])) == 0.0
