import math

import numpy as np
import pytest

from aunce import (
    AunceConfig,
    AuWeights,
    au_weights,
    aunce_loss,
    aunce_term,
    gradient_ratio_profile,
    wce_loss,
    wce_loss_and_grad,
)
from aunce.exceptions import (
    ConfigurationError,
    ContractViolationError,
    DegenerateInputError,
    EmptyBatchError,
)
from aunce.rng import RngStream

# Occurrence rates of the 12-label corpus preset; expected weights were
# computed by an independent one-line script and frozen here.
BP4D_RATES = [0.211, 0.171, 0.203, 0.462, 0.549, 0.594,
              0.562, 0.466, 0.169, 0.344, 0.165, 0.152]
BP4D_WEIGHTS = [
    1.2211672144493693, 1.5068203640281688, 1.2692920307823492,
    0.5577192256467899, 0.46933749043500345, 0.43378161994750325,
    0.45848092926835743, 0.5529319361562595, 1.5246525576853072,
    0.7490298902581888, 1.5616138318110113, 1.69517290953169,
]


def unit_rows(rng, shape):
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class TestAuWeights:
    def test_hand_example(self):
        w = au_weights([0.5, 0.25, 0.25])
        np.testing.assert_allclose(w.w, [0.6, 1.2, 1.2], atol=1e-15)

    def test_constant_rates_give_unit_weights(self):
        w = au_weights([0.3] * 7)
        np.testing.assert_allclose(w.w, np.ones(7), atol=1e-15)

    def test_frozen_corpus_fixture(self):
        w = au_weights(BP4D_RATES)
        np.testing.assert_allclose(w.w, BP4D_WEIGHTS, rtol=1e-12)

    def test_sum_equals_label_count(self):
        rng = RngStream(17)
        for _ in range(100):
            n = int(rng.integers(1, 20))
            rates = rng.uniform(0.01, 0.99, size=n)
            assert abs(au_weights(rates).w.sum() - n) < 1e-9

    def test_uniform_constructor(self):
        w = AuWeights.uniform(4)
        np.testing.assert_allclose(w.w, np.ones(4))

    @pytest.mark.parametrize("bad", [[0.0, 0.5], [0.5, 1.0], [-0.1], [1.5]])
    def test_rates_outside_open_interval(self, bad):
        with pytest.raises(ConfigurationError):
            au_weights(bad)


class TestWceLoss:
    def test_half_probability(self):
        assert wce_loss([1], [0.5], au_weights([0.5])) == pytest.approx(
            math.log(2.0), abs=1e-12
        )

    def test_perfect_prediction_limit(self):
        assert wce_loss([1], [1.0 - 1e-7], au_weights([0.5])) == pytest.approx(
            0.0, abs=1e-6
        )

    def test_two_label_hand_value(self):
        v = wce_loss([1, 0], [0.9, 0.1], au_weights([0.5, 0.5]))
        assert v == pytest.approx(-math.log(0.9), rel=1e-12)

    def test_non_negative(self):
        rng = RngStream(23)
        for _ in range(50):
            n = int(rng.integers(1, 8))
            w = au_weights(rng.uniform(0.05, 0.95, size=n))
            y = rng.bernoulli(0.5, size=n)
            p = rng.uniform(0.0, 1.0, size=n)
            assert wce_loss(y, p, w) >= 0.0

    def test_hand_gradient(self):
        # d/dyhat of -log(yhat) at 0.5 with unit weight: -1/0.5 = -2
        _, grad = wce_loss_and_grad([1], [0.5], au_weights([0.5]))
        assert grad[0] == pytest.approx(-2.0, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ContractViolationError):
            wce_loss([1, 0], [0.5], au_weights([0.5, 0.5]))


class TestAunceTerm:
    def test_equal_similarities(self):
        # one negative, u+ = u- = 0, beta 1, tau 1 -> ln 2
        a = np.array([1.0, 0.0, 0.0])
        pos = np.array([0.0, 1.0, 0.0])
        neg = np.array([[0.0, 0.0, 1.0]])
        value, _ = aunce_term(a, pos, neg, beta=1.0, tau=1.0)
        assert value == pytest.approx(math.log(2.0), abs=1e-12)

    def test_reweighted_negative(self):
        # u+ = 0, u- = ln 2, beta 1 -> (s-)^2 = 4 -> ln 5
        a = np.array([1.0, 0.0, 0.0])
        pos = np.array([0.0, 1.0, 0.0])
        neg = np.array([[math.log(2.0), 0.0, 0.0]])
        value, _ = aunce_term(a, pos, neg, beta=1.0, tau=1.0)
        assert value == pytest.approx(math.log(5.0), rel=1e-12)

    def test_separable_limit_is_zero(self):
        # u+ - u- = +20 for every negative drives the term to its minimum 0
        a = np.array([1.0, 0.0])
        pos = np.array([10.0, 0.0])       # u+ = 20 at tau 0.5
        negs = np.zeros((4, 2))           # u- = 0
        value, _ = aunce_term(a, pos, negs, beta=1.0, tau=0.5)
        assert 0.0 < value < 1e-8

    def test_strictly_positive(self):
        rng = RngStream(31)
        for _ in range(50):
            a = unit_rows(rng, 6)
            pos = unit_rows(rng, 6)
            negs = unit_rows(rng, (int(rng.integers(1, 9)), 6))
            value, _ = aunce_term(a, pos, negs, beta=0.7, tau=0.5)
            assert value > 0.0

    def test_monotone_in_positive_similarity(self):
        # raising u+ with all else fixed must lower the term
        rng = RngStream(37)
        a = unit_rows(rng, 5)
        negs = unit_rows(rng, (4, 5))
        values = []
        for scale in (0.2, 0.6, 1.0):
            value, _ = aunce_term(a, scale * a, negs, beta=1.2, tau=0.5)
            values.append(value)
        assert values[0] > values[1] > values[2]

    def test_monotone_in_negative_similarity(self):
        rng = RngStream(41)
        a = unit_rows(rng, 5)
        pos = unit_rows(rng, 5)
        base = unit_rows(rng, (3, 5))
        value_lo, _ = aunce_term(a, pos, base - 0.3 * a, beta=1.2, tau=0.5)
        value_hi, _ = aunce_term(a, pos, base + 0.3 * a, beta=1.2, tau=0.5)
        assert value_hi > value_lo

    def test_empty_negatives(self):
        with pytest.raises(DegenerateInputError):
            aunce_term([1.0, 0.0], [0.0, 1.0], np.empty((0, 2)), beta=1.0, tau=1.0)

    def test_nonpositive_beta(self):
        with pytest.raises(ConfigurationError):
            aunce_term([1.0, 0.0], [0.0, 1.0], [[0.0, 1.0]], beta=0.0, tau=1.0)


class TestGradientRatioProfile:
    def test_equal_negatives_uniform(self):
        a = np.array([1.0, 0.0])
        negs = np.tile([0.3, 0.1], (5, 1))
        np.testing.assert_allclose(
            gradient_ratio_profile(a, negs, beta=1.3, tau=0.5), np.full(5, 0.2),
            atol=1e-12,
        )

    def test_hand_values_beta_one(self):
        a = np.array([1.0, 0.0])
        negs = np.array([[0.0, 0.0], [math.log(2.0), 0.0]])  # u = (0, ln2) at tau 1
        np.testing.assert_allclose(
            gradient_ratio_profile(a, negs, beta=1.0, tau=1.0),
            [1.0 / 3.0, 2.0 / 3.0], rtol=1e-12,
        )

    def test_hand_values_beta_two_sharper(self):
        a = np.array([1.0, 0.0])
        negs = np.array([[0.0, 0.0], [math.log(2.0), 0.0]])
        np.testing.assert_allclose(
            gradient_ratio_profile(a, negs, beta=2.0, tau=1.0), [0.2, 0.8],
            rtol=1e-12,
        )

    def test_sums_to_one(self):
        rng = RngStream(43)
        for _ in range(50):
            a = unit_rows(rng, 7)
            negs = unit_rows(rng, (int(rng.integers(1, 12)), 7))
            p = gradient_ratio_profile(a, negs, beta=1.2, tau=0.5)
            assert abs(p.sum() - 1.0) < 1e-12

    def test_shift_invariance(self):
        # adding a constant component along the anchor shifts every u- equally
        rng = RngStream(47)
        a = unit_rows(rng, 6)
        negs = unit_rows(rng, (5, 6))
        p0 = gradient_ratio_profile(a, negs, beta=1.5, tau=1.0)
        p1 = gradient_ratio_profile(a, negs + 0.37 * a, beta=1.5, tau=1.0)
        np.testing.assert_allclose(p0, p1, atol=1e-12)

    def test_entropy_non_increasing_in_beta(self):
        rng = RngStream(53)
        grid = [0.4, 0.8, 1.2, 1.6, 2.0]
        for _ in range(50):
            a = unit_rows(rng, 8)
            negs = unit_rows(rng, (6, 8))
            entropies = []
            for beta in grid:
                p = gradient_ratio_profile(a, negs, beta=beta, tau=0.5)
                entropies.append(float(-np.sum(p * np.log(p))))
            diffs = np.diff(entropies)
            assert np.all(diffs <= 1e-12)


def brute_force_aunce_loss(anchors, positives, negative_sets, betas, tau, w):
    """Straightforward re-implementation with direct exponentials."""
    n = len(w)
    total = 0.0
    any_used = False
    for i in range(n):
        if positives[i] is None or negative_sets[i] is None or len(negative_sets[i]) == 0:
            continue
        any_used = True
        s_pos = math.exp(float(np.dot(anchors[i], positives[i])) / tau)
        s_negs = [math.exp(float(np.dot(anchors[i], neg)) / tau)
                  for neg in negative_sets[i]]
        denom = s_pos + sum(s ** (betas[i] + 1.0) for s in s_negs)
        total += w[i] * (-math.log(s_pos / denom))
    assert any_used
    return total / n


class TestAunceLoss:
    def _cfg(self):
        return AunceConfig(tau=0.5)

    def test_single_label_reduces_to_term(self):
        rng = RngStream(59)
        a = unit_rows(rng, (1, 4))
        pos = unit_rows(rng, 4)
        negs = unit_rows(rng, (3, 4))
        out = aunce_loss(a, [pos], [negs], [1.2], self._cfg(), AuWeights.uniform(1))
        term_value, _ = aunce_term(a[0], pos, negs, beta=1.2, tau=0.5)
        assert out.value == pytest.approx(term_value, rel=1e-14)

    def test_weighted_average_arithmetic(self):
        rng = RngStream(61)
        anchors = unit_rows(rng, (2, 4))
        positives = [unit_rows(rng, 4), unit_rows(rng, 4)]
        negs = [unit_rows(rng, (2, 4)), unit_rows(rng, (3, 4))]
        w = au_weights([0.75, 0.25])  # weights (0.5, 1.5)
        np.testing.assert_allclose(w.w, [0.5, 1.5])
        out = aunce_loss(anchors, positives, negs, [1.0, 1.0], self._cfg(), w)
        t0, _ = aunce_term(anchors[0], positives[0], negs[0], 1.0, 0.5)
        t1, _ = aunce_term(anchors[1], positives[1], negs[1], 1.0, 0.5)
        assert out.value == pytest.approx((0.5 * t0 + 1.5 * t1) / 2.0, rel=1e-14)

    def test_matches_brute_force_oracle(self):
        rng = RngStream(67)
        cfg = self._cfg()
        for trial in range(60):
            n_labels = int(rng.integers(1, 5))
            d = int(rng.integers(2, 9))
            anchors = unit_rows(rng, (n_labels, d))
            positives = [unit_rows(rng, d) for _ in range(n_labels)]
            negs = [unit_rows(rng, (int(rng.integers(1, 9)), d))
                    for _ in range(n_labels)]
            betas = rng.uniform(0.3, 2.0, size=n_labels)
            w = au_weights(rng.uniform(0.1, 0.9, size=n_labels))
            out = aunce_loss(anchors, positives, negs, betas, cfg, w)
            expected = brute_force_aunce_loss(anchors, positives, negs, betas, 0.5, w.w)
            assert out.value == pytest.approx(expected, abs=1e-10)

    def test_value_identity_with_per_label(self):
        rng = RngStream(71)
        cfg = self._cfg()
        anchors = unit_rows(rng, (3, 5))
        positives = [unit_rows(rng, 5), None, unit_rows(rng, 5)]
        negs = [unit_rows(rng, (2, 5)), unit_rows(rng, (2, 5)), unit_rows(rng, (4, 5))]
        w = au_weights([0.2, 0.4, 0.6])
        out = aunce_loss(anchors, positives, negs, [1.0, 1.0, 1.0], cfg, w)
        assert out.skipped.tolist() == [False, True, False]
        assert out.per_label[1] == 0.0
        recomputed = float(np.sum(w.w * out.per_label) / 3)
        assert out.value == pytest.approx(recomputed, abs=1e-12)

    def test_all_skipped_raises(self):
        rng = RngStream(73)
        anchors = unit_rows(rng, (2, 4))
        with pytest.raises(EmptyBatchError):
            aunce_loss(anchors, [None, None], [None, None], [1.0, 1.0],
                       self._cfg(), AuWeights.uniform(2))

    def test_gradients_finite(self):
        rng = RngStream(79)
        anchors = unit_rows(rng, (2, 4))
        positives = [unit_rows(rng, 4), unit_rows(rng, 4)]
        negs = [unit_rows(rng, (3, 4)), unit_rows(rng, (2, 4))]
        out = aunce_loss(anchors, positives, negs, [1.2, 0.4], self._cfg(),
                         AuWeights.uniform(2))
        assert np.all(np.isfinite(out.grad_anchor))
        for g in out.grad_positive + out.grad_negatives:
            assert np.all(np.isfinite(g))
