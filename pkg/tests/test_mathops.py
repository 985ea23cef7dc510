import math

import numpy as np
import pytest

from aunce import dot, exp_sim, l2_normalize, log_sum_exp
from aunce.exceptions import (
    ConfigurationError,
    ContractViolationError,
    DegenerateInputError,
)
from aunce.rng import RngStream


class TestDot:
    def test_orthogonal(self):
        assert dot([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_value(self):
        assert dot([1.0, 2.0], [3.0, 4.0]) == 11.0

    def test_unit_self_product(self):
        a = l2_normalize([2.0, -1.0, 0.5])
        assert dot(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolationError):
            dot([1.0, 2.0], [1.0, 2.0, 3.0])


class TestExpSim:
    def test_zero_dot(self):
        assert exp_sim([1.0, 0.0], [0.0, 1.0], 1.0) == 1.0

    def test_log2_dot(self):
        # dot = ln 2 at tau 1 -> similarity 2
        a = [math.log(2.0), 0.0]
        b = [1.0, 0.0]
        assert exp_sim(a, b, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_paper_default_temperature(self):
        # unit dot at tau 0.5 -> e^2
        assert exp_sim([1.0, 0.0], [1.0, 0.0], 0.5) == pytest.approx(
            7.38905609893065, rel=1e-12
        )

    def test_symmetry(self):
        rng = RngStream(3)
        for _ in range(20):
            a = rng.normal(size=5)
            b = rng.normal(size=5)
            assert exp_sim(a, b, 0.7) == exp_sim(b, a, 0.7)

    def test_nonpositive_tau(self):
        with pytest.raises(ConfigurationError):
            exp_sim([1.0], [1.0], 0.0)


class TestLogSumExp:
    def test_two_zeros(self):
        assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_max_shift_identity(self):
        assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(
            1000.0 + math.log(2.0), abs=1e-9
        )

    def test_single_element(self):
        assert log_sum_exp([3.25]) == 3.25

    def test_matches_naive_when_safe(self):
        rng = RngStream(11)
        for _ in range(50):
            xs = rng.uniform(-20.0, 20.0, size=int(rng.integers(1, 12)))
            naive = math.log(np.sum(np.exp(xs)))
            assert log_sum_exp(xs) == pytest.approx(naive, rel=1e-12)

    def test_empty(self):
        with pytest.raises(ContractViolationError):
            log_sum_exp([])


class TestL2Normalize:
    def test_hand_value(self):
        np.testing.assert_allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-15)

    def test_idempotent(self):
        rng = RngStream(5)
        for _ in range(20):
            v = rng.normal(size=8)
            once = l2_normalize(v)
            np.testing.assert_allclose(l2_normalize(once), once, atol=1e-12)

    def test_unit_norm_postcondition(self):
        v = l2_normalize([1e3, -2e3, 0.5])
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12

    def test_zero_vector(self):
        with pytest.raises(DegenerateInputError):
            l2_normalize([0.0, 0.0])
