import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import normal_equations_readout
from rcspace import LinearReadout, nmse


class TestTraining:
    def test_single_column_target_recovered(self, rng):
        states = rng.normal(size=(60, 4))
        target = states[:, 2]
        model = LinearReadout(ridge=0.0).fit(states, target)
        np.testing.assert_allclose(model.coef_, [0, 0, 1, 0, 0], atol=1e-10)
        assert nmse(model.predict(states), target) == pytest.approx(0.0, abs=1e-20)

    def test_constant_target_reached_through_bias(self, rng):
        states = rng.normal(size=(40, 3))
        model = LinearReadout(ridge=0.0).fit(states, np.full(40, 2.5))
        np.testing.assert_allclose(model.predict(states), 2.5, atol=1e-9)

    def test_weights_match_normal_equations_oracle(self, rng):
        states = rng.normal(size=(50, 10))
        target = rng.normal(size=50)
        for ridge in (1e-8, 1e-4, 1e-1):
            model = LinearReadout(ridge=ridge).fit(states, target)
            oracle = normal_equations_readout(states, target, ridge)
            np.testing.assert_allclose(model.coef_, oracle, atol=1e-8)

    def test_zero_ridge_rank_deficient_uses_minimum_norm(self, rng):
        base = rng.normal(size=(30, 2))
        states = np.hstack([base, base])  # duplicated columns: rank deficient
        target = rng.normal(size=30)
        model = LinearReadout(ridge=0.0).fit(states, target)
        assert np.all(np.isfinite(model.coef_))
        # residual is the least-squares optimum
        z = np.hstack([states, np.ones((30, 1))])
        lstsq_residual = np.linalg.lstsq(z, target, rcond=None)[0]
        np.testing.assert_allclose(model.coef_, lstsq_residual, atol=1e-10)

    def test_multi_target_matches_per_column_fits(self, rng):
        states = rng.normal(size=(45, 6))
        targets = rng.normal(size=(45, 3))
        joint = LinearReadout(ridge=1e-6).fit(states, targets)
        for j in range(3):
            single = LinearReadout(ridge=1e-6).fit(states, targets[:, j])
            np.testing.assert_allclose(joint.coef_[:, j], single.coef_, atol=1e-10)

    def test_length_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            LinearReadout().fit(rng.normal(size=(10, 2)), rng.normal(size=9))

    def test_negative_ridge_rejected(self, rng):
        with pytest.raises(ValueError):
            LinearReadout(ridge=-1.0).fit(rng.normal(size=(10, 2)), rng.normal(size=10))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_train_error_non_increasing_towards_zero_ridge(self, seed):
        rng = np.random.default_rng(seed)
        states = rng.normal(size=(40, 5))
        target = rng.normal(size=40)
        errors = [
            nmse(LinearReadout(ridge=r).fit(states, target).predict(states), target)
            for r in (1e-2, 1e-5, 0.0)
        ]
        assert errors[2] <= errors[1] + 1e-12 <= errors[0] + 1e-10

    def test_small_ridge_perturbation_is_continuous(self, rng):
        states = rng.normal(size=(80, 6))
        target = rng.normal(size=80)
        a = LinearReadout(ridge=1e-4).fit(states, target).coef_
        b = LinearReadout(ridge=1e-4 * (1 + 1e-6)).fit(states, target).coef_
        assert np.linalg.norm(a - b) < 1e-6 * np.linalg.norm(a) + 1e-12


class TestNmse:
    def test_perfect_prediction_scores_zero(self):
        assert nmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_mean_predictor_scores_one(self, rng):
        target = rng.normal(size=100)
        assert nmse(np.full(100, target.mean()), target) == pytest.approx(1.0)

    def test_hand_computed_value(self):
        # MSE 1/3 against variance 2/3
        assert nmse([1.0, 2.0, 4.0], [1.0, 2.0, 3.0]) == pytest.approx(0.5)

    def test_constant_target_rejected(self):
        with pytest.raises(ValueError):
            nmse([1.0, 2.0], [3.0, 3.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            nmse([], [])
