import numpy as np
import pytest

from helpers import spearman_oracle
from rcspace import ConfigurationError, PerformancePredictor, TrainSpec, prediction_error, spearman, transfer_predict
from rcspace.learning import fit_ensemble, filter_pairs, run_experiment, split_pairs


def synthetic_pairs(rng, n=300, noise=0.0):
    X = np.column_stack([
        rng.integers(0, 30, n).astype(float),
        rng.integers(0, 30, n).astype(float),
        rng.uniform(0, 30, n),
    ])
    y = 0.01 * X[:, 0] + noise * rng.normal(size=n)
    return X, y


class TestPredictor:
    def test_constant_target_learned(self, rng):
        X, _ = synthetic_pairs(rng, 60)
        y = np.full(60, 0.37)
        model = PerformancePredictor(random_state=0).fit(X, y)
        np.testing.assert_allclose(model.predict(X), 0.37, atol=1e-6)
        assert prediction_error(model, X, y) == pytest.approx(0.0, abs=1e-6)

    def test_linear_map_in_kernel_rank_learned(self, rng):
        X, y = synthetic_pairs(rng, 400)
        X_train, y_train, X_test, y_test = split_pairs(X, y, 0.7, rng)
        model = PerformancePredictor(random_state=1).fit(X_train, y_train)
        assert prediction_error(model, X_test, y_test) < 0.01

    def test_beats_linear_feature_baseline_on_training_mse(self, rng):
        X, y = synthetic_pairs(rng, 250, noise=0.02)
        y = y + 0.005 * (X[:, 2] / 30.0) ** 2
        model = PerformancePredictor(random_state=2).fit(X, y)
        feats = np.hstack([X, np.ones((len(X), 1))])
        coef, *_ = np.linalg.lstsq(feats, y, rcond=None)
        linear_mse = float(np.mean((feats @ coef - y) ** 2))
        assert model.train_mse_ <= 1.1 * linear_mse

    def test_deterministic_per_seed(self, rng):
        X, y = synthetic_pairs(rng, 120, noise=0.05)
        a = PerformancePredictor(random_state=7).fit(X, y)
        b = PerformancePredictor(random_state=7).fit(X, y)
        np.testing.assert_array_equal(a.theta_, b.theta_)

    def test_predictions_finite_everywhere(self, rng):
        X, y = synthetic_pairs(rng, 100, noise=0.1)
        model = PerformancePredictor(random_state=3).fit(X, y)
        wild = np.array([[1e6, -1e6, 0.0], [0.0, 0.0, 1e9]])
        assert np.all(np.isfinite(model.predict(wild)))

    def test_normalisation_invariance(self, rng):
        X, y = synthetic_pairs(rng, 150, noise=0.02)
        model = PerformancePredictor(random_state=4).fit(X, y)
        scale, shift = np.array([2.0, 0.5, 3.0]), np.array([1.0, -2.0, 10.0])
        rescaled = PerformancePredictor.from_record(model.to_record())
        rescaled.input_mean_ = model.input_mean_ * scale + shift
        rescaled.input_std_ = model.input_std_ * scale
        np.testing.assert_allclose(rescaled.predict(X * scale + shift), model.predict(X), atol=1e-6)

    def test_underdetermined_warns_but_fits(self, rng):
        X, y = synthetic_pairs(rng, 10)
        with pytest.warns(UserWarning, match="underdetermined"):
            model = PerformancePredictor(random_state=0).fit(X, y)
        assert np.all(np.isfinite(model.theta_))

    def test_record_round_trip(self, rng):
        X, y = synthetic_pairs(rng, 80)
        model = PerformancePredictor(random_state=5).fit(X, y)
        clone = PerformancePredictor.from_record(model.to_record())
        np.testing.assert_allclose(clone.predict(X), model.predict(X), atol=0)


class TestPredictionError:
    def test_perfect_predictions_score_zero(self, rng):
        X, y = synthetic_pairs(rng, 60)
        model = PerformancePredictor(random_state=0).fit(X, y)
        pred = model.predict(X)
        assert float(np.sqrt(np.mean((pred - pred) ** 2))) == 0.0

    def test_constant_offset_equals_offset(self):
        class Shifted:
            def predict(self, X):
                return np.zeros(len(X)) + 0.25

        pe = prediction_error(Shifted(), np.zeros((8, 3)), np.zeros(8))
        assert pe == pytest.approx(0.25)

    def test_five_hand_pairs(self):
        class Fixed:
            def predict(self, X):
                return np.array([0.1, 0.2, 0.3, 0.4, 0.5])

        actual = np.array([0.2, 0.2, 0.1, 0.6, 0.5])
        expected = np.sqrt((0.01 + 0.0 + 0.04 + 0.04 + 0.0) / 5)
        assert prediction_error(Fixed(), np.zeros((5, 3)), actual) == pytest.approx(expected)

    def test_empty_test_set_rejected(self, rng):
        X, y = synthetic_pairs(rng, 60)
        model = PerformancePredictor(random_state=0).fit(X, y)
        with pytest.raises(ValueError):
            prediction_error(model, np.empty((0, 3)), np.empty(0))


class TestEnsembleAndThreshold:
    def test_ensemble_size_honoured(self, rng):
        X, y = synthetic_pairs(rng, 120)
        models = fit_ensemble(X, y, TrainSpec(ensemble=10, epochs=50), seed=0)
        assert len(models) == 10

    def test_threshold_filters_train_and_test(self, rng):
        X = rng.uniform(0, 30, size=(700, 3))
        y = rng.uniform(0, 2, size=700)
        spec = TrainSpec(ensemble=2, epochs=30, threshold=0.2)
        result = run_experiment(X, y, spec, seed=0)
        assert np.all(result.y_train <= 0.2)
        assert np.all(result.y_test <= 0.2)

    def test_thresholded_training_helps_on_noisy_tail(self, rng):
        # Pairs above the threshold carry most of the noise, mirroring
        # the poor-reservoir scatter the filtering is meant to remove.
        n = 600
        X = np.column_stack([rng.uniform(0, 30, n), rng.uniform(0, 30, n), rng.uniform(0, 30, n)])
        clean = 0.004 * X[:, 0] + 0.002 * X[:, 2]
        tail = rng.uniform(0.5, 2.0, n) * (rng.random(n) < 0.3)
        y = clean + tail + 0.002 * rng.normal(size=n)
        base = run_experiment(X, y, TrainSpec(ensemble=3, epochs=60, threshold=None), seed=1)
        small = run_experiment(X, y, TrainSpec(ensemble=3, epochs=60, threshold=0.2), seed=1)
        assert small.mean_error <= base.mean_error

    def test_too_few_pairs_rejected(self, rng):
        X, y = synthetic_pairs(rng, 30)
        with pytest.raises(ConfigurationError):
            run_experiment(X, y, TrainSpec(), seed=0)

    def test_filter_none_is_identity(self, rng):
        X, y = synthetic_pairs(rng, 40)
        X2, y2 = filter_pairs(X, y, None)
        np.testing.assert_array_equal(X, X2)


class TestTransfer:
    def test_self_prediction_delta_is_zero(self, rng):
        X, y = synthetic_pairs(rng, 200, noise=0.01)
        result = run_experiment(X, y, TrainSpec(ensemble=3, epochs=60), seed=2)
        transfer = transfer_predict(result.models, result.X_test, result.y_test, result.mean_error)
        assert transfer.delta == 0.0
        assert not transfer.extrapolated

    def test_extrapolation_flag_set_outside_hull(self, rng):
        X, y = synthetic_pairs(rng, 120)
        model = PerformancePredictor(random_state=0).fit(X, y)
        outside = np.array([[100.0, 100.0, 100.0]])
        transfer = transfer_predict(model, outside, np.array([0.5]), best_self_pe=0.1)
        assert transfer.extrapolated

    def test_shared_generator_gives_small_delta(self, rng):
        X_a, y_a = synthetic_pairs(rng, 400, noise=0.005)
        X_b, y_b = synthetic_pairs(rng, 400, noise=0.005)
        result = run_experiment(X_a, y_a, TrainSpec(ensemble=3, epochs=100), seed=3)
        transfer = transfer_predict(result.models, X_b, y_b, result.mean_error)
        assert abs(transfer.delta) < 0.02


class TestSpearman:
    def test_perfect_monotone_association(self):
        x = np.arange(10.0)
        rho, p = spearman(x, x**3)
        assert rho == pytest.approx(1.0)
        assert p < 0.01

    def test_reversed_is_minus_one(self):
        x = np.arange(8.0)
        rho, _ = spearman(x, -x)
        assert rho == pytest.approx(-1.0)

    def test_matches_rank_then_pearson_oracle(self, rng):
        for _ in range(20):
            x = rng.normal(size=10)
            y = rng.normal(size=10) + 0.5 * x
            rho, _ = spearman(x, y)
            assert rho == pytest.approx(spearman_oracle(x, y), abs=1e-12)

    def test_handles_ties_via_average_ranks(self):
        x = [1.0, 1.0, 2.0, 3.0]
        y = [4.0, 4.0, 5.0, 6.0]
        rho, _ = spearman(x, y)
        assert rho == pytest.approx(spearman_oracle(x, y), abs=1e-12)

    def test_exact_permutation_p_for_perfect_small_sample(self):
        # only the identity and the reversal reach |rho| = 1: p = 2/6!
        x = np.arange(6.0)
        _, p = spearman(x, 2 * x + 1)
        assert p == pytest.approx(2 / 720)

    def test_large_sample_uses_t_approximation(self, rng):
        x = rng.normal(size=200)
        y = x + 0.3 * rng.normal(size=200)
        rho, p = spearman(x, y)
        assert rho > 0.8 and p < 1e-10

    def test_constant_sequence_rejected(self):
        with pytest.raises(ValueError):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
