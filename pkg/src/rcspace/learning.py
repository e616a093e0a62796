"""Learning the behaviour -> task-performance relationship.

A small feed-forward network (one sigmoidal hidden layer, linear
output) is fitted to (behaviour point, task NMSE) pairs with a damped
Gauss-Newton scheme, and its test error indicates how reliably the
behaviour space captures what the substrate computes. Ensembles of
independently initialised networks give spread; models trained on one
substrate can be scored on another to probe transferability.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import math
import warnings

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, RegressorMixin

from .exceptions import ConfigurationError
from .validation import as_rng, check_2d

MIN_EXPERIMENT_PAIRS = 50
EXACT_PERMUTATION_MAX_N = 10


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _sigmoid(a):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-a))


class PerformancePredictor(BaseEstimator, RegressorMixin):
    """Feed-forward regressor from behaviour coordinates to task NMSE.

    Inputs are z-scored with constants taken from the training data.
    The hidden-to-output layer is initialised by a least-squares solve
    on the random hidden features, then all weights are refined by
    Levenberg-Marquardt (full batch) for at most ``epochs`` accepted
    updates, stopping early after ``patience`` epochs without
    improvement. Fitting is deterministic given ``random_state``.
    """

    def __init__(self, hidden_units=10, epochs=1000, patience=100, damping=1e-3, random_state=None):
        self.hidden_units = hidden_units
        self.epochs = epochs
        self.patience = patience
        self.damping = damping
        self.random_state = random_state

    # -- internals ------------------------------------------------------

    def _unpack(self, theta, n_in):
        h = int(self.hidden_units)
        w1 = theta[: h * n_in].reshape(h, n_in)
        b1 = theta[h * n_in : h * n_in + h]
        w2 = theta[h * n_in + h : h * n_in + 2 * h]
        b2 = theta[-1]
        return w1, b1, w2, b2

    def _forward(self, xn, theta):
        w1, b1, w2, b2 = self._unpack(theta, xn.shape[1])
        z = _sigmoid(xn @ w1.T + b1)
        return z @ w2 + b2, z

    def _jacobian(self, xn, theta, z):
        w1, b1, w2, b2 = self._unpack(theta, xn.shape[1])
        n = xn.shape[0]
        s = z * (1.0 - z) * w2  # d yhat / d b1
        j_w1 = (s[:, :, None] * xn[:, None, :]).reshape(n, -1)
        return np.hstack([j_w1, s, z, np.ones((n, 1))])

    def fit(self, X, y):
        X = check_2d(X, "behaviours")
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError("behaviour and target counts differ")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 training pairs")
        h = int(self.hidden_units)
        n, n_in = X.shape
        n_params = h * n_in + 2 * h + 1
        if n < n_params:
            warnings.warn(
                f"{n} pairs for {n_params} parameters; the damped fit is underdetermined",
                stacklevel=2,
            )
        rng = as_rng(self.random_state)

        self.input_mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.input_std_ = np.where(std > 0, std, 1.0)
        self.train_min_ = X.min(axis=0)
        self.train_max_ = X.max(axis=0)
        xn = (X - self.input_mean_) / self.input_std_

        w1 = rng.uniform(-1.0, 1.0, size=(h, n_in))
        b1 = rng.uniform(-1.0, 1.0, size=h)
        z = _sigmoid(xn @ w1.T + b1)
        feats = np.hstack([z, np.ones((n, 1))])
        out, *_ = np.linalg.lstsq(
            np.vstack([feats, 1e-4 * np.eye(h + 1)]),
            np.concatenate([y, np.zeros(h + 1)]),
            rcond=None,
        )
        theta = np.concatenate([w1.ravel(), b1, out[:h], out[-1:]])

        mu = float(self.damping)
        pred, z = self._forward(xn, theta)
        residual = pred - y
        sse = float(residual @ residual)
        best_sse = sse
        stale = 0
        n_iter = 0
        eye = np.eye(n_params)
        for _ in range(int(self.epochs)):
            jac = self._jacobian(xn, theta, z)
            grad = jac.T @ residual
            hess = jac.T @ jac
            accepted = False
            while mu <= 1e10:
                try:
                    delta = np.linalg.solve(hess + mu * eye, grad)
                except np.linalg.LinAlgError:
                    mu *= 10.0
                    continue
                trial = theta - delta
                pred_t, z_t = self._forward(xn, trial)
                residual_t = pred_t - y
                sse_t = float(residual_t @ residual_t)
                if sse_t < sse:
                    theta, residual, z, sse = trial, residual_t, z_t, sse_t
                    mu = max(mu / 10.0, 1e-12)
                    accepted = True
                    break
                mu *= 10.0
            n_iter += 1
            if not accepted:
                break
            if sse < best_sse * (1.0 - 1e-10):
                best_sse = sse
                stale = 0
            else:
                stale += 1
                if stale >= int(self.patience):
                    break
        self.theta_ = theta
        self.n_iter_ = n_iter
        self.train_mse_ = sse / n
        return self

    def predict(self, X):
        X = check_2d(X, "behaviours")
        xn = (X - self.input_mean_) / self.input_std_
        pred, _ = self._forward(xn, self.theta_)
        return pred

    def in_training_hull(self, X) -> np.ndarray:
        """Per-point flag: inside the axis-aligned hull of the training data."""
        X = check_2d(X, "behaviours")
        return np.all((X >= self.train_min_) & (X <= self.train_max_), axis=1)

    def to_record(self) -> dict:
        """Flat-weight record with normalisation constants."""
        return {
            "hidden_units": int(self.hidden_units),
            "weights": self.theta_.tolist(),
            "input_mean": self.input_mean_.tolist(),
            "input_std": self.input_std_.tolist(),
            "train_min": self.train_min_.tolist(),
            "train_max": self.train_max_.tolist(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "PerformancePredictor":
        model = cls(hidden_units=record["hidden_units"])
        model.theta_ = np.asarray(record["weights"], dtype=float)
        model.input_mean_ = np.asarray(record["input_mean"], dtype=float)
        model.input_std_ = np.asarray(record["input_std"], dtype=float)
        model.train_min_ = np.asarray(record["train_min"], dtype=float)
        model.train_max_ = np.asarray(record["train_max"], dtype=float)
        return model


@dataclasses.dataclass
class TrainSpec:
    """Experiment-level settings for fitting predictor ensembles."""

    train_fraction: float = 0.7
    epochs: int = 1000
    ensemble: int = 10
    hidden_units: int = 10
    threshold: float | None = None

    def __post_init__(self):
        if not 0.0 < float(self.train_fraction) < 1.0:
            raise ConfigurationError("train_fraction must lie in (0, 1)")
        if int(self.ensemble) < 1:
            raise ConfigurationError("ensemble must be >= 1")
        if int(self.epochs) < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.threshold is not None and float(self.threshold) <= 0:
            raise ConfigurationError("threshold must be positive when set")


def filter_pairs(X, y, threshold: float | None):
    """Drop pairs whose task error exceeds the threshold (train and test alike)."""
    X = check_2d(X, "behaviours")
    y = np.asarray(y, dtype=float).ravel()
    if threshold is None:
        return X, y
    keep = y <= float(threshold)
    return X[keep], y[keep]


def split_pairs(X, y, train_fraction: float, rng):
    """Shuffled train/test split of (behaviour, NMSE) pairs."""
    X = check_2d(X, "behaviours")
    y = np.asarray(y, dtype=float).ravel()
    rng = as_rng(rng)
    order = rng.permutation(X.shape[0])
    cut = int(round(train_fraction * X.shape[0]))
    if cut < 1 or cut >= X.shape[0]:
        raise ConfigurationError(f"train fraction {train_fraction} leaves an empty split for {X.shape[0]} pairs")
    tr, te = order[:cut], order[cut:]
    return X[tr], y[tr], X[te], y[te]


def prediction_error(model, X_test, y_test) -> float:
    """Root mean squared error between predicted and actual task NMSE."""
    y_test = np.asarray(y_test, dtype=float).ravel()
    if y_test.size == 0:
        raise ValueError("empty test set")
    diff = model.predict(X_test) - y_test
    return float(np.sqrt(np.mean(diff**2)))


def fit_ensemble(X_train, y_train, spec: TrainSpec, seed=None) -> list:
    """Train ``spec.ensemble`` predictors with independent initialisations."""
    children = _seed_sequence(seed).spawn(int(spec.ensemble))
    models = []
    for child in children:
        model = PerformancePredictor(
            hidden_units=spec.hidden_units, epochs=spec.epochs, random_state=np.random.default_rng(child)
        )
        models.append(model.fit(X_train, y_train))
    return models


@dataclasses.dataclass
class ExperimentResult:
    models: list
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    errors: list[float]

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def best_error(self) -> float:
        return float(np.min(self.errors))


def run_experiment(X, y, spec: TrainSpec, seed=None) -> ExperimentResult:
    """Threshold, split, train an ensemble, and score it (the full loop).

    Requires at least MIN_EXPERIMENT_PAIRS pairs after thresholding.
    """
    X, y = filter_pairs(X, y, spec.threshold)
    if X.shape[0] < MIN_EXPERIMENT_PAIRS:
        raise ConfigurationError(
            f"need at least {MIN_EXPERIMENT_PAIRS} pairs after thresholding, got {X.shape[0]}"
        )
    split_ss, fit_ss = _seed_sequence(seed).spawn(2)
    X_train, y_train, X_test, y_test = split_pairs(X, y, spec.train_fraction, np.random.default_rng(split_ss))
    models = fit_ensemble(X_train, y_train, spec, fit_ss)
    errors = [prediction_error(m, X_test, y_test) for m in models]
    return ExperimentResult(models, X_train, y_train, X_test, y_test, errors)


@dataclasses.dataclass
class TransferResult:
    pe: float
    delta: float
    extrapolated: bool


def transfer_predict(models, X_other, y_other, best_self_pe: float, threshold: float | None = None) -> TransferResult:
    """Score models trained on one substrate against another substrate's pairs.

    ``delta`` is the transfer prediction error minus the best
    self-prediction error; the extrapolation flag is set when any target
    behaviour lies outside the models' training hull.
    """
    X_other, y_other = filter_pairs(X_other, y_other, threshold)
    if X_other.shape[0] == 0:
        raise ValueError("no pairs to transfer-predict (threshold removed everything?)")
    models = list(models) if isinstance(models, (list, tuple)) else [models]
    pe = float(np.mean([prediction_error(m, X_other, y_other) for m in models]))
    extrapolated = bool(np.any([~m.in_training_hull(X_other) for m in models]))
    return TransferResult(pe=pe, delta=pe - float(best_self_pe), extrapolated=extrapolated)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    i = 0
    sorted_vals = values[order]
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(pred, actual) -> tuple[float, float]:
    """Rank correlation between two sequences with a two-sided p-value.

    Ties get average ranks. The p-value is exact (all-permutations) for
    n <= 10 and uses the usual t approximation above that. Constant
    sequences have no defined rank correlation and raise.
    """
    x = np.asarray(pred, dtype=float).ravel()
    y = np.asarray(actual, dtype=float).ravel()
    if x.size != y.size or x.size < 3:
        raise ValueError("need two equal-length sequences of at least 3 values")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    sx = float(np.sqrt(np.mean(rxc**2)))
    sy = float(np.sqrt(np.mean(ryc**2)))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("rank correlation is undefined for constant sequences")
    n = x.size
    rho = float(np.mean(rxc * ryc) / (sx * sy))

    if n <= EXACT_PERMUTATION_MAX_N:
        p = _exact_permutation_p(rxc, ry, sx, sy, rho)
    else:
        r = min(max(rho, -1.0 + 1e-15), 1.0 - 1e-15)
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return rho, min(p, 1.0)


@functools.lru_cache(maxsize=4)
def _null_rank_products(rx_key: tuple, ry_key: tuple) -> np.ndarray:
    """Sorted sum(rx * permuted(ry)) over every permutation of ry.

    The distribution depends only on the two rank multisets, so it is
    cached; with n <= 10 the largest table holds 10! sums.
    """
    rx = np.asarray(rx_key, dtype=float)
    n = rx.size
    perms = itertools.permutations(ry_key)
    sums = []
    chunk = 100_000
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(perms, chunk)), dtype=float
        )
        if flat.size == 0:
            break
        sums.append(flat.reshape(-1, n) @ rx)
    return np.sort(np.concatenate(sums))


def _exact_permutation_p(rxc, ry, sx, sy, rho_obs):
    # rxc is centred, so rho_perm = sum(rxc * ry_perm) / (n*sx*sy).
    n = rxc.size
    sums = _null_rank_products(tuple(np.sort(rxc)), tuple(np.sort(ry)))
    total = sums.size
    cut = (abs(rho_obs) - 1e-12) * n * sx * sy
    if cut <= 0.0:
        return 1.0
    count_high = total - int(np.searchsorted(sums, cut, side="left"))
    count_low = int(np.searchsorted(sums, -cut, side="right"))
    return (count_high + count_low) / total
