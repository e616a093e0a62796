"""Small input-validation helpers used by the estimator-style classes."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError


def as_rng(seed_or_rng=None) -> np.random.Generator:
    """Return a numpy Generator from a seed, SeedSequence, Generator, or None."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def check_sequence(u, name: str = "u") -> np.ndarray:
    """Coerce an input sequence to a float array of shape (L,) or (L, d).

    Rejects empty or non-finite input.
    """
    arr = np.asarray(u, dtype=float)
    if arr.ndim not in (1, 2) or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 1-D or 2-D sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_2d(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def check_washout(washout: int, length: int) -> int:
    washout = int(washout)
    if washout < 0:
        raise ValueError(f"washout must be non-negative, got {washout}")
    if washout >= length:
        raise ValueError(f"washout ({washout}) must be smaller than the input length ({length})")
    return washout


def check_rate(rate: float, name: str) -> float:
    rate = float(rate)
    if not 0.0 <= rate <= 1.0:
        raise ConfigurationError(f"{name} must lie in [0, 1], got {rate}")
    return rate


def check_range(bounds, name: str) -> tuple[float, float]:
    lo, hi = (float(bounds[0]), float(bounds[1]))
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise ConfigurationError(f"{name} must be a finite (lower, upper) pair with lower <= upper, got {bounds}")
    return lo, hi
