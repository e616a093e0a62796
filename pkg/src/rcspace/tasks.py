"""Benchmark sequence tasks and end-to-end genotype evaluation.

Four tasks are supported: two nonlinear autoregressive moving-average
systems (order 10 and 30), next-step prediction of the far-infrared
laser series (loaded from a local file), and reconstruction of a symbol
stream observed through a noisy nonlinear channel.
"""

from __future__ import annotations

import dataclasses
import logging
import os

import numpy as np

from .exceptions import ConfigurationError, DegenerateRunError, IngestionError, NumericalError
from .readout import LinearReadout, nmse
from .substrates import Genotype, SubstrateBase

log = logging.getLogger(__name__)

TASK_IDS = ("narma10", "narma30", "laser", "nce")

DEFAULT_RIDGE_GRID = (0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0)
DEFAULT_SPLITS = (0.5, 0.25, 0.25)

# Recurrence coefficients (alpha, beta, delta, gamma) per system order.
NARMA_COEFFS = {
    10: (0.3, 0.05, 0.1, 1.0),
    30: (0.2, 0.004, 0.001, 1.0),
}
NARMA_DIVERGENCE_LIMIT = 10.0
NARMA_MAX_RETRIES = 5

# Channel filter taps at offsets +2 .. -7 relative to the current symbol.
NCE_TAPS = (0.08, -0.12, 1.0, 0.18, -0.1, 0.091, -0.05, 0.04, 0.03, 0.01)
NCE_SYMBOLS = (-3.0, -1.0, 1.0, 3.0)
NCE_INPUT_SHIFT = 30.0
NCE_TARGET_LAG = 2

DATA_DIR_ENV = "RCSPACE_DATA"
LASER_FILENAME = "santafe_laser.txt"


@dataclasses.dataclass
class TaskDataset:
    """Input/target pair with ordered train/validation/test boundaries."""

    name: str
    u: np.ndarray
    y: np.ndarray
    train_end: int
    val_end: int
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.u.shape[0] != self.y.shape[0]:
            raise ConfigurationError("input and target lengths differ")
        if not 0 < self.train_end < self.val_end < self.u.shape[0]:
            raise ConfigurationError(
                f"split boundaries must satisfy 0 < train_end < val_end < length, "
                f"got ({self.train_end}, {self.val_end}, {self.u.shape[0]})"
            )

    def __len__(self) -> int:
        return int(self.u.shape[0])

    def split_of(self, t: int) -> str:
        if t < self.train_end:
            return "train"
        if t < self.val_end:
            return "val"
        return "test"


def _split_bounds(length: int, splits) -> tuple[int, int]:
    train_frac, val_frac, test_frac = splits
    if abs(train_frac + val_frac + test_frac - 1.0) > 1e-9:
        raise ConfigurationError(f"split fractions must sum to 1, got {splits}")
    train_end = int(round(train_frac * length))
    val_end = int(round((train_frac + val_frac) * length))
    return train_end, val_end


def gen_narma(order: int, length: int, seed: int, splits=DEFAULT_SPLITS) -> TaskDataset:
    """Generate an order-10 or order-30 NARMA dataset.

    The driving input is i.i.d. uniform on [0, 0.5] and the output obeys

        y(t+1) = gamma * (alpha*y(t) + beta*y(t)*sum(y(t-i), i<order)
                          + 1.5*u(t-9)*u(t) + delta)

    from an all-zero history. The order-30 recurrence occasionally blows
    up; diverging sequences are regenerated from a fresh child seed, up
    to NARMA_MAX_RETRIES times.
    """
    if order not in NARMA_COEFFS:
        raise ConfigurationError(f"unsupported system order {order}; choose from {sorted(NARMA_COEFFS)}")
    if length <= max(order, 10):
        raise ConfigurationError(f"length must exceed the system order, got {length}")
    alpha, beta, delta, gamma = NARMA_COEFFS[order]
    root = np.random.SeedSequence(seed)
    for attempt, child in enumerate(root.spawn(NARMA_MAX_RETRIES + 1)):
        rng = np.random.default_rng(child)
        u = rng.uniform(0.0, 0.5, size=length)
        y = np.zeros(length)
        diverged = False
        for t in range(length - 1):
            window = y[max(0, t - order + 1) : t + 1].sum()
            u_lag = u[t - 9] if t >= 9 else 0.0
            y[t + 1] = gamma * (alpha * y[t] + beta * y[t] * window + 1.5 * u_lag * u[t] + delta)
            if abs(y[t + 1]) > NARMA_DIVERGENCE_LIMIT:
                diverged = True
                break
        if not diverged:
            train_end, val_end = _split_bounds(length, splits)
            meta = {"task": f"narma{order}", "seed": seed, "attempt": attempt}
            return TaskDataset(f"narma{order}", u, y, train_end, val_end, meta)
        log.warning("narma%d generation diverged (seed %s, attempt %d); retrying", order, seed, attempt)
    raise NumericalError(f"narma{order} generation diverged {NARMA_MAX_RETRIES + 1} times for seed {seed}")


def channel_filter(d) -> np.ndarray:
    """Apply the channel's linear filter to a symbol sequence.

    Boundaries are zero-padded, so the result has the same length as
    ``d``; entry n is sum(tap_j * d[n + 2 - j]).
    """
    d = np.asarray(d, dtype=float)
    padded = np.concatenate([np.zeros(len(NCE_TAPS) - 3), d, np.zeros(2)])
    q = np.zeros(d.shape[0])
    for j, tap in enumerate(NCE_TAPS):
        # offset relative to n runs +2, +1, 0, ..., -7
        start = len(NCE_TAPS) - 3 + 2 - j
        q += tap * padded[start : start + d.shape[0]]
    return q


def gen_nce(length: int, seed: int, splits=DEFAULT_SPLITS) -> TaskDataset:
    """Generate the nonlinear channel-equalisation dataset.

    Symbols d are i.i.d. from {-3, -1, +1, +3}; the observed channel
    output is u = q + 0.036 q^2 - 0.011 q^3 shifted by +30, with q the
    linearly filtered symbols. The target is the symbol two steps back.
    Boundary samples without full filter support are dropped.
    """
    if length <= len(NCE_TAPS):
        raise ConfigurationError(f"length must exceed the filter span ({len(NCE_TAPS)}), got {length}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    d = rng.choice(NCE_SYMBOLS, size=length)
    q = channel_filter(d)
    n = np.arange(len(NCE_TAPS) - 3, length - 2)  # full-support indices
    q = q[n]
    u = q + 0.036 * q**2 - 0.011 * q**3 + NCE_INPUT_SHIFT
    target = d[n - NCE_TARGET_LAG]
    train_end, val_end = _split_bounds(u.shape[0], splits)
    meta = {"task": "nce", "seed": seed, "input_shift": NCE_INPUT_SHIFT, "target_lag": NCE_TARGET_LAG}
    return TaskDataset("nce", u, target, train_end, val_end, meta)


def default_laser_path() -> str:
    return os.path.join(os.environ.get(DATA_DIR_ENV, "."), LASER_FILENAME)


def load_laser(path: str | None = None, splits=DEFAULT_SPLITS) -> TaskDataset:
    """Load the laser series for next-step prediction.

    The file holds one numeric sample per line. Values are min-max
    rescaled to [0, 1]; the input is the current value, the target the
    next one.
    """
    path = path or default_laser_path()
    if not os.path.exists(path):
        raise IngestionError(
            f"laser data file not found: {path} (set ${DATA_DIR_ENV} or pass an explicit path; "
            f"expected one numeric sample per line)"
        )
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                values.append(float(stripped))
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: cannot parse {stripped!r} as a number") from None
    if len(values) < 3:
        raise IngestionError(f"{path}: needs at least 3 samples, found {len(values)}")
    x = np.asarray(values, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise IngestionError(f"{path}: series is constant; cannot rescale")
    x = (x - lo) / (hi - lo)
    u, y = x[:-1], x[1:]
    train_end, val_end = _split_bounds(u.shape[0], splits)
    meta = {"task": "laser", "path": os.path.abspath(path), "scale_min": lo, "scale_max": hi}
    return TaskDataset("laser", u, y, train_end, val_end, meta)


def make_dataset(task_id: str, length: int, seed: int, laser_path: str | None = None, splits=DEFAULT_SPLITS) -> TaskDataset:
    if task_id == "narma10":
        return gen_narma(10, length, seed, splits)
    if task_id == "narma30":
        return gen_narma(30, length, seed, splits)
    if task_id == "nce":
        return gen_nce(length, seed, splits)
    if task_id == "laser":
        return load_laser(laser_path, splits)
    raise ConfigurationError(f"unknown task {task_id!r}; choose from {TASK_IDS}")


def evaluate_task(
    substrate: SubstrateBase,
    genotype: Genotype,
    dataset: TaskDataset,
    ridge_grid=DEFAULT_RIDGE_GRID,
    washout: int | None = None,
) -> float:
    """Test-split NMSE of a genotype on a dataset.

    Runs the substrate over the full input, trains a readout per ridge
    value on the train rows, picks the ridge with the lowest validation
    NMSE, and scores that readout on the test rows. Diverged runs score
    the worst-case sentinel 1.0.
    """
    washout = int(substrate.washout if washout is None else washout)
    if not ridge_grid:
        raise ConfigurationError("ridge_grid must contain at least one value")
    if washout >= dataset.train_end:
        raise ConfigurationError(
            f"washout ({washout}) must be smaller than the train boundary ({dataset.train_end})"
        )
    try:
        states = substrate.run(genotype, dataset.u, washout=washout)
    except DegenerateRunError:
        log.warning("degenerate run for task %s; scoring sentinel NMSE 1.0", dataset.name)
        return 1.0
    train = slice(0, dataset.train_end - washout)
    val = slice(dataset.train_end - washout, dataset.val_end - washout)
    test = slice(dataset.val_end - washout, None)
    y = dataset.y[washout:]

    best = None
    # Strongest shrinkage first, so validation ties resolve to the
    # stabler readout on near-singular state matrices.
    for ridge in sorted(ridge_grid, reverse=True):
        model = LinearReadout(ridge=ridge).fit(states[train], y[train])
        score = nmse(model.predict(states[val]), y[val])
        if best is None or score < best[0]:
            best = (score, model)
    return nmse(best[1].predict(states[test]), y[test])


def dataset_rows(dataset: TaskDataset):
    """Yield (t, u, y, split) tuples for CSV export."""
    for t in range(len(dataset)):
        yield t, dataset.u[t], dataset.y[t], dataset.split_of(t)
