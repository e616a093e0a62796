"""Task-independent behaviour measures.

A substrate configuration is characterised by three observable
properties that span the behaviour space:

* kernel rank (KR): effective rank of final states under m distinct
  input streams; richness of the nonlinear input separation,
* generalisation rank (GR): the same rank under noisy copies of one
  stream; low values mean similar inputs land on similar states,
* memory capacity (MC): summed fraction of delayed-input variance a
  linear readout can recover from the states.

Measurement inputs are generated from seeds fixed in the config, so a
behaviour point is a deterministic function of the genotype and the
novelty search reacts to configuration changes, not measurement noise.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .exceptions import ConfigurationError, DegenerateRunError
from .readout import LinearReadout
from .substrates import Genotype, SubstrateBase


@dataclasses.dataclass(frozen=True)
class BehaviourPoint:
    """A point (KR, GR, MC) in the behaviour space."""

    kr: int
    gr: int
    mc: float
    degenerate: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.kr, self.gr, self.mc], dtype=float)

    @staticmethod
    def degenerate_point() -> "BehaviourPoint":
        return BehaviourPoint(0, 0, 0.0, degenerate=True)


@dataclasses.dataclass
class MeasureConfig:
    """Parameters of the three behaviour measures.

    ``m`` is the input-stream count for the rank measures (None means
    one stream per observable, which makes the state matrix square).
    Rank streams run for ``washout + stream_length`` samples and only
    the final state is kept. ``mc_max_delay`` defaults to twice the
    observable count. All randomness derives from ``seed``; the three
    measures use independent child seeds.
    """

    m: int | None = None
    stream_length: int = 100
    washout: int = 50
    gr_noise: float = 0.1
    svd_threshold: float = 1e-6
    mc_max_delay: int | None = None
    mc_washout: int = 500
    mc_train: int = 1000
    mc_test: int = 1000
    mc_ridge: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.m is not None and int(self.m) < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        if int(self.stream_length) < 1:
            raise ConfigurationError("stream_length must be >= 1")
        if int(self.washout) < 0:
            raise ConfigurationError("washout must be >= 0")
        if float(self.svd_threshold) <= 0:
            raise ConfigurationError("svd_threshold must be > 0")
        if float(self.gr_noise) < 0:
            raise ConfigurationError("gr_noise must be >= 0")
        if int(self.mc_train) < 2 or int(self.mc_test) < 2:
            raise ConfigurationError("mc_train and mc_test must be >= 2")
        if self.mc_max_delay is not None and int(self.mc_max_delay) < 1:
            raise ConfigurationError("mc_max_delay must be >= 1")


def effective_rank(matrix, threshold: float) -> int:
    """Count singular values above ``threshold`` times the largest one."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix contains non-finite entries")
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > threshold * s[0]))


class BehaviourEvaluator:
    """Measures behaviours of genotypes for one substrate and config.

    Generates the measurement input streams once at construction and
    reuses them for every genotype, which both fixes the measurement
    seeds for a whole search run and avoids rebuilding the streams in
    inner loops.
    """

    def __init__(self, substrate: SubstrateBase, cfg: MeasureConfig | None = None):
        self.substrate = substrate
        self.cfg = cfg if cfg is not None else MeasureConfig()
        n = substrate.n_observables
        self.m = int(self.cfg.m) if self.cfg.m is not None else n
        self.max_delay = (
            int(self.cfg.mc_max_delay) if self.cfg.mc_max_delay is not None else 2 * n
        )
        # Delayed targets must stay inside the sequence, so the warm-up
        # segment is never shorter than the largest delay.
        self.mc_washout = max(int(self.cfg.mc_washout), self.max_delay)

        kr_ss, gr_ss, mc_ss = np.random.SeedSequence(self.cfg.seed).spawn(3)
        length = int(self.cfg.washout) + int(self.cfg.stream_length)
        kr_rng = np.random.default_rng(kr_ss)
        self._kr_streams = kr_rng.uniform(-1.0, 1.0, size=(self.m, length))
        gr_rng = np.random.default_rng(gr_ss)
        base = gr_rng.uniform(-1.0, 1.0, size=length)
        noise = gr_rng.uniform(-self.cfg.gr_noise, self.cfg.gr_noise, size=(self.m - 1, length)) if self.m > 1 else np.empty((0, length))
        self._gr_streams = np.vstack([base[None, :], base[None, :] + noise])
        mc_rng = np.random.default_rng(mc_ss)
        mc_length = self.mc_washout + int(self.cfg.mc_train) + int(self.cfg.mc_test)
        self._mc_input = mc_rng.uniform(0.0, 1.0, size=mc_length)

    def _rank_of(self, genotype: Genotype, streams: np.ndarray) -> int:
        states = self.substrate.final_states_batch(genotype, streams)
        if not np.all(np.isfinite(states)):
            raise DegenerateRunError("non-finite final states")
        return effective_rank(states, self.cfg.svd_threshold)

    def kernel_rank(self, genotype: Genotype) -> int:
        try:
            return self._rank_of(genotype, self._kr_streams)
        except DegenerateRunError:
            return 0

    def generalisation_rank(self, genotype: Genotype) -> int:
        try:
            return self._rank_of(genotype, self._gr_streams)
        except DegenerateRunError:
            return 0

    def memory_capacity(self, genotype: Genotype) -> float:
        try:
            return self._memory_capacity(genotype)
        except DegenerateRunError:
            return 0.0

    def _memory_capacity(self, genotype: Genotype) -> float:
        u = self._mc_input
        n_train = int(self.cfg.mc_train)
        states = self.substrate.run(genotype, u, washout=self.mc_washout)
        if not np.all(np.isfinite(states)):
            raise DegenerateRunError("non-finite states")
        # Delayed copies of the input, aligned with the post-washout rows.
        t = self.mc_washout + np.arange(states.shape[0])
        delays = np.arange(1, self.max_delay + 1)
        targets = u[t[:, None] - delays[None, :]]

        model = LinearReadout(ridge=self.cfg.mc_ridge)
        model.fit(states[:n_train], targets[:n_train])
        pred = model.predict(states[n_train:])
        actual = targets[n_train:]

        pred_c = pred - pred.mean(axis=0)
        actual_c = actual - actual.mean(axis=0)
        cov = np.mean(pred_c * actual_c, axis=0)
        var_pred = np.mean(pred_c**2, axis=0)
        var_actual = np.mean(actual_c**2, axis=0)
        # A constant readout output recovers nothing; the relative floor
        # absorbs rounding dust in an otherwise flat prediction.
        valid = (var_actual > 0.0) & (var_pred > 1e-24 * var_actual)
        denom = np.where(valid, var_pred * var_actual, 1.0)
        mc_k = np.where(valid, cov**2 / denom, 0.0)
        return float(np.clip(mc_k, 0.0, 1.0).sum())

    def behaviour(self, genotype: Genotype) -> BehaviourPoint:
        try:
            kr = self._rank_of(genotype, self._kr_streams)
            gr = self._rank_of(genotype, self._gr_streams)
            mc = self._memory_capacity(genotype)
        except DegenerateRunError:
            return BehaviourPoint.degenerate_point()
        return BehaviourPoint(kr, gr, mc)

    __call__ = behaviour


def kernel_rank(substrate: SubstrateBase, genotype: Genotype, cfg: MeasureConfig | None = None) -> int:
    return BehaviourEvaluator(substrate, cfg).kernel_rank(genotype)


def generalisation_rank(substrate: SubstrateBase, genotype: Genotype, cfg: MeasureConfig | None = None) -> int:
    return BehaviourEvaluator(substrate, cfg).generalisation_rank(genotype)


def memory_capacity(substrate: SubstrateBase, genotype: Genotype, cfg: MeasureConfig | None = None) -> float:
    return BehaviourEvaluator(substrate, cfg).memory_capacity(genotype)


def behaviour(substrate: SubstrateBase, genotype: Genotype, cfg: MeasureConfig | None = None) -> BehaviourPoint:
    return BehaviourEvaluator(substrate, cfg).behaviour(genotype)
