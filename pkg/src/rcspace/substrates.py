"""Configurable dynamical substrates observed as reservoirs.

A substrate is anything with configurable parameters and observable state
variables: it decodes a flat genotype of normalised genes into concrete
parameters, is driven by an input sequence, and exposes one state vector
per time step. Two simulated substrates are provided: a recurrent
tanh network (:class:`EchoStateNetwork`) and a single-nonlinear-node
delay-line system with time-multiplexed virtual nodes
(:class:`MackeyGlassReservoir`). Hardware-backed substrates can plug in
by subclassing :class:`SubstrateBase` and implementing ``decode`` and
``run``.

All genes are reals in [0, 1]; decoding maps them affinely onto each
parameter's declared range, so any vector in the unit hypercube is a
valid configuration.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ConfigurationError, DegenerateRunError, NumericalError
from .validation import as_rng, check_range, check_rate, check_sequence, check_washout

# Clamp applied when a parameter range is an open interval.
OPEN_INTERVAL_EPS = 1e-6

# Runs whose state magnitude exceeds this are treated as diverged.
DIVERGENCE_CAP = 1e6


@dataclasses.dataclass(eq=False)
class Genotype:
    """Flat vector of genes in [0, 1] tied to the substrate that decodes it."""

    genes: np.ndarray
    substrate: "SubstrateBase"

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=float)
        if self.genes.ndim != 1:
            raise ConfigurationError(f"genes must be 1-D, got shape {self.genes.shape}")
        if self.genes.size != self.substrate.n_genes:
            raise ConfigurationError(
                f"genotype length {self.genes.size} does not match the "
                f"substrate's gene count {self.substrate.n_genes}"
            )
        if self.genes.size and (self.genes.min() < 0.0 or self.genes.max() > 1.0):
            raise ConfigurationError("genes must lie in [0, 1]")

    def copy_with(self, genes: np.ndarray) -> "Genotype":
        return Genotype(genes, self.substrate)


@dataclasses.dataclass
class EsnParams:
    """Decoded recurrent-network parameters.

    ``w`` and ``w_in`` hold the raw weight draws; ``w_effective`` and
    ``w_in_effective`` are the matrices actually used by the state
    update: raw weights scaled by the global factors, with the sparsity
    mask applied to ``w``. The input matrix carries a trailing bias
    column. Output feedback is fixed to zero (open-loop training only).
    """

    w: np.ndarray
    w_in: np.ndarray
    w_scaling: float
    input_scaling: float
    sparsity: float
    w_effective: np.ndarray
    w_in_effective: np.ndarray


@dataclasses.dataclass
class DrParams:
    """Decoded delay-line parameters.

    ``eta`` is the feedback strength, ``gamma`` the input scaling, ``p``
    the nonlinearity exponent, and ``mask`` the per-virtual-node binary
    drive weights. The timing constants are copied from the substrate:
    node separation ``theta``, loop delay ``tau = n_virtual * theta``,
    and node time-scale ``time_scale``.
    """

    eta: float
    gamma: float
    p: float
    mask: np.ndarray
    theta: float
    tau: float
    time_scale: float
    n_virtual: int


class SubstrateBase(BaseEstimator):
    """Common behaviour for all substrates.

    Subclasses must provide ``kind``, ``n_observables``, ``n_genes``,
    ``gene_bounds``, ``decode``, and ``run``; ``final_states_batch`` has
    a generic sequential fallback that hardware-backed substrates can
    keep.
    """

    kind = "abstract"

    @property
    def n_observables(self) -> int:
        raise NotImplementedError

    @property
    def n_genes(self) -> int:
        raise NotImplementedError

    @property
    def gene_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) arrays of per-gene decoded ranges."""
        raise NotImplementedError

    def decode(self, genotype: Genotype):
        raise NotImplementedError

    def run(self, genotype: Genotype, u, washout: int = 0) -> np.ndarray:
        """Drive the substrate with ``u`` and return post-washout states.

        Returns a (len(u) - washout, n_observables) matrix; row t holds
        the observable state after consuming input sample washout + t.
        Raises DegenerateRunError when the state diverges.
        """
        raise NotImplementedError

    def random_genotype(self, rng=None) -> Genotype:
        rng = as_rng(rng)
        return Genotype(rng.random(self.n_genes), self)

    def final_states_batch(self, genotype: Genotype, streams: np.ndarray) -> np.ndarray:
        """Final state vector for each of m input streams.

        ``streams`` is (m, L); the result is (n_observables, m) with
        column j the state after the last sample of stream j. The base
        implementation just loops over ``run``.
        """
        streams = np.atleast_2d(np.asarray(streams, dtype=float))
        cols = [self.run(genotype, s, washout=0)[-1] for s in streams]
        return np.stack(cols, axis=1)

    def _check_genotype(self, genotype: Genotype) -> np.ndarray:
        if genotype.substrate is not self:
            # Allow genotypes decoded by an identically-parameterised spec.
            if genotype.genes.size != self.n_genes:
                raise ConfigurationError(
                    f"genotype length {genotype.genes.size} does not match "
                    f"this substrate's gene count {self.n_genes}"
                )
        return genotype.genes


def _affine(genes, lo, hi):
    return lo + np.asarray(genes) * (hi - lo)


class EchoStateNetwork(SubstrateBase):
    """Random recurrent tanh network observed at every node.

    State update: x(t) = tanh(W_in_eff [u(t); 1] + W_eff x(t-1)), with
    zero output feedback. The genotype encodes, in order: the global
    weight-matrix scaling, the input scaling, the sparsity level, the
    raw input weights (n_nodes x (n_inputs + 1), bias column last,
    row-major), and the raw recurrent weights (n_nodes x n_nodes,
    row-major).

    Sparsity is applied by zeroing ``round(sparsity * n_nodes**2)``
    recurrent weights in a hash-derived order, which keeps the non-zero
    fraction exact, the mask a deterministic function of the genes, and
    the surviving weights uniformly distributed on their range.
    """

    kind = "esn"

    def __init__(
        self,
        n_nodes=50,
        n_inputs=1,
        washout=50,
        w_range=(-0.5, 0.5),
        w_in_range=(-1.0, 1.0),
        w_scaling_range=(0.0, 2.0),
        input_scaling_range=(-1.0, 1.0),
        sparsity_range=(0.0, 1.0),
    ):
        self.n_nodes = n_nodes
        self.n_inputs = n_inputs
        self.washout = washout
        self.w_range = w_range
        self.w_in_range = w_in_range
        self.w_scaling_range = w_scaling_range
        self.input_scaling_range = input_scaling_range
        self.sparsity_range = sparsity_range
        if int(n_nodes) < 1:
            raise ConfigurationError(f"n_nodes must be >= 1, got {n_nodes}")
        if int(n_inputs) < 1:
            raise ConfigurationError(f"n_inputs must be >= 1, got {n_inputs}")
        for name in ("w_range", "w_in_range", "w_scaling_range", "input_scaling_range", "sparsity_range"):
            check_range(getattr(self, name), name)

    @property
    def n_observables(self) -> int:
        return int(self.n_nodes)

    @property
    def _n_w_in(self) -> int:
        return int(self.n_nodes) * (int(self.n_inputs) + 1)

    @property
    def n_genes(self) -> int:
        return 3 + self._n_w_in + int(self.n_nodes) ** 2

    @property
    def gene_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(self.n_genes)
        hi = np.empty(self.n_genes)
        segments = [
            (1, self.w_scaling_range),
            (1, self.input_scaling_range),
            (1, self.sparsity_range),
            (self._n_w_in, self.w_in_range),
            (int(self.n_nodes) ** 2, self.w_range),
        ]
        pos = 0
        for count, (a, b) in segments:
            lo[pos : pos + count] = a
            hi[pos : pos + count] = b
            pos += count
        return lo, hi

    def decode(self, genotype: Genotype) -> EsnParams:
        genes = self._check_genotype(genotype)
        n = int(self.n_nodes)
        w_scaling = float(_affine(genes[0], *self.w_scaling_range))
        input_scaling = float(_affine(genes[1], *self.input_scaling_range))
        sparsity = float(_affine(genes[2], *self.sparsity_range))
        k = 3 + self._n_w_in
        w_in = _affine(genes[3:k], *self.w_in_range).reshape(n, int(self.n_inputs) + 1)
        w = _affine(genes[k:], *self.w_range).reshape(n, n)

        w_effective = w * w_scaling
        n_zero = int(round(sparsity * w.size))
        if n_zero:
            # Mask order comes from a multiplicative hash of the genes:
            # deterministic per genotype, nested as sparsity grows, and
            # independent of weight magnitude (survivors stay uniform).
            keys = (genes[k:] * 9973.0) % 1.0
            flat = w_effective.reshape(-1)
            flat[np.argsort(keys, kind="stable")[:n_zero]] = 0.0
        w_in_effective = w_in * input_scaling
        return EsnParams(
            w=w,
            w_in=w_in,
            w_scaling=w_scaling,
            input_scaling=input_scaling,
            sparsity=sparsity,
            w_effective=np.ascontiguousarray(w_effective),
            w_in_effective=np.ascontiguousarray(w_in_effective),
        )

    def run(self, genotype: Genotype, u, washout: int = 0) -> np.ndarray:
        u = check_sequence(u)
        washout = check_washout(washout, u.shape[0])
        params = self.decode(genotype)
        if u.ndim == 1:
            u = u[:, None]
        if u.shape[1] != int(self.n_inputs):
            raise ConfigurationError(f"expected {self.n_inputs} input channel(s), got {u.shape[1]}")
        length = u.shape[0]
        u_aug = np.hstack([u, np.ones((length, 1))])
        drive = u_aug @ params.w_in_effective.T
        w_t = params.w_effective.T
        states = np.empty((length, int(self.n_nodes)))
        x = np.zeros(int(self.n_nodes))
        for t in range(length):
            x = np.tanh(drive[t] + x @ w_t)
            states[t] = x
        if not np.all(np.isfinite(states)):
            raise NumericalError("non-finite network state; tanh dynamics should be bounded")
        return states[washout:]

    def final_states_batch(self, genotype: Genotype, streams: np.ndarray) -> np.ndarray:
        streams = np.atleast_2d(np.asarray(streams, dtype=float))
        if int(self.n_inputs) != 1:
            return super().final_states_batch(genotype, streams)
        params = self.decode(genotype)
        m, length = streams.shape
        w_u = params.w_in_effective[:, 0]
        bias = params.w_in_effective[:, 1]
        w_t = params.w_effective.T
        x = np.zeros((m, int(self.n_nodes)))
        for t in range(length):
            x = np.tanh(streams[:, t, None] * w_u + bias + x @ w_t)
        if not np.all(np.isfinite(x)):
            raise NumericalError("non-finite network state; tanh dynamics should be bounded")
        return x.T


def esn_step(params: EsnParams, x_prev: np.ndarray, u) -> np.ndarray:
    """One network update: tanh(W_in_eff [u; 1] + W_eff x_prev)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    x_prev = np.asarray(x_prev, dtype=float)
    if params.w_in_effective.shape[1] != u.size + 1:
        raise ConfigurationError(
            f"input size {u.size} does not match the input matrix "
            f"({params.w_in_effective.shape[1] - 1} channels + bias)"
        )
    if x_prev.size != params.w_effective.shape[0]:
        raise ConfigurationError("state size does not match the weight matrix")
    pre = params.w_in_effective @ np.append(u, 1.0) + params.w_effective @ x_prev
    x = np.tanh(pre)
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite network state")
    return x


class MackeyGlassReservoir(SubstrateBase):
    """Single nonlinear node plus delay line, observed at virtual nodes.

    The node obeys the delay differential equation

        time_scale * dX/dt = -X(t) + eta * A / (1 + |A|^p),
        A = X(t - tau) + gamma * J(t)

    where J(t) is the time-multiplexed drive: each input sample is held
    for one loop delay tau and multiplied by a binary mask, piecewise
    constant over each node-separation interval theta. Virtual node i of
    sample k is the state at time k*tau + i*theta. The magnitude in the
    denominator keeps the map real-valued for non-integer exponents.

    Integration is fixed-step explicit Euler with ``steps_per_node``
    sub-steps per theta interval and an all-zero initial history.

    The genotype encodes eta, gamma, p (affine onto their ranges, open
    ends clamped by 1e-6) followed by n_virtual mask genes thresholded
    at 0.5 onto ``mask_values``.
    """

    kind = "delay"

    def __init__(
        self,
        n_virtual=400,
        theta=0.2,
        time_scale=1.0,
        washout=50,
        eta_range=(0.0, 1.0),
        gamma_range=(0.0, 1.0),
        p_range=(0.0, 20.0),
        mask_values=(-0.1, 0.1),
        steps_per_node=4,
    ):
        self.n_virtual = n_virtual
        self.theta = theta
        self.time_scale = time_scale
        self.washout = washout
        self.eta_range = eta_range
        self.gamma_range = gamma_range
        self.p_range = p_range
        self.mask_values = mask_values
        self.steps_per_node = steps_per_node
        if int(n_virtual) < 1:
            raise ConfigurationError(f"n_virtual must be >= 1, got {n_virtual}")
        if float(theta) <= 0:
            raise ConfigurationError(f"theta must be positive, got {theta}")
        if float(time_scale) < float(theta):
            raise ConfigurationError(
                f"time_scale ({time_scale}) must be >= theta ({theta}) to couple the virtual nodes"
            )
        if int(steps_per_node) < 1:
            raise ConfigurationError("steps_per_node must be >= 1")
        for name in ("eta_range", "gamma_range", "p_range"):
            check_range(getattr(self, name), name)

    @property
    def tau(self) -> float:
        return int(self.n_virtual) * float(self.theta)

    @property
    def n_observables(self) -> int:
        return int(self.n_virtual)

    @property
    def n_genes(self) -> int:
        return 3 + int(self.n_virtual)

    @property
    def gene_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(self.n_genes)
        hi = np.empty(self.n_genes)
        lo[0], hi[0] = self.eta_range
        lo[1], hi[1] = self.gamma_range
        lo[2], hi[2] = self.p_range
        lo[3:] = min(self.mask_values)
        hi[3:] = max(self.mask_values)
        return lo, hi

    def _clamped(self, gene, bounds):
        lo, hi = bounds
        return float(np.clip(_affine(gene, lo, hi), lo + OPEN_INTERVAL_EPS, hi - OPEN_INTERVAL_EPS))

    def decode(self, genotype: Genotype) -> DrParams:
        genes = self._check_genotype(genotype)
        low_val, high_val = self.mask_values
        mask = np.where(genes[3:] < 0.5, low_val, high_val).astype(float)
        return DrParams(
            eta=self._clamped(genes[0], self.eta_range),
            gamma=self._clamped(genes[1], self.gamma_range),
            p=self._clamped(genes[2], self.p_range),
            mask=mask,
            theta=float(self.theta),
            tau=self.tau,
            time_scale=float(self.time_scale),
            n_virtual=int(self.n_virtual),
        )

    def run(self, genotype: Genotype, u, washout: int = 0) -> np.ndarray:
        u = check_sequence(u)
        if u.ndim != 1:
            raise ConfigurationError("the delay-line substrate takes a single input channel")
        washout = check_washout(washout, u.shape[0])
        params = self.decode(genotype)
        states = dr_integrate(params, u, steps_per_node=int(self.steps_per_node))
        return states[washout:]

    def final_states_batch(self, genotype: Genotype, streams: np.ndarray) -> np.ndarray:
        streams = np.atleast_2d(np.asarray(streams, dtype=float))
        params = self.decode(genotype)
        states = _dr_integrate_streams(params, streams, int(self.steps_per_node), final_only=True)
        return states


def dr_integrate(params: DrParams, u, steps_per_node: int = 4) -> np.ndarray:
    """Integrate the delay line over an input sequence.

    Returns a (len(u), n_virtual) matrix; row k holds the virtual-node
    samples of the k-th hold interval. Raises DegenerateRunError when
    the state diverges.
    """
    u = check_sequence(u)
    if u.ndim != 1:
        raise ConfigurationError("the delay-line model takes a single input channel")
    out = _dr_integrate_streams(params, u[None, :], steps_per_node, final_only=False)
    return out[0]


def _dr_integrate_streams(params: DrParams, streams: np.ndarray, steps_per_node: int, final_only: bool):
    """Shared Euler integrator, vectorised over independent input streams.

    For each hold interval all delayed states are already known (they
    belong to the previous interval), so the nonlinearity is evaluated
    in one vectorised sweep and only the linear recurrence is scanned
    step by step.
    """
    m, length = streams.shape
    n = params.n_virtual
    sub = int(steps_per_node)
    steps = n * sub
    h = params.theta / sub
    decay = 1.0 - h / params.time_scale
    gain = h / params.time_scale
    sample_idx = np.arange(sub, steps, sub)

    # gamma * J over one interval for a unit input, per sub-step.
    mask_steps = np.repeat(params.mask, sub)

    x = np.zeros(m)
    prev = np.zeros((steps, m))
    cur = np.empty((steps, m))
    rows = np.empty((length, n, m)) if not final_only else None
    row = np.empty((n, m))
    for k in range(length):
        a = prev + (params.gamma * mask_steps)[:, None] * streams[:, k]
        forcing = params.eta * a / (1.0 + np.abs(a) ** params.p)
        for j in range(steps):
            cur[j] = x
            x = decay * x + gain * forcing[j]
        row[:-1] = cur[sample_idx]
        row[-1] = x
        if not np.all(np.isfinite(x)) or np.abs(x).max() > DIVERGENCE_CAP:
            raise DegenerateRunError(f"delay-line state diverged at input sample {k}")
        if rows is not None:
            rows[k] = row
        prev, cur = cur, prev
    if final_only:
        return row.copy()
    return np.moveaxis(rows, 2, 0)


def mutate(genotype: Genotype, rate: float, rng) -> Genotype:
    """Replace each gene by a fresh uniform [0, 1) draw with probability ``rate``."""
    check_rate(rate, "mutation rate")
    rng = as_rng(rng)
    flip = rng.random(genotype.genes.size) < rate
    fresh = rng.random(genotype.genes.size)
    return genotype.copy_with(np.where(flip, fresh, genotype.genes))


def infect(winner: Genotype, loser: Genotype, recomb_rate: float, rng) -> Genotype:
    """Horizontal gene transfer: the loser keeps each gene unless overwritten.

    Each child gene is the winner's with probability ``recomb_rate``,
    otherwise the loser's.
    """
    check_rate(recomb_rate, "recombination rate")
    if winner.substrate is not loser.substrate:
        raise ConfigurationError("parents must share a substrate spec")
    if winner.genes.size != loser.genes.size:
        raise ConfigurationError("parents must have equal gene counts")
    rng = as_rng(rng)
    take = rng.random(winner.genes.size) < recomb_rate
    return winner.copy_with(np.where(take, winner.genes, loser.genes))
