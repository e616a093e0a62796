"""Test-only substrates and independent oracle implementations.

The oracles deliberately take different computational routes from the
library code they check (exact fractions instead of SVD, exhaustive
sorts instead of partial ones, explicit normal equations instead of
stacked least squares).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from rcspace.substrates import SubstrateBase


class PerfectDelayLine(SubstrateBase):
    """Ideal substrate whose i-th observable is the input delayed by i steps."""

    kind = "delay-line-test"

    def __init__(self, depth=20, washout=0):
        self.depth = depth
        self.washout = washout

    @property
    def n_observables(self):
        return int(self.depth)

    @property
    def n_genes(self):
        return 0

    @property
    def gene_bounds(self):
        return np.empty(0), np.empty(0)

    def decode(self, genotype):
        return None

    def run(self, genotype, u, washout=0):
        u = np.asarray(u, dtype=float)
        length = u.shape[0]
        states = np.zeros((length, self.depth))
        for i in range(1, self.depth + 1):
            states[i:, i - 1] = u[:-i] if i < length else 0.0
        return states[washout:]


class MemorylessSubstrate(SubstrateBase):
    """States are instantaneous nonlinear features of the current input."""

    kind = "memoryless-test"

    def __init__(self, washout=0):
        self.washout = washout

    @property
    def n_observables(self):
        return 5

    @property
    def n_genes(self):
        return 0

    def decode(self, genotype):
        return None

    def run(self, genotype, u, washout=0):
        u = np.asarray(u, dtype=float)
        states = np.stack([u, u**2, u**3, np.abs(u), np.tanh(u)], axis=1)
        return states[washout:]


def exact_rank(matrix) -> int:
    """Rank of a rational matrix by Gaussian elimination over Fractions."""
    rows = [[Fraction(x).limit_denominator(10**9) for x in row] for row in np.asarray(matrix).tolist()]
    n_rows = len(rows)
    n_cols = len(rows[0]) if n_rows else 0
    rank = 0
    pivot_col = 0
    while rank < n_rows and pivot_col < n_cols:
        pivot_row = next((r for r in range(rank, n_rows) if rows[r][pivot_col] != 0), None)
        if pivot_row is None:
            pivot_col += 1
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        pivot = rows[rank][pivot_col]
        for r in range(rank + 1, n_rows):
            if rows[r][pivot_col] != 0:
                factor = rows[r][pivot_col] / pivot
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        pivot_col += 1
    return rank


def random_rank_deficient(rng, n, m, rank):
    """Integer matrix of exact rank ``rank`` (product of full-rank factors)."""
    while True:
        left = rng.integers(-3, 4, size=(n, rank))
        right = rng.integers(-3, 4, size=(rank, m))
        a = left @ right
        if exact_rank(a) == rank:
            return a.astype(float)


def brute_force_sparseness(x, others, k) -> float:
    """k-NN mean distance by exhaustively sorting all distances."""
    x = np.asarray(x, dtype=float)
    dists = sorted(math.dist(x, o) for o in np.asarray(others, dtype=float))
    k = min(k, len(dists))
    return sum(dists[:k]) / k


def voxel_hash_count(points, edges, bounds) -> int:
    """Occupied-voxel count via a plain set of integer triples."""
    mins, maxs = bounds
    edges = np.broadcast_to(np.asarray(edges, dtype=float), (3,))
    cells = set()
    for p in np.asarray(points, dtype=float):
        triple = []
        for axis in range(3):
            span = maxs[axis] - mins[axis]
            n_cells = max(1, math.ceil(span / edges[axis] - 1e-12))
            idx = math.floor((p[axis] - mins[axis]) / edges[axis])
            triple.append(min(idx, n_cells - 1))
        cells.add(tuple(triple))
    return len(cells)


def normal_equations_readout(states, target, ridge):
    """Readout weights from the explicit bias-augmented normal equations."""
    z = np.hstack([np.asarray(states, dtype=float), np.ones((len(states), 1))])
    gram = z.T @ z + ridge * np.eye(z.shape[1])
    return np.linalg.solve(gram, z.T @ np.asarray(target, dtype=float))


def narma_reference(u, order):
    """Straight-line re-implementation of the NARMA recurrence."""
    coeffs = {10: (0.3, 0.05, 0.1, 1.0), 30: (0.2, 0.004, 0.001, 1.0)}
    alpha, beta, delta, gamma = coeffs[order]
    u = np.asarray(u, dtype=float)
    y = [0.0]
    for t in range(len(u) - 1):
        acc = 0.0
        for i in range(order):
            if t - i >= 0:
                acc += y[t - i]
        lagged = u[t - 9] if t >= 9 else 0.0
        y.append(gamma * (alpha * y[t] + beta * y[t] * acc + 1.5 * lagged * u[t] + delta))
    return np.asarray(y)


def spearman_oracle(x, y) -> float:
    """Rank with scipy, then plain Pearson on the ranks."""
    from scipy.stats import rankdata

    rx = rankdata(x)
    ry = rankdata(y)
    return float(np.corrcoef(rx, ry)[0, 1])
