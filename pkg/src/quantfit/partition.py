"""Grouping sample indices by fractional phase.

The estimator needs subsets of sample indices over which the signal is
(nearly) constant.  When the frequency is an exact ratio ``L / N`` the
phases ``frac(n * L / N)`` repeat exactly and the grouping is a modular
partition.  Otherwise indices are binned by phase into intervals of width
``epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import BasisSet, eval_sample_vector, phase_fraction

__all__ = [
    "IndexPartition",
    "AveragedBasis",
    "sync_partition",
    "async_partition",
    "average_basis",
]


@dataclass(frozen=True)
class IndexPartition:
    """Disjoint subsets of ``{0 .. n_samples-1}``, grouped by phase.

    Attributes
    ----------
    subsets : tuple of np.ndarray
        Member indices of each subset, each sorted ascending.  Subsets are
        ordered by increasing phase.
    labels : np.ndarray
        Subset id of every sample index (inverse of ``subsets``).
    rep_phase : np.ndarray
        Representative phase per subset: the mean of its members' phases.
    epsilon : float
        Upper bound on the phase spread within one subset (0 when the
        grouping is exact).
    """

    subsets: tuple[np.ndarray, ...]
    labels: np.ndarray
    rep_phase: np.ndarray
    epsilon: float

    def __post_init__(self):
        if not self.subsets:
            raise ValueError("partition must contain at least one subset")
        if self.labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        total = sum(s.size for s in self.subsets)
        if total != self.labels.size:
            raise ValueError("subsets must cover every index exactly once")
        if len(self.rep_phase) != len(self.subsets):
            raise ValueError("rep_phase must have one entry per subset")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    @property
    def n_samples(self) -> int:
        return self.labels.size

    @property
    def n_subsets(self) -> int:
        return len(self.subsets)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.subsets])


@dataclass(frozen=True)
class AveragedBasis:
    """Per-subset mean basis vectors ``S_bar[m]`` and subset sizes."""

    rows: np.ndarray
    sizes: np.ndarray

    @property
    def n_subsets(self) -> int:
        return self.rows.shape[0]


def _group_by(keys: np.ndarray) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    """Group ``arange(len(keys))`` by key value, ascending; return the
    groups and the per-index group label."""
    uniq, labels = np.unique(keys, return_inverse=True)
    order = np.argsort(labels, kind="stable")
    boundaries = np.searchsorted(labels[order], np.arange(1, uniq.size))
    subsets = tuple(np.split(order, boundaries))
    return subsets, labels


def sync_partition(n_samples: int, cycles: int) -> IndexPartition:
    """Exact modular grouping for frequency ``cycles / n_samples``.

    Indices ``n`` and ``n'`` share a subset exactly when
    ``n * cycles == n' * cycles  (mod n_samples)``.  With
    ``d = gcd(cycles, n_samples)`` this yields ``n_samples / d`` subsets of
    ``d`` indices each, at phases ``0, d/n_samples, 2*d/n_samples, ...``
    (ascending).

    Worked examples
    ---------------
    ``sync_partition(10, 2)``: residues ``n * 2 mod 10`` take the even
    values ``[0, 2, 4, 6, 8]``, so the 10 indices split into 5 subsets of
    2 (``gcd = 2``).

    ``sync_partition(24, 3)``: ``gcd = 3`` gives 8 subsets of 3 ::

        [[0, 8, 16], [1, 9, 17], [2, 10, 18], [3, 11, 19],
         [4, 12, 20], [5, 13, 21], [6, 14, 22], [7, 15, 23]]
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 1 <= cycles < n_samples:
        raise ValueError("cycles must satisfy 1 <= cycles < n_samples")
    residues = (np.arange(n_samples, dtype=np.int64) * cycles) % n_samples
    subsets, labels = _group_by(residues)
    d = math.gcd(cycles, n_samples)
    rep_phase = (d * np.arange(len(subsets), dtype=float)) / n_samples
    return IndexPartition(
        subsets=subsets, labels=labels, rep_phase=rep_phase, epsilon=0.0
    )


def async_partition(n_samples: int, lam: float, epsilon: float) -> IndexPartition:
    """Phase binning for arbitrary frequency ``lam``.

    The phase circle [0, 1) is cut into ``ceil(1 / epsilon)`` fixed bins
    anchored at zero (the last bin may be shorter); index ``n`` joins the
    bin containing ``frac(n * lam)``.  Empty bins are dropped; bins are
    never merged across the 1 -> 0 wrap, so phases just below 1 and just
    above 0 stay in different subsets.  Subsets are ordered by bin
    position.

    Worked example
    --------------
    ``async_partition(24, 0.1245, 0.1)``: the phases nearly repeat with
    period 8 (``8 * 0.1245 = 0.996``), so most bins collect an index triple,
    but the drift is resolved at the edges — index 8 (phase 0.996) stays in
    the last bin instead of rejoining index 0 ::

        [[0], [1, 9, 17], [2, 10, 18], [3, 11, 19], [4, 12, 20],
         [5, 13, 21], [6, 14, 22], [7, 15, 23], [8, 16]]
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not np.isfinite(lam):
        raise ValueError("lam must be finite")
    u = phase_fraction(np.arange(n_samples), lam)
    nbins = math.ceil(1.0 / epsilon)
    bins = np.minimum((u / epsilon).astype(np.int64), nbins - 1)
    subsets, labels = _group_by(bins)
    counts = np.array([s.size for s in subsets], dtype=float)
    sums = np.bincount(labels, weights=u, minlength=len(subsets))
    rep_phase = sums / counts
    return IndexPartition(
        subsets=subsets, labels=labels, rep_phase=rep_phase, epsilon=float(epsilon)
    )


def average_basis(part: IndexPartition, basis: BasisSet, lam: float) -> AveragedBasis:
    """Mean basis vector over each subset.

    Averaging the basis rather than re-evaluating it at the representative
    phase keeps the linear model exact: the subset mean of the signal is
    exactly ``mean(S[n])' theta``.
    """
    s = eval_sample_vector(basis, np.arange(part.n_samples), lam)
    m = part.n_subsets
    sizes = part.sizes.astype(float)
    rows = np.empty((m, basis.size))
    for j in range(basis.size):
        rows[:, j] = np.bincount(part.labels, weights=s[:, j], minlength=m)
    rows /= sizes[:, None]
    return AveragedBasis(rows=rows, sizes=part.sizes)
