"""Lazy maintenance of a multiplicative approximation of the iterate.

A :class:`LazyTracker` watches the stream ``ln x_0, ln x_1, ...`` of iterate
logarithms and maintains ``ln xbar_t`` such that

    ``max_i |ln xbar_{t,i} - ln x_{t,i}| <= delta``        (hard contract)

while refreshing only a few coordinates per step.  Refresh decisions follow
a binary level schedule: level ``l`` fires at steps divisible by ``2**l``
and compares the stream against the snapshot taken at that level's previous
firing, refreshing coordinates whose drift exceeds a per-level threshold.
An unconditional sweep then force-refreshes any coordinate violating the
hard contract, so correctness never depends on the level thresholds; only
the refresh sparsity does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["LazyTracker", "RefreshSet", "tracker_init", "tracker_advance"]


@dataclass
class RefreshSet:
    """Coordinates refreshed by one advance, plus the step's level.

    ``level`` is the largest ``l`` with ``t = 0 mod 2**l``, capped at
    ``ceil(log2 n)``; ``indices`` is sorted and duplicate-free.
    """

    indices: np.ndarray
    level: int

    def __len__(self) -> int:
        return int(self.indices.size)


class LazyTracker:
    """State for the streaming log-space approximation ``xbar`` of ``x``.

    Holds one snapshot of ``ln x`` per level (overwritten whenever the
    level fires), bounding memory at ``O(n log n)``.
    """

    __slots__ = ("delta", "n", "t", "ln_xbar", "xbar", "_checkpoints",
                 "_levels", "_thresholds")

    def __init__(self, x0: np.ndarray, delta: float):
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.size == 0 or np.any(x0 <= 0.0) or not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be strictly positive and finite")
        if not (0.0 <= delta < 0.5):
            raise ValueError(f"delta must lie in [0, 1/2), got {delta}")
        self.delta = float(delta)
        self.n = x0.size
        self.t = 0
        ln0 = np.log(x0)
        self.ln_xbar = ln0.copy()
        self.xbar = x0.copy()
        self._levels = max(1, math.ceil(math.log2(self.n))) if self.n > 1 else 0
        # per-level drift budget; the harmonic-like split keeps the summed
        # thresholds along any dyadic cover of an interval below delta
        lmax = max(self._levels, 1)
        self._thresholds = np.array(
            [delta / (2.0 * (l + 1) * lmax) for l in range(self._levels + 1)]
        )
        self._checkpoints = [ln0.copy() for _ in range(self._levels + 1)]


def tracker_init(x0, delta: float) -> LazyTracker:
    """Start tracking at ``x0``: ``ln xbar_0 = ln x_0`` and ``t = 0``.

    ``delta`` is the l-infinity tolerance on the log scale.  ``delta = 0``
    is accepted and degenerates to mirroring the stream exactly (every
    changed coordinate refreshes on every step).
    """
    return LazyTracker(x0, delta)


def tracker_advance(tracker: LazyTracker, x_new) -> RefreshSet:
    """Ingest the next iterate and return the refreshed coordinate set.

    For each level ``l`` with ``t = 0 mod 2**l``, coordinates whose
    log-drift since the level's checkpoint exceeds the level threshold are
    refreshed to ``ln x_new``; a final sweep force-refreshes anything whose
    approximation error would otherwise exceed ``delta``.
    """
    x_new = np.asarray(x_new, dtype=float).ravel()
    if x_new.size != tracker.n:
        raise ValueError("x_new has the wrong length")
    if np.any(x_new <= 0.0) or not np.all(np.isfinite(x_new)):
        raise ValueError("x_new must be strictly positive and finite")
    tracker.t += 1
    t = tracker.t
    ln_new = np.log(x_new)

    mask = np.zeros(tracker.n, dtype=bool)
    level_fired = 0
    for l in range(tracker._levels + 1):
        if t % (1 << l) != 0:
            break
        level_fired = l
        np.logical_or(mask,
                      np.abs(ln_new - tracker._checkpoints[l])
                      > tracker._thresholds[l],
                      out=mask)
        tracker._checkpoints[l] = ln_new.copy()

    if mask.any():
        tracker.ln_xbar[mask] = ln_new[mask]
        tracker.xbar[mask] = x_new[mask]

    guard = np.abs(tracker.ln_xbar - ln_new) > tracker.delta
    if guard.any():
        tracker.ln_xbar[guard] = ln_new[guard]
        tracker.xbar[guard] = x_new[guard]
        mask |= guard

    return RefreshSet(indices=np.flatnonzero(mask), level=level_fired)
