"""Rounding promises: disjoint closed subintervals of [0, 1].

A rounding promise declares which energies are allowed; energies inside an
interval round unambiguously to that interval's index.  This module builds
the fine-grained promises (two interleaved branches L and R obtained by
deleting narrow windows from [0, 1]) and their coarse-grainings (merge all
gaps except every 2^r-th), and provides interval lookups, truncation, and
the exclusion-count diagnostic.

Conventions.  Intervals are closed, gaps are the open regions between two
adjacent intervals.  Branch L's first deletion window touches 0; the
degenerate single-point component {0} is dropped, so the fine L promise
starts at w = 2^-(n+r+2) instead of 0.  Coarse-grained promises always start
at 0 and end at 1: the leading deleted region of branch L is absorbed into
the first interval when coarse-graining (it is not a gap between intervals,
so it is never kept).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, IntervalVanishes, InvalidPromise, ParameterOverflow

MAX_NR = 14


@dataclass(frozen=True)
class RoundingPromise:
    """Ordered disjoint closed intervals [a_x, b_x] of [0, 1]."""

    intervals: tuple

    def __post_init__(self):
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivals)
        if not ivals:
            raise InvalidPromise("a rounding promise needs at least one interval")
        for a, b in ivals:
            if not (0.0 <= a <= b <= 1.0):
                raise InvalidPromise(f"interval [{a}, {b}] is not inside [0, 1]")
        for (a0, b0), (a1, b1) in zip(ivals, ivals[1:]):
            if not b0 < a1:
                raise InvalidPromise(f"intervals [{a0}, {b0}] and [{a1}, {b1}] are not separated")

    @property
    def s(self) -> int:
        """Number of intervals."""
        return len(self.intervals)

    @property
    def gaps(self) -> tuple:
        """Open gaps (b_x, a_{x+1}) between adjacent intervals."""
        return tuple(
            (b0, a1) for (_, b0), (a1, _) in zip(self.intervals, self.intervals[1:])
        )

    @property
    def midpoints(self) -> np.ndarray:
        return np.array([(a + b) / 2 for a, b in self.intervals])

    @property
    def kappa(self) -> float:
        """Minimum gap width; 0.0 for a single-interval promise."""
        gs = self.gaps
        return min(a1 - b0 for b0, a1 in gs) if gs else 0.0

    @property
    def min_interval_width(self) -> float:
        return min(b - a for a, b in self.intervals)

    def contains(self, lam: float) -> bool:
        return self.locate(lam) is not None

    def locate(self, lam: float) -> int | None:
        """Index of the (closed) interval containing lam, or None if in a gap."""
        if not 0.0 <= lam <= 1.0:
            raise InvalidPromise(f"lambda = {lam} outside [0, 1]")
        for x, (a, b) in enumerate(self.intervals):
            if a <= lam <= b:
                return x
        return None

    def truncate(self, margin: float) -> "RoundingPromise":
        """Shrink every interval by margin on each side."""
        if margin == 0.0:
            return self
        if margin < 0:
            raise IntervalVanishes(f"negative margin {margin}")
        out = []
        for a, b in self.intervals:
            if b - a <= 2 * margin:
                raise IntervalVanishes(
                    f"margin {margin:g} swallows interval [{a:g}, {b:g}] of width {b - a:g}"
                )
            out.append((a + margin, b - margin))
        return RoundingPromise(tuple(out))


FULL_PROMISE = RoundingPromise(((0.0, 1.0),))


def locate(promise: RoundingPromise, lam: float) -> int | None:
    return promise.locate(lam)


def truncate(promise: RoundingPromise, margin: float) -> RoundingPromise:
    return promise.truncate(margin)


def deletion_windows(n: int, r: int, branch: str) -> list:
    """The open windows removed from [0, 1] to form a fine-grained promise.

    With w = 2^-(n+r+2) branch L deletes (4k w, (4k+1) w) and branch R
    deletes ((4k+2) w, (4k+3) w) for k = 0 .. 2^(n+r)-1, giving each branch
    2^(n+r) evenly spaced windows of width w per unit interval.
    """
    if n < 1 or r < 1 or n + r > MAX_NR:
        raise ParameterOverflow(f"need n, r >= 1 and n + r <= {MAX_NR}, got n={n}, r={r}")
    if branch not in ("L", "R"):
        raise InvalidPromise(f"branch must be 'L' or 'R', got {branch!r}")
    w = 2.0 ** -(n + r + 2)
    base = 0 if branch == "L" else 2
    return [((4 * k + base) * w, (4 * k + base + 1) * w) for k in range(2 ** (n + r))]


def fine_grained(n: int, r: int, branch: str) -> RoundingPromise:
    """Fine-grained rounding promise: complement of the deletion windows.

    Interior intervals have width 3w and interior gaps width w.  For branch
    L the degenerate component {0} left of the first window is dropped.
    """
    windows = deletion_windows(n, r, branch)
    intervals = []
    cursor = 0.0
    for lo, hi in windows:
        if lo > cursor:
            intervals.append((cursor, lo))
        cursor = hi
    if cursor < 1.0:
        intervals.append((cursor, 1.0))
    return RoundingPromise(tuple(intervals))


def keep_gaps(fine: RoundingPromise, kept_indices) -> RoundingPromise:
    """Merge every gap of a promise except the listed ones.

    The result always spans from 0 to 1: leading and trailing deleted
    regions (branch L's window at 0) are absorbed, matching the convention
    that coarse promises start at 0 and end at 1.
    """
    gaps = fine.gaps
    kept = sorted(set(int(i) for i in kept_indices))
    for i in kept:
        if not 0 <= i < len(gaps):
            raise IndexOutOfRange(f"gap index {i} outside 0..{len(gaps) - 1}")
    edges = [0.0]
    for i in kept:
        edges.extend(gaps[i])
    edges.append(1.0)
    intervals = tuple((edges[2 * k], edges[2 * k + 1]) for k in range(len(kept) + 1))
    return RoundingPromise(intervals)


def coarse_grained(fine: RoundingPromise, n: int, r: int, branch: str, j: int) -> RoundingPromise:
    """Keep the gaps of the fine promise with index congruent to j mod 2^r."""
    if not 0 <= j < 2**r:
        raise IndexOutOfRange(f"coarse index j={j} outside 0..{2**r - 1}")
    kept = [x for x in range(len(fine.gaps)) if x % (2**r) == j]
    coarse = keep_gaps(fine, kept)
    if coarse.s >= 2 and max(b - a for a, b in coarse.intervals) > 2.0**-n + 1e-15:
        raise InvalidPromise("coarse-grained interval exceeds the 2^-n width bound")
    return coarse


@dataclass(frozen=True)
class PromiseFamily:
    """A fine-grained promise plus its 2^r coarse-grainings for one branch."""

    n: int
    r: int
    branch: str
    fine: RoundingPromise
    coarse: tuple

    @staticmethod
    def build(n: int, r: int, branch: str) -> "PromiseFamily":
        fine = fine_grained(n, r, branch)
        coarse = tuple(coarse_grained(fine, n, r, branch, j) for j in range(2**r))
        fam = PromiseFamily(n=n, r=r, branch=branch, fine=fine, coarse=coarse)
        fam.validate()
        return fam

    def validate(self) -> None:
        for j, cp in enumerate(self.coarse):
            if cp.intervals[0][0] != 0.0 or cp.intervals[-1][1] != 1.0:
                raise InvalidPromise(f"coarse promise {j} does not span [0, 1]")
            for a, b in self.fine.intervals:
                hit = cp.locate((a + b) / 2)
                if hit is None or not (
                    cp.intervals[hit][0] <= a and b <= cp.intervals[hit][1]
                ):
                    raise InvalidPromise(
                        f"fine interval [{a}, {b}] not contained in coarse promise {j}"
                    )

    def exclusion_count(self, lam: float) -> int:
        """How many coarse members exclude lam; always 0 or 1 by construction."""
        return sum(0 if cp.contains(lam) else 1 for cp in self.coarse)


def exclusion_count(lam: float, family: PromiseFamily) -> int:
    return family.exclusion_count(lam)


def promise_complement(promise: RoundingPromise) -> list:
    """Closed components of [0, 1] outside the promise (gaps plus boundary pieces)."""
    out = []
    first_a = promise.intervals[0][0]
    if first_a > 0.0:
        out.append((0.0, first_a))
    out.extend(promise.gaps)
    last_b = promise.intervals[-1][1]
    if last_b < 1.0:
        out.append((last_b, 1.0))
    return [(a, b) for a, b in out]
