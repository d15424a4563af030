"""Instance-popularity (InsPo) time series.

For a relation instance, the windowed count at day t is the number of
mention dates falling in the symmetric window of L days centred on t
(clipped to the grid).  The normalizer is the sum of those windowed
counts divided by L, so the series always sums to L.  The same arithmetic
gives the oracle series (all true mentions) and the pipeline's
approximation (rule-matched mentions only); the pattern-selection
probabilities cancel in the ratio and are never estimated.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .knowledge import RelationInstance


class PopularityError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.end < self.start:
            raise PopularityError(f"grid end {self.end} precedes start {self.start}")

    @property
    def n(self) -> int:
        return (self.end - self.start).days + 1

    def index(self, d: dt.date) -> int:
        return (d - self.start).days

    def __contains__(self, d: dt.date) -> bool:
        return self.start <= d <= self.end

    def days(self) -> list[dt.date]:
        return [self.start + dt.timedelta(days=i) for i in range(self.n)]

    def shift(self, k: int) -> "TimeGrid":
        delta = dt.timedelta(days=k)
        return TimeGrid(self.start + delta, self.end + delta)

    @classmethod
    def covering(cls, dates: Iterable[dt.date]) -> "TimeGrid":
        dates = list(dates)
        if not dates:
            raise PopularityError("cannot build a grid from no dates")
        return cls(min(dates), max(dates))


@dataclass(frozen=True)
class WindowSpec:
    length: int = 3

    def __post_init__(self):
        if self.length < 1 or self.length % 2 == 0:
            raise PopularityError(f"window length must be odd and positive, got {self.length}")

    @property
    def half(self) -> int:
        return (self.length - 1) // 2


@dataclass
class PopularitySeries:
    instance: RelationInstance | None
    grid: TimeGrid
    window: WindowSpec
    counts: np.ndarray
    omega_prime: float
    inspo: np.ndarray

    def at(self, d: dt.date) -> float:
        return inspo_at(self, d)

    def peak_day(self) -> dt.date:
        return self.grid.start + dt.timedelta(days=int(np.argmax(self.inspo)))


# Same shape; counts come from oracle-labelled true mentions.
OracleSeries = PopularitySeries


def window_counts(mention_dates: Iterable[dt.date], grid: TimeGrid, w: WindowSpec) -> np.ndarray:
    if w.length > grid.n:
        raise PopularityError(f"window length {w.length} exceeds grid size {grid.n}")
    daily = np.zeros(grid.n, dtype=np.int64)
    for d in mention_dates:
        if d not in grid:
            raise PopularityError(f"mention date {d} outside grid [{grid.start}, {grid.end}]")
        daily[grid.index(d)] += 1
    # Windowed sum via prefix sums; clipping at both ends falls out of the index bounds.
    csum = np.concatenate(([0], np.cumsum(daily)))
    idx = np.arange(grid.n)
    lo = np.maximum(idx - w.half, 0)
    hi = np.minimum(idx + w.half + 1, grid.n)
    return csum[hi] - csum[lo]


def inspo_series(counts, w: WindowSpec) -> tuple[float, np.ndarray]:
    """Return ``(omega_prime, inspo)`` for windowed counts."""
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts < 0):
        raise PopularityError("negative windowed count")
    total = counts.sum()
    if total <= 0:
        raise PopularityError("all-zero counts: popularity series is undefined")
    omega_prime = total / w.length
    return float(omega_prime), counts / omega_prime


def build_series(instance: RelationInstance | None, mention_dates: Iterable[dt.date],
                 grid: TimeGrid, w: WindowSpec) -> PopularitySeries:
    counts = window_counts(mention_dates, grid, w)
    omega, values = inspo_series(counts, w)
    return PopularitySeries(instance, grid, w, counts, omega, values)


def inspo_at(series: PopularitySeries, d: dt.date) -> float:
    if d not in series.grid:
        return 0.0
    return float(series.inspo[series.grid.index(d)])


def oracle_inspo(true_mention_dates: Iterable[dt.date], grid: TimeGrid, w: WindowSpec,
                 instance: RelationInstance | None = None) -> OracleSeries:
    return build_series(instance, true_mention_dates, grid, w)


def compute_all(evidence: dict, grid: TimeGrid, w: WindowSpec,
                instances: Iterable[RelationInstance] | None = None) -> dict:
    """Series for every instance with at least one rule-matched mention."""
    keys = sorted(evidence) if instances is None else sorted(instances)
    out = {}
    for inst in keys:
        ev = evidence.get(inst)
        if ev is None or not ev.matched_mentions:
            continue
        out[inst] = build_series(inst, ev.dates, grid, w)
    return out
