"""Hard filtering and curriculum schedules over popularity-weighted mentions."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .align import WeightedMention

DEFAULT_THRESHOLDS = (0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class HardFilterSpec:
    threshold: float

    def __post_init__(self):
        if self.threshold < 0:
            raise ScheduleError("filter threshold must be >= 0")


@dataclass
class CurriculumSchedule:
    thresholds: tuple[float, ...]
    rounds: list[list[WeightedMention]]
    seeds: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.rounds)


def hard_filter(ds: Sequence[WeightedMention], theta: float) -> list[WeightedMention]:
    """Keep mentions with weight >= theta (ties kept), preserving order."""
    HardFilterSpec(theta)
    return [m for m in ds if m.weight >= theta]


def round_seed(seed: int, i: int) -> int:
    return random.Random(f"round|{seed}|{i}").getrandbits(32)


def build_curriculum(ds: Sequence[WeightedMention], thresholds: Sequence[float],
                     seed: int) -> CurriculumSchedule:
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds:
        raise ScheduleError("empty threshold list")
    if any(t < 0 for t in thresholds):
        raise ScheduleError("thresholds must be >= 0")
    if any(b >= a for a, b in zip(thresholds, thresholds[1:])):
        raise ScheduleError(f"thresholds must be strictly decreasing: {list(thresholds)}")
    seeds = tuple(round_seed(seed, i) for i in range(len(thresholds)))
    rounds = []
    for theta, s in zip(thresholds, seeds):
        subset = hard_filter(ds, theta)
        random.Random(s).shuffle(subset)
        rounds.append(subset)
    return CurriculumSchedule(thresholds, rounds, seeds)
