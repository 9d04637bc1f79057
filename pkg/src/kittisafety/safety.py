"""Pairwise interactions, TTC series and severity counts."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from kittisafety.geometry import TtcConfig, ttc_grid
from kittisafety.trajectory import Trajectory

DEFAULT_THRESHOLDS = (10.0, 1.5)


class Category(str, enum.Enum):
    MOVING = "Interaction1"  # both road users moving
    STATIONARY = "Interaction2"  # at least one stationary road user


@dataclass(frozen=True)
class Interaction:
    pair: tuple[int, int]
    frames: tuple[int, int]  # inclusive shared range
    ttc_series: Mapping[int, float | None] = field(default_factory=dict)
    ttc_min: float | None = None
    category: Category | None = None

    def __post_init__(self):
        if self.pair[0] == self.pair[1]:
            raise ValueError(f"interaction of track {self.pair[0]} with itself")
        if self.frames[0] > self.frames[1]:
            raise ValueError(f"empty frame range {self.frames}")


@dataclass(frozen=True)
class SeverityCounts:
    below_10s: int = 0
    below_1_5s: int = 0
    total_interactions: int = 0

    def __add__(self, other: "SeverityCounts") -> "SeverityCounts":
        return SeverityCounts(
            self.below_10s + other.below_10s,
            self.below_1_5s + other.below_1_5s,
            self.total_interactions + other.total_interactions,
        )


def _span(traj: Trajectory) -> tuple[int, int]:
    return traj.first_frame, traj.last_frame


def enumerate_interactions(trajectories: Iterable[Trajectory], include_ego: bool = True) -> list[Interaction]:
    """One interaction per unordered pair of temporally overlapping trajectories.

    Pairs are stored with the smaller id first; the result is sorted by pair.
    """
    trajs = sorted(
        (t for t in trajectories if include_ego or not t.is_ego),
        key=lambda t: t.track_id,
    )
    out = []
    for a, b in itertools.combinations(trajs, 2):
        start = max(a.first_frame, b.first_frame)
        end = min(a.last_frame, b.last_frame)
        if start <= end:
            out.append(Interaction(pair=(a.track_id, b.track_id), frames=(start, end)))
    return out


def _index(trajectories: Iterable[Trajectory]) -> dict[int, Trajectory]:
    index = {}
    for t in trajectories:
        if t.track_id in index:
            raise ValueError(f"duplicate track id {t.track_id}")
        index[t.track_id] = t
    return index


def compute_ttc_series(
    interaction: Interaction,
    trajectories: Mapping[int, Trajectory] | Iterable[Trajectory],
    cfg: TtcConfig = TtcConfig(),
) -> Interaction:
    index = trajectories if isinstance(trajectories, Mapping) else _index(trajectories)
    a, b = index[interaction.pair[0]], index[interaction.pair[1]]
    frames = range(interaction.frames[0], interaction.frames[1] + 1)
    values = ttc_grid([a.state_at(f) for f in frames], [b.state_at(f) for f in frames], cfg)
    series = dict(zip(frames, values))
    defined = [v for v in values if v is not None]
    return replace(interaction, ttc_series=series, ttc_min=min(defined) if defined else None)


def categorize(
    interaction: Interaction,
    trajectories: Mapping[int, Trajectory] | Iterable[Trajectory],
) -> Category:
    index = trajectories if isinstance(trajectories, Mapping) else _index(trajectories)
    if any(index[tid].stationary for tid in interaction.pair):
        return Category.STATIONARY
    return Category.MOVING


def analyze_interactions(
    trajectories: Sequence[Trajectory],
    cfg: TtcConfig = TtcConfig(),
    include_ego: bool = True,
) -> list[Interaction]:
    """Enumerate interactions and fill in TTC series, TTC_min and category."""
    index = _index(trajectories)
    out = []
    for inter in enumerate_interactions(trajectories, include_ego):
        inter = compute_ttc_series(inter, index, cfg)
        out.append(replace(inter, category=categorize(inter, index)))
    return out


def count_severities(
    interactions: Iterable[Interaction],
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS,
) -> SeverityCounts:
    """Count interactions whose TTC_min is strictly below each threshold."""
    high, low = thresholds
    mins = [i.ttc_min for i in interactions]
    return SeverityCounts(
        below_10s=sum(1 for m in mins if m is not None and m < high),
        below_1_5s=sum(1 for m in mins if m is not None and m < low),
        total_interactions=len(mins),
    )


def _reduction(before: int, after: int) -> float | None:
    if before == 0:
        return None
    return 100.0 * (before - after) / before


def reduction_percentages(before: SeverityCounts, after: SeverityCounts) -> tuple[float | None, float | None]:
    """Signed percentage reductions for both thresholds; None where before is zero."""
    return _reduction(before.below_10s, after.below_10s), _reduction(before.below_1_5s, after.below_1_5s)
