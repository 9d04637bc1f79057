"""Trajectory construction and post-processing.

The processing order is fixed: build, split on long gaps (optional), fill
gaps by linear interpolation, collapse near-stationary users (optional),
then estimate velocities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

from kittisafety.kitti_io import (
    BevState,
    ObjectClass,
    ObservationRecord,
    normalize_angle,
    to_bev,
)

# Fresh ids for split segments when the caller does not supply a counter.
SPLIT_ID_BASE = 1_000_000
SPLIT_ID_STRIDE = 1_000


@dataclass(frozen=True)
class PostProcessConfig:
    thr_split: int = 10
    thr_cons: int = 3
    thr_sta: float = 2.0
    fps: float = 10.0
    velocity_window: int = 1

    def __post_init__(self):
        for name in ("thr_split", "thr_cons", "thr_sta", "fps", "velocity_window"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class Trajectory:
    track_id: int
    object_class: ObjectClass
    states: tuple[BevState, ...]
    stationary: bool = False
    is_ego: bool = False
    source_id: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        frames = self.frames
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"track {self.track_id}: frames not strictly increasing")

    @property
    def frames(self) -> list[int]:
        return [s.frame for s in self.states]

    @property
    def first_frame(self) -> int:
        return self.states[0].frame

    @property
    def last_frame(self) -> int:
        return self.states[-1].frame

    def __len__(self) -> int:
        return len(self.states)

    def state_at(self, frame: int) -> BevState:
        idx = frame - self.first_frame
        if 0 <= idx < len(self.states) and self.states[idx].frame == frame:
            return self.states[idx]
        for s in self.states:
            if s.frame == frame:
                return s
        raise KeyError(f"track {self.track_id} has no state at frame {frame}")


def build_trajectories(
    records: Iterable[ObservationRecord],
    ego: Trajectory | None = None,
    states: Sequence[BevState] | None = None,
) -> list[Trajectory]:
    """Group records by track id into frame-sorted trajectories.

    ``states`` may carry precomputed (e.g. pose-transformed) BEV states aligned
    with ``records``; otherwise each record is projected with ``to_bev``.
    Output is sorted by track id, with ``ego`` appended last.
    """
    records = list(records)
    if states is None:
        states = [to_bev(r) for r in records]
    by_id: dict[int, dict[int, BevState]] = {}
    classes: dict[int, ObjectClass] = {}
    for record, state in zip(records, states, strict=True):
        frames = by_id.setdefault(record.track_id, {})
        if record.frame in frames:
            raise ValueError(f"duplicate record for track {record.track_id} at frame {record.frame}")
        frames[record.frame] = state
        # KITTI ids are unique per sequence; the first class seen wins.
        classes.setdefault(record.track_id, record.object_class)
    trajectories = [
        Trajectory(
            track_id=tid,
            object_class=classes[tid],
            states=tuple(frames[f] for f in sorted(frames)),
            source_id=tid,
        )
        for tid, frames in sorted(by_id.items())
    ]
    if ego is not None:
        trajectories.append(ego)
    return trajectories


def split_on_gaps(
    traj: Trajectory,
    cfg: PostProcessConfig = PostProcessConfig(),
    new_ids: Iterator[int] | None = None,
) -> list[Trajectory]:
    """Cut at every run of more than ``cfg.thr_split`` missing frames.

    Segments with fewer than ``cfg.thr_cons`` observed frames are dropped.
    When a cut happens, surviving segments get ids drawn from ``new_ids``.
    """
    pieces: list[list[BevState]] = [[traj.states[0]]] if traj.states else []
    for prev, cur in zip(traj.states, traj.states[1:]):
        if cur.frame - prev.frame - 1 > cfg.thr_split:
            pieces.append([])
        pieces[-1].append(cur)
    if len(pieces) <= 1:
        if pieces and len(pieces[0]) < cfg.thr_cons:
            return []
        return [traj] if pieces else []
    if new_ids is None:
        new_ids = itertools.count(SPLIT_ID_BASE + traj.track_id * SPLIT_ID_STRIDE)
    source = traj.source_id if traj.source_id is not None else traj.track_id
    return [
        replace(traj, track_id=next(new_ids), states=tuple(piece), source_id=source)
        for piece in pieces
        if len(piece) >= cfg.thr_cons
    ]


def _lerp(a: float, b: float, u: float) -> float:
    return a + (b - a) * u


def _interpolate_state(a: BevState, b: BevState, frame: int) -> BevState:
    u = (frame - a.frame) / (b.frame - a.frame)
    dyaw = normalize_angle(b.yaw - a.yaw)
    return BevState(
        frame=frame,
        position=(_lerp(a.position[0], b.position[0], u), _lerp(a.position[1], b.position[1], u)),
        yaw=a.yaw + dyaw * u,
        length=_lerp(a.length, b.length, u),
        width=_lerp(a.width, b.width, u),
    )


def interpolate_gaps(traj: Trajectory) -> Trajectory:
    """Fill missing frames linearly; yaw follows the shorter arc."""
    if len(traj.states) == traj.last_frame - traj.first_frame + 1:
        return traj
    filled = [traj.states[0]]
    for a, b in zip(traj.states, traj.states[1:]):
        filled.extend(_interpolate_state(a, b, f) for f in range(a.frame + 1, b.frame))
        filled.append(b)
    return replace(traj, states=tuple(filled))


def is_stationary(traj: Trajectory, thr_sta: float) -> bool:
    first, last = traj.states[0].position, traj.states[-1].position
    return abs(last[0] - first[0]) < thr_sta and abs(last[1] - first[1]) < thr_sta


def stationary_smooth(traj: Trajectory, cfg: PostProcessConfig = PostProcessConfig()) -> Trajectory:
    """Collapse a near-stationary trajectory onto its mean position.

    Applies when both ground-plane coordinates move less than ``cfg.thr_sta``
    between the first and last state.
    """
    if not is_stationary(traj, cfg.thr_sta):
        return replace(traj, stationary=False)
    n = len(traj.states)
    mean = (
        math.fsum(s.position[0] for s in traj.states) / n,
        math.fsum(s.position[1] for s in traj.states) / n,
    )
    states = tuple(replace(s, position=mean, velocity=(0.0, 0.0)) for s in traj.states)
    return replace(traj, states=states, stationary=True)


def estimate_velocities(traj: Trajectory, cfg: PostProcessConfig = PostProcessConfig()) -> Trajectory:
    """Finite-difference velocities in m/s.

    Interior states use a central difference over ``velocity_window`` frames
    on each side; near the ends the window is clipped to the available
    states, which gives one-sided differences at the endpoints.
    """
    states = traj.states
    n = len(states)
    if traj.stationary or n == 1:
        return replace(traj, states=tuple(replace(s, velocity=(0.0, 0.0)) for s in states))
    w = cfg.velocity_window
    out = []
    for i, s in enumerate(states):
        lo, hi = max(i - w, 0), min(i + w, n - 1)
        a, b = states[lo], states[hi]
        dt = (b.frame - a.frame) / cfg.fps
        out.append(
            replace(
                s,
                velocity=((b.position[0] - a.position[0]) / dt, (b.position[1] - a.position[1]) / dt),
            )
        )
    return replace(traj, states=tuple(out))


def postprocess(
    trajectories: Sequence[Trajectory],
    cfg: PostProcessConfig = PostProcessConfig(),
    idsplit: bool = False,
    ss: bool = False,
) -> list[Trajectory]:
    """Run the full post-processing chain and estimate velocities.

    The ego trajectory is never split or smoothed: its motion comes from the
    pose file (or is fixed in the camera frame), not from detections.
    """
    next_id = max((t.track_id for t in trajectories), default=-1) + 1
    new_ids = itertools.count(max(next_id, 0))
    out = []
    for traj in trajectories:
        if traj.is_ego:
            out.append(estimate_velocities(traj, cfg))
            continue
        segments = split_on_gaps(traj, cfg, new_ids) if idsplit else [traj]
        for seg in segments:
            seg = interpolate_gaps(seg)
            if ss:
                seg = stationary_smooth(seg, cfg)
            out.append(estimate_velocities(seg, cfg))
    return out
