"""Sequence-level analysis: labels in, interactions out."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from kittisafety.geometry import TtcConfig
from kittisafety.kitti_io import (
    DEFAULT_EGO_DIMS,
    EgoPose,
    ObjectClass,
    ObservationRecord,
    apply_ego_pose,
    make_ego_trajectory,
    read_poses,
    read_tracking_labels,
    to_bev,
)
from kittisafety.safety import DEFAULT_THRESHOLDS, Interaction, analyze_interactions
from kittisafety.trajectory import PostProcessConfig, Trajectory, build_trajectories, postprocess

VARIANTS = {
    "none": (False, False),
    "idsplit": (True, False),
    "ss": (False, True),
    "idsplit+ss": (True, True),
}


@dataclass(frozen=True)
class AnalysisConfig:
    post: PostProcessConfig = field(default_factory=PostProcessConfig)
    ttc: TtcConfig = field(default_factory=TtcConfig)
    idsplit: bool = False
    ss: bool = False
    include_ego: bool = True
    ego_dims: tuple[float, float] = DEFAULT_EGO_DIMS
    ego_offset: tuple[float, float] = (0.0, 0.0)
    thresholds: tuple[float, float] = DEFAULT_THRESHOLDS

    @property
    def variant(self) -> str:
        for name, flags in VARIANTS.items():
            if flags == (self.idsplit, self.ss):
                return name
        raise AssertionError("unreachable")


def variant_flags(name: str) -> tuple[bool, bool]:
    try:
        return VARIANTS[name]
    except KeyError:
        raise ValueError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}") from None


def sequence_trajectories(
    records: Sequence[ObservationRecord],
    cfg: AnalysisConfig = AnalysisConfig(),
    poses: Mapping[int, EgoPose] | None = None,
) -> list[Trajectory]:
    """Post-processed trajectories with velocities, ego included when configured."""
    kept = [r for r in records if r.object_class is not ObjectClass.IGNORED]
    states = [to_bev(r) for r in kept]
    if poses is not None:
        states = [apply_ego_pose(s, poses[s.frame]) for s in states]
    ego = None
    if cfg.include_ego and kept:
        frames = list(range(min(r.frame for r in kept), max(r.frame for r in kept) + 1))
        ego = make_ego_trajectory(frames, poses, cfg.ego_dims, cfg.ego_offset)
    trajectories = build_trajectories(kept, ego=ego, states=states)
    return postprocess(trajectories, cfg.post, idsplit=cfg.idsplit, ss=cfg.ss)


def analyze_records(
    records: Sequence[ObservationRecord],
    cfg: AnalysisConfig = AnalysisConfig(),
    poses: Mapping[int, EgoPose] | None = None,
) -> tuple[list[Trajectory], list[Interaction]]:
    trajectories = sequence_trajectories(records, cfg, poses)
    return trajectories, analyze_interactions(trajectories, cfg.ttc, include_ego=cfg.include_ego)


def analyze_file(
    labels: str | Path,
    cfg: AnalysisConfig = AnalysisConfig(),
    poses: str | Path | None = None,
) -> tuple[list[Trajectory], list[Interaction]]:
    records = read_tracking_labels(labels)
    pose_map = read_poses(poses) if poses is not None else None
    return analyze_records(records, cfg, pose_map)


def discover_sequences(path: str | Path) -> dict[str, Path]:
    """Map sequence id to label file: a single file, or every ``*.txt`` in a directory."""
    path = Path(path)
    if path.is_dir():
        return {p.stem: p for p in sorted(path.glob("*.txt"))}
    if path.is_file():
        return {path.stem: path}
    raise FileNotFoundError(f"no such label file or directory: {path}")
