"""Road-safety analysis of KITTI-format tracking output.

Pipeline: parse labels, project to bird's-eye view, post-process trajectories,
enumerate pairwise interactions, compute time-to-collision, then compare the
resulting distributions and evaluate tracking quality with CLEAR MOT metrics.
"""

from kittisafety.geometry import BevBox, TtcConfig, corners, extrapolate, overlap, ttc
from kittisafety.kitti_io import (
    BevState,
    EgoPose,
    ObservationRecord,
    ParseError,
    apply_ego_pose,
    make_ego_trajectory,
    parse_tracking_labels,
    serialize_tracking_labels,
    to_bev,
)
from kittisafety.safety import (
    Interaction,
    SeverityCounts,
    categorize,
    compute_ttc_series,
    count_severities,
    enumerate_interactions,
    reduction_percentages,
)
from kittisafety.stats import ks_d_statistic, median, within_band
from kittisafety.trajectory import (
    PostProcessConfig,
    Trajectory,
    build_trajectories,
    estimate_velocities,
    interpolate_gaps,
    split_on_gaps,
    stationary_smooth,
)

__version__ = "0.1.0"

__all__ = [
    "BevBox",
    "BevState",
    "EgoPose",
    "Interaction",
    "ObservationRecord",
    "ParseError",
    "PostProcessConfig",
    "SeverityCounts",
    "Trajectory",
    "TtcConfig",
    "apply_ego_pose",
    "build_trajectories",
    "categorize",
    "compute_ttc_series",
    "corners",
    "count_severities",
    "enumerate_interactions",
    "estimate_velocities",
    "extrapolate",
    "interpolate_gaps",
    "ks_d_statistic",
    "make_ego_trajectory",
    "median",
    "overlap",
    "parse_tracking_labels",
    "reduction_percentages",
    "serialize_tracking_labels",
    "split_on_gaps",
    "stationary_smooth",
    "to_bev",
    "ttc",
    "within_band",
]
