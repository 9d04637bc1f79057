"""KITTI tracking label parsing and bird's-eye-view projection.

A label line has 17 whitespace-separated fields (ground truth) or 18 (tracker
output with a trailing confidence)::

    frame track_id type truncated occluded alpha \
        left top right bottom  h w l  x y z  rotation_y [score]

Camera coordinates: x right, y down, z forward. ``(x, y, z)`` is the bottom
center of the 3D box. The ground plane is spanned by ``(x, z)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from kittisafety.trajectory import Trajectory

EGO_TRACK_ID = -1
# Facing +z in the KITTI yaw convention (heading vector = (cos yaw, -sin yaw)).
EGO_YAW = -math.pi / 2
DEFAULT_EGO_DIMS = (4.5, 1.8)

_N_FIELDS_GT = 17
_N_FIELDS_PRED = 18


class ObjectClass(str, enum.Enum):
    CAR = "Car"
    PEDESTRIAN = "Pedestrian"
    CYCLIST = "Cyclist"
    IGNORED = "Ignored"

    @classmethod
    def from_label(cls, label: str) -> "ObjectClass":
        for member in (cls.CAR, cls.PEDESTRIAN, cls.CYCLIST):
            if label == member.value:
                return member
        return cls.IGNORED


ANALYZED_CLASSES = (ObjectClass.CAR, ObjectClass.PEDESTRIAN, ObjectClass.CYCLIST)


class ParseError(ValueError):
    """Malformed label or pose line; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = f"{source}:{lineno}" if source else f"line {lineno}"
        super().__init__(f"{where}: {message}")


class InvalidRecordError(ValueError):
    pass


@dataclass(frozen=True)
class ObservationRecord:
    frame: int
    track_id: int
    object_class: ObjectClass
    truncated: float
    occluded: int
    alpha: float
    bbox2d: tuple[float, float, float, float]
    dims: tuple[float, float, float]  # (height, width, length)
    location: tuple[float, float, float]
    rotation_y: float
    score: float | None = None
    label: str = ""  # raw type string, kept so Ignored records serialize back

    @property
    def height(self) -> float:
        return self.dims[0]

    @property
    def width(self) -> float:
        return self.dims[1]

    @property
    def length(self) -> float:
        return self.dims[2]


@dataclass(frozen=True)
class EgoPose:
    """Planar rigid transform from the camera ground plane to a static world frame.

    The rotation uses the same convention as box yaw, so a box with yaw ``y``
    in camera coordinates has yaw ``y + heading`` in world coordinates.
    """

    frame: int
    x: float
    z: float
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class BevState:
    frame: int
    position: tuple[float, float]
    yaw: float
    length: float
    width: float
    velocity: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise InvalidRecordError(
                f"non-positive footprint {self.length}x{self.width} at frame {self.frame}"
            )
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))


def normalize_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


def rotate(x: float, z: float, angle: float) -> tuple[float, float]:
    """Rotate a ground-plane vector by ``angle`` in the KITTI yaw convention."""
    c, s = math.cos(angle), math.sin(angle)
    return x * c + z * s, -x * s + z * c


def _parse_line(fields: list[str], lineno: int, source: str | None) -> ObservationRecord:
    if len(fields) not in (_N_FIELDS_GT, _N_FIELDS_PRED):
        raise ParseError(
            f"expected {_N_FIELDS_GT} or {_N_FIELDS_PRED} fields, got {len(fields)}",
            lineno,
            source,
        )
    try:
        frame = int(fields[0])
        track_id = int(fields[1])
        truncated = float(fields[3])
        occluded = int(float(fields[4]))
        values = [float(f) for f in fields[5:]]
    except ValueError as exc:
        raise ParseError(f"non-numeric field ({exc})", lineno, source) from None
    if any(not math.isfinite(v) for v in values):
        raise ParseError("non-finite numeric field", lineno, source)
    alpha = values[0]
    bbox2d = tuple(values[1:5])
    dims = tuple(values[5:8])
    location = tuple(values[8:11])
    rotation_y = values[11]
    score = values[12] if len(values) == 13 else None
    return ObservationRecord(
        frame=frame,
        track_id=track_id,
        object_class=ObjectClass.from_label(fields[2]),
        truncated=truncated,
        occluded=occluded,
        alpha=alpha,
        bbox2d=bbox2d,
        dims=dims,
        location=location,
        rotation_y=rotation_y,
        score=score,
        label=fields[2],
    )


def parse_tracking_labels(text: str | Iterable[str], source: str | None = None) -> list[ObservationRecord]:
    """Parse KITTI tracking labels. Blank lines are skipped; order is preserved."""
    lines = text.splitlines() if isinstance(text, str) else text
    records = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        records.append(_parse_line(fields, lineno, source))
    return records


def read_tracking_labels(path: str | Path) -> list[ObservationRecord]:
    path = Path(path)
    with path.open() as fh:
        return parse_tracking_labels(fh, source=str(path))


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_tracking_labels(records: Iterable[ObservationRecord]) -> str:
    lines = []
    for r in records:
        label = r.label or r.object_class.value
        fields = [str(r.frame), str(r.track_id), label, _fmt(r.truncated), str(r.occluded), _fmt(r.alpha)]
        fields += [_fmt(v) for v in (*r.bbox2d, *r.dims, *r.location, r.rotation_y)]
        if r.score is not None:
            fields.append(_fmt(r.score))
        lines.append(" ".join(fields))
    return "".join(line + "\n" for line in lines)


def to_bev(record: ObservationRecord) -> BevState:
    if record.object_class is ObjectClass.IGNORED:
        raise InvalidRecordError(f"record of ignored class {record.label!r} has no footprint")
    if min(record.dims) <= 0:
        raise InvalidRecordError(
            f"non-positive dimensions {record.dims} for track {record.track_id} at frame {record.frame}"
        )
    x, _, z = record.location
    return BevState(
        frame=record.frame,
        position=(x, z),
        yaw=record.rotation_y,
        length=record.length,
        width=record.width,
    )


def apply_ego_pose(state: BevState, pose: EgoPose) -> BevState:
    if pose.frame != state.frame:
        raise ValueError(f"pose for frame {pose.frame} applied to state at frame {state.frame}")
    rx, rz = rotate(state.position[0], state.position[1], pose.heading)
    velocity = None
    if state.velocity is not None:
        velocity = rotate(state.velocity[0], state.velocity[1], pose.heading)
    return replace(
        state,
        position=(rx + pose.x, rz + pose.z),
        yaw=state.yaw + pose.heading,
        velocity=velocity,
    )


def parse_poses(text: str, source: str | None = None) -> dict[int, EgoPose]:
    """Parse an ego-pose file.

    Two layouts are accepted. JSON: a list of objects with keys ``frame``,
    ``x``, ``z``, ``heading``. Plain text: one ``frame x z heading`` line per
    frame, ``#`` starts a comment.
    """
    stripped = text.lstrip()
    poses: dict[int, EgoPose] = {}
    if stripped.startswith("[") or stripped.startswith("{"):
        data = json.loads(text)
        if isinstance(data, dict):
            data = data["poses"]
        for i, item in enumerate(data, start=1):
            try:
                pose = EgoPose(int(item["frame"]), float(item["x"]), float(item["z"]), float(item["heading"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad pose entry ({exc})", i, source) from None
            if pose.frame in poses:
                raise ParseError(f"duplicate pose for frame {pose.frame}", i, source)
            poses[pose.frame] = pose
        return poses
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split("#", 1)[0].split()
        if not fields:
            continue
        if len(fields) != 4:
            raise ParseError(f"expected 4 pose fields, got {len(fields)}", lineno, source)
        try:
            pose = EgoPose(int(fields[0]), float(fields[1]), float(fields[2]), float(fields[3]))
        except ValueError as exc:
            raise ParseError(f"non-numeric pose field ({exc})", lineno, source) from None
        if pose.frame in poses:
            raise ParseError(f"duplicate pose for frame {pose.frame}", lineno, source)
        poses[pose.frame] = pose
    return poses


def read_poses(path: str | Path) -> dict[int, EgoPose]:
    path = Path(path)
    return parse_poses(path.read_text(), source=str(path))


def make_ego_trajectory(
    frames: Sequence[int],
    poses: Mapping[int, EgoPose] | None = None,
    ego_dims: tuple[float, float] = DEFAULT_EGO_DIMS,
    offset: tuple[float, float] = (0.0, 0.0),
) -> "Trajectory":
    """Trajectory of the recording vehicle, with reserved id ``EGO_TRACK_ID``.

    Without poses the ego sits at ``offset`` in every camera frame, so other
    road users' motion is relative to it. With poses the same footprint is
    mapped into the world frame.
    """
    from kittisafety.trajectory import Trajectory

    if not frames:
        raise ValueError("ego trajectory needs at least one frame")
    length, width = ego_dims
    states = []
    for frame in sorted(set(frames)):
        state = BevState(frame=frame, position=offset, yaw=EGO_YAW, length=length, width=width)
        if poses is not None:
            if frame not in poses:
                raise KeyError(f"no ego pose for frame {frame}")
            state = apply_ego_pose(state, poses[frame])
        states.append(state)
    return Trajectory(track_id=EGO_TRACK_ID, object_class=ObjectClass.CAR, states=tuple(states), is_ego=True)
