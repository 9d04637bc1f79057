import math

import pytest

from kittisafety.kitti_io import BevState


def kitti_line(frame, track_id, label="Car", loc=(0.0, 1.6, 10.0), dims=(1.5, 1.8, 4.0), ry=-math.pi / 2,
               bbox=(100.0, 150.0, 200.0, 250.0), score=None):
    fields = [frame, track_id, label, 0, 0, -1.0, *bbox, *dims, *loc, ry]
    if score is not None:
        fields.append(score)
    return " ".join(str(f) for f in fields)


def scene_text(tracks):
    """KITTI label text from ``{track_id: [(frame, x, z, label), ...]}``.

    2D boxes are derived from the ground position so that image IoU tracks
    ground-plane proximity.
    """
    lines = []
    for tid, obs in tracks.items():
        for frame, x, z, label in obs:
            u = 600 + 40 * x
            bbox = (u - 30, 150.0 + z, u + 30, 230.0 + z)
            lines.append((frame, tid, kitti_line(frame, tid, label, loc=(x, 1.6, z), bbox=bbox)))
    lines.sort()
    return "\n".join(line for _, _, line in lines) + "\n"


@pytest.fixture
def mixed_scene():
    """Camera-frame scene: a closing car, a jittering parked car, a crossing pedestrian and cyclist."""
    tracks = {
        1: [(f, 1.5, 30.0 - 1.2 * f, "Car") for f in range(20)],
        2: [(f, -4.0 + 0.01 * (-1) ** f, 12.0 + 0.02 * (-1) ** f, "Car") for f in range(20)],
        3: [(f, 6.0 - 0.15 * f, 15.0, "Pedestrian") for f in range(5, 20)],
        4: [(f, 20.0, 40.0, "DontCare") for f in range(3)],
        5: [(f, -10.0 + 0.5 * f, 25.0, "Cyclist") for f in range(0, 12)],
    }
    return scene_text(tracks)


def state(frame=0, pos=(0.0, 0.0), yaw=0.0, length=4.0, width=2.0, vel=(0.0, 0.0)):
    return BevState(frame=frame, position=pos, yaw=yaw, length=length, width=width, velocity=vel)
