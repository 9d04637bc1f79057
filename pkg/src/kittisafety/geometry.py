"""Oriented ground-plane rectangles, overlap testing and time-to-collision.

Rectangles are closed sets: boxes whose boundaries touch overlap. The
overlap decision allows ``CONTACT_TOL`` meters of slack so that exact
contact survives floating-point round-off.

The TTC search is vectorized: a whole grid of future instants (and, in
``ttc_grid``, many frames at once) is tested with one separating-axis pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from kittisafety.kitti_io import BevState, normalize_angle

CONTACT_TOL = 1e-9


@dataclass(frozen=True)
class BevBox:
    center: tuple[float, float]
    yaw: float
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"non-positive box size {self.length}x{self.width}")
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))

    @classmethod
    def from_state(cls, state: BevState) -> "BevBox":
        return cls(state.position, state.yaw, state.length, state.width)


@dataclass(frozen=True)
class TtcConfig:
    horizon: float = 10.0
    dt: float = 0.1

    def __post_init__(self):
        if not (0 < self.dt <= self.horizon):
            raise ValueError(f"need 0 < dt <= horizon, got dt={self.dt}, horizon={self.horizon}")

    @property
    def times(self) -> np.ndarray:
        # Integer multiples of dt, rounded so that 3 * 0.1 reports as 0.3.
        n = int(math.floor(self.horizon / self.dt + 1e-9))
        return np.round(np.arange(n + 1) * self.dt, 12)


def _axes(yaw):
    """Unit length axis and width axis for yaw (scalar or array), KITTI convention."""
    c, s = np.cos(yaw), np.sin(yaw)
    return np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)


def corners(box: BevBox) -> np.ndarray:
    """Four corners, counter-clockwise in the (x, z) plane, as a (4, 2) array."""
    u, w = _axes(box.yaw)
    hl, hw = box.length / 2, box.width / 2
    center = np.asarray(box.center, dtype=float)
    offsets = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
    pts = np.array([center + a * u + b * w for a, b in offsets])
    # The KITTI rotation is a reflection of the usual one; fix winding here.
    x, z = pts[:, 0], pts[:, 1]
    signed_area = 0.5 * np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z)
    return pts if signed_area > 0 else pts[::-1].copy()


def _separated(d, ua, wa, ha, hwa, ub, wb, hb, hwb):
    """Separating-axis test for broadcast arrays; True where a gap exists.

    ``d`` is center(b) - center(a); ``u*``/``w*`` are unit axes; ``h*``/``hw*``
    half length and half width.
    """
    sep = np.zeros(d.shape[:-1], dtype=bool)
    for n in (ua, wa, ub, wb):
        dist = np.abs(np.sum(d * n, axis=-1))
        ra = ha * np.abs(np.sum(ua * n, axis=-1)) + hwa * np.abs(np.sum(wa * n, axis=-1))
        rb = hb * np.abs(np.sum(ub * n, axis=-1)) + hwb * np.abs(np.sum(wb * n, axis=-1))
        sep |= dist > ra + rb + CONTACT_TOL
    return sep


def overlap(a: BevBox, b: BevBox) -> bool:
    ua, wa = _axes(a.yaw)
    ub, wb = _axes(b.yaw)
    d = np.subtract(b.center, a.center, dtype=float)
    return not bool(_separated(d, ua, wa, a.length / 2, a.width / 2, ub, wb, b.length / 2, b.width / 2))


def extrapolate(state: BevState, t: float) -> BevBox:
    """Footprint after ``t`` seconds of constant-velocity, constant-heading motion."""
    if state.velocity is None:
        raise ValueError(f"state at frame {state.frame} has no velocity")
    if t < 0:
        raise ValueError("extrapolation time must be non-negative")
    x, z = state.position
    vx, vz = state.velocity
    return BevBox((x + vx * t, z + vz * t), state.yaw, state.length, state.width)


def _state_arrays(states: list[BevState]):
    pos = np.array([s.position for s in states], dtype=float)
    vel = np.array([s.velocity for s in states], dtype=float)
    yaw = np.array([s.yaw for s in states], dtype=float)
    half_l = np.array([s.length / 2 for s in states], dtype=float)
    half_w = np.array([s.width / 2 for s in states], dtype=float)
    return pos, vel, yaw, half_l, half_w


def ttc_grid(a_states: list[BevState], b_states: list[BevState], cfg: TtcConfig = TtcConfig()) -> list[float | None]:
    """TTC for aligned lists of simultaneous states (one result per pair)."""
    if len(a_states) != len(b_states):
        raise ValueError("state lists must be aligned")
    if not a_states:
        return []
    for sa, sb in zip(a_states, b_states):
        if sa.frame != sb.frame:
            raise ValueError(f"frame mismatch: {sa.frame} vs {sb.frame}")
        if sa.velocity is None or sb.velocity is None:
            raise ValueError(f"missing velocity at frame {sa.frame}")
    times = cfg.times
    pa, va, yaw_a, hla, hwa = _state_arrays(a_states)
    pb, vb, yaw_b, hlb, hwb = _state_arrays(b_states)
    # (F, T, 2) extrapolated centers; each center is computed on its own so
    # swapping a and b negates d exactly.
    ca = pa[:, None, :] + va[:, None, :] * times[None, :, None]
    cb = pb[:, None, :] + vb[:, None, :] * times[None, :, None]
    d = cb - ca
    ua, wa = _axes(yaw_a)
    ub, wb = _axes(yaw_b)
    sep = _separated(
        d,
        ua[:, None, :], wa[:, None, :], hla[:, None], hwa[:, None],
        ub[:, None, :], wb[:, None, :], hlb[:, None], hwb[:, None],
    )
    hit = ~sep
    first = np.argmax(hit, axis=1)
    any_hit = hit.any(axis=1)
    return [float(times[k]) if ok else None for k, ok in zip(first, any_hit)]


def ttc(a: BevState, b: BevState, cfg: TtcConfig = TtcConfig()) -> float | None:
    """First grid instant in ``[0, horizon]`` at which the extrapolated boxes overlap.

    Returns None when the boxes never overlap within the horizon.
    """
    return ttc_grid([a], [b], cfg)[0]
