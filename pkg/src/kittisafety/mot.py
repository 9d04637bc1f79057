"""CLEAR MOT evaluation on 2D image boxes.

Matching per frame keeps last frame's correspondences when they still pass
the gate, then assigns the rest by minimum cost (1 - IoU by default, or
center distance in pixels). MOTP is reported as mean IoU of matches
(higher is better); the mean center distance is reported as ``motp_distance``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from kittisafety.kitti_io import ANALYZED_CLASSES, ObjectClass, ObservationRecord

MT_THRESHOLD = 0.8
ML_THRESHOLD = 0.2
ALL_CLASSES = "All"


def solve_assignment(cost, sentinel: float | None = None) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment of rows to columns.

    Entries that are non-finite, or ``>= sentinel`` when given, are
    infeasible and never appear in the result. Among assignments with the
    most feasible pairs, total cost is minimal.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.size == 0:
        return []
    if cost.ndim != 2:
        raise ValueError("cost must be a 2D matrix")
    infeasible = ~np.isfinite(cost)
    if sentinel is not None:
        infeasible |= cost >= sentinel
    finite = np.where(infeasible, 0.0, cost)
    big = 2.0 * np.abs(finite).sum() + 1.0
    rows, cols = linear_sum_assignment(np.where(infeasible, big, finite))
    return [(int(r), int(c)) for r, c in zip(rows, cols) if not infeasible[r, c]]


@dataclass(frozen=True)
class Detection:
    track_id: int
    box: tuple[float, float, float, float]  # left, top, right, bottom (pixels)
    object_class: ObjectClass | None = None

    @classmethod
    def from_record(cls, record: ObservationRecord) -> "Detection":
        return cls(record.track_id, record.bbox2d, record.object_class)


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def center_distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot((a[0] + a[2] - b[0] - b[2]) / 2, (a[1] + a[3] - b[1] - b[3]) / 2)


@dataclass(frozen=True)
class Match:
    gt_id: int
    pred_id: int
    distance: float
    iou: float


@dataclass(frozen=True)
class FrameMatchResult:
    matches: tuple[Match, ...]
    fp: int
    fn: int
    gt_ids: tuple[int, ...] = ()
    pred_ids: tuple[int, ...] = ()
    # Every (gt, pred) pair passing the gate, used for identity-level scores.
    gated_pairs: tuple[tuple[int, int], ...] = ()

    @property
    def c_t(self) -> int:
        return len(self.matches)

    def match_map(self) -> dict[int, int]:
        return {m.gt_id: m.pred_id for m in self.matches}


def _check_unique(dets: Sequence[Detection], what: str):
    seen = Counter(d.track_id for d in dets)
    dup = [i for i, n in seen.items() if n > 1]
    if dup:
        raise ValueError(f"duplicate {what} ids in one frame: {sorted(dup)}")


def match_frame(
    gt: Sequence[Detection],
    pred: Sequence[Detection],
    prev_matches: Mapping[int, int] | None = None,
    gate: float = 0.5,
    cost: str = "iou",
    distance_gate: float = 50.0,
) -> FrameMatchResult:
    """Match one frame's ground truth to predictions.

    ``cost="iou"`` gates on IoU >= ``gate``; ``cost="center"`` gates on
    center distance <= ``distance_gate`` pixels. Objects with different
    classes never match.
    """
    if cost not in ("iou", "center"):
        raise ValueError(f"unknown cost {cost!r}")
    _check_unique(gt, "ground-truth")
    _check_unique(pred, "predicted")
    n, m = len(gt), len(pred)
    ious = np.zeros((n, m))
    dists = np.zeros((n, m))
    ok = np.zeros((n, m), dtype=bool)
    for i, g in enumerate(gt):
        for j, p in enumerate(pred):
            ious[i, j] = iou(g.box, p.box)
            dists[i, j] = center_distance(g.box, p.box)
            same = g.object_class is None or p.object_class is None or g.object_class == p.object_class
            passes = ious[i, j] >= gate if cost == "iou" else dists[i, j] <= distance_gate
            ok[i, j] = same and passes

    gt_index = {g.track_id: i for i, g in enumerate(gt)}
    pred_index = {p.track_id: j for j, p in enumerate(pred)}
    pairs: list[tuple[int, int]] = []
    for gid, pid in (prev_matches or {}).items():
        i, j = gt_index.get(gid), pred_index.get(pid)
        if i is not None and j is not None and ok[i, j]:
            pairs.append((i, j))

    used_r = {i for i, _ in pairs}
    used_c = {j for _, j in pairs}
    free_r = [i for i in range(n) if i not in used_r]
    free_c = [j for j in range(m) if j not in used_c]
    if free_r and free_c:
        base = 1.0 - ious if cost == "iou" else dists
        sub = np.where(ok[np.ix_(free_r, free_c)], base[np.ix_(free_r, free_c)], np.inf)
        pairs += [(free_r[r], free_c[c]) for r, c in solve_assignment(sub)]

    pairs.sort(key=lambda rc: gt[rc[0]].track_id)
    matches = tuple(
        Match(gt[i].track_id, pred[j].track_id, float(dists[i, j]), float(ious[i, j])) for i, j in pairs
    )
    gated = tuple((gt[i].track_id, pred[j].track_id) for i, j in zip(*np.nonzero(ok)))
    return FrameMatchResult(
        matches=matches,
        fp=m - len(matches),
        fn=n - len(matches),
        gt_ids=tuple(g.track_id for g in gt),
        pred_ids=tuple(p.track_id for p in pred),
        gated_pairs=gated,
    )


@dataclass
class MotAccumulator:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    idsw: int = 0
    frag: int = 0
    gt: int = 0
    n_pred: int = 0
    sum_iou: float = 0.0
    sum_distance: float = 0.0
    sum_frame_mean_iou: float = 0.0
    n_frames: int = 0
    n_match_frames: int = 0
    coverage: list[float] = field(default_factory=list)
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0

    def __add__(self, other: "MotAccumulator") -> "MotAccumulator":
        out = MotAccumulator()
        for name in self.__dataclass_fields__:
            setattr(out, name, getattr(self, name) + getattr(other, name))
        return out


def accumulate(results: Iterable[FrameMatchResult]) -> MotAccumulator:
    """Tally a frame-ordered sequence of match results."""
    acc = MotAccumulator()
    last_pred: dict[int, int] = {}
    interrupted: dict[int, bool] = {}
    present: Counter[int] = Counter()
    matched: Counter[int] = Counter()
    hits: Counter[tuple[int, int]] = Counter()
    pred_dets = 0
    for res in results:
        acc.n_frames += 1
        acc.tp += res.c_t
        acc.fp += res.fp
        acc.fn += res.fn
        acc.gt += len(res.gt_ids)
        pred_dets += len(res.pred_ids)
        hits.update(res.gated_pairs)
        if res.c_t:
            frame_iou = sum(mt.iou for mt in res.matches)
            acc.sum_iou += frame_iou
            acc.sum_distance += sum(mt.distance for mt in res.matches)
            acc.sum_frame_mean_iou += frame_iou / res.c_t
            acc.n_match_frames += 1
        now = res.match_map()
        for gid in res.gt_ids:
            present[gid] += 1
            if gid in now:
                matched[gid] += 1
                prev = last_pred.get(gid)
                if prev is not None:
                    if now[gid] != prev:
                        acc.idsw += 1
                    if interrupted.get(gid):
                        acc.frag += 1
                interrupted[gid] = False
                last_pred[gid] = now[gid]
            elif gid in last_pred:
                interrupted[gid] = True
    acc.n_pred = pred_dets
    acc.coverage = [matched[g] / present[g] for g in sorted(present)]

    gids = sorted({g for g, _ in hits})
    pids = sorted({p for _, p in hits})
    if gids:
        weights = np.array([[hits.get((g, p), 0) for p in pids] for g in gids], dtype=float)
        acc.idtp = int(sum(weights[r, c] for r, c in solve_assignment(-weights)))
    acc.idfn = acc.gt - acc.idtp
    acc.idfp = pred_dets - acc.idtp
    return acc


@dataclass(frozen=True)
class MotReport:
    mota: float | None
    motp: float | None
    motp_distance: float | None
    moda: float | None
    modp: float | None
    idf1: float | None
    det_f1: float | None
    mt: float | None
    ml: float | None
    fp_pct: float | None
    fn_pct: float | None
    tp: int
    fp: int
    fn: int
    idsw: int
    frag: int
    gt: int
    n_tracks: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _ratio(num: float, den: float) -> float | None:
    return num / den if den else None


def metrics(acc: MotAccumulator) -> MotReport:
    """Derive the CLEAR MOT scores; rate metrics are None when GT is zero."""
    defined = acc.gt > 0
    # MODA = (TP - FP) / (TP + FN) written over GT = TP + FN, the same form
    # as MOTA, so MOTA <= MODA holds exactly in floating point.
    n_tracks = len(acc.coverage)
    return MotReport(
        mota=1 - (acc.fn + acc.fp + acc.idsw) / acc.gt if defined else None,
        motp=_ratio(acc.sum_iou, acc.tp) if defined else None,
        motp_distance=_ratio(acc.sum_distance, acc.tp) if defined else None,
        moda=1 - (acc.fn + acc.fp) / acc.gt if defined else None,
        modp=_ratio(acc.sum_frame_mean_iou, acc.n_match_frames) if defined else None,
        idf1=_ratio(2 * acc.idtp, 2 * acc.idtp + acc.idfp + acc.idfn) if defined else None,
        det_f1=_ratio(2 * acc.tp, 2 * acc.tp + acc.fp + acc.fn) if defined else None,
        mt=_ratio(sum(c >= MT_THRESHOLD for c in acc.coverage), n_tracks) if defined else None,
        ml=_ratio(sum(c <= ML_THRESHOLD for c in acc.coverage), n_tracks) if defined else None,
        fp_pct=100 * acc.fp / acc.gt if defined else None,
        fn_pct=100 * acc.fn / acc.gt if defined else None,
        tp=acc.tp,
        fp=acc.fp,
        fn=acc.fn,
        idsw=acc.idsw,
        frag=acc.frag,
        gt=acc.gt,
        n_tracks=n_tracks,
    )


def _by_frame(records: Iterable[ObservationRecord], classes) -> dict[int, list[Detection]]:
    frames: dict[int, list[Detection]] = {}
    for r in records:
        if r.object_class in classes:
            frames.setdefault(r.frame, []).append(Detection.from_record(r))
    return frames


def evaluate_sequence(
    gt_records: Sequence[ObservationRecord],
    pred_records: Sequence[ObservationRecord],
    gate: float = 0.5,
    cost: str = "iou",
    distance_gate: float = 50.0,
    n_frames: int | None = None,
) -> dict[str, MotAccumulator]:
    """Accumulators per analyzed class plus ``"All"`` (class-consistent matching)."""
    groups = {c.value: (c,) for c in ANALYZED_CLASSES}
    groups[ALL_CLASSES] = ANALYZED_CLASSES
    all_frames = {r.frame for r in gt_records} | {r.frame for r in pred_records}
    last = max(all_frames, default=-1)
    if n_frames is not None:
        last = max(last, n_frames - 1)
    out = {}
    for name, classes in groups.items():
        gt_f = _by_frame(gt_records, classes)
        pred_f = _by_frame(pred_records, classes)
        prev: dict[int, int] = {}
        results = []
        for frame in range(0, last + 1):
            res = match_frame(gt_f.get(frame, []), pred_f.get(frame, []), prev, gate, cost, distance_gate)
            prev = res.match_map()
            results.append(res)
        out[name] = accumulate(results)
    return out
