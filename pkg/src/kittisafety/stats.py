"""TTC_min distribution comparison and report serialization.

Undefined statistics (empty samples) are represented by ``None`` in Python,
an empty cell in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from kittisafety.safety import Category, Interaction, SeverityCounts, count_severities, DEFAULT_THRESHOLDS

MEDIAN_BAND = 0.5
TOTAL_ROW = "Total"
CATEGORIES = (Category.MOVING.value, Category.STATIONARY.value)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous empirical CDF: F(x) = fraction of samples <= x."""

    values: np.ndarray

    def __init__(self, samples: Iterable[float]):
        object.__setattr__(self, "values", np.sort(np.asarray(list(samples), dtype=float)))

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, x):
        n = len(self.values)
        if n == 0:
            raise ValueError("CDF of an empty sample")
        return np.searchsorted(self.values, x, side="right") / n

    def steps(self) -> tuple[list[float], list[float]]:
        """Distinct jump locations and the CDF value at each."""
        xs = np.unique(self.values)
        return xs.tolist(), (self(xs)).tolist()


def ks_d_statistic(a: Sequence[float], b: Sequence[float]) -> float | None:
    """Two-sample Kolmogorov-Smirnov D: max |F_a - F_b|. None if either sample is empty."""
    if len(a) == 0 or len(b) == 0:
        return None
    fa, fb = EmpiricalCdf(a), EmpiricalCdf(b)
    pooled = np.concatenate([fa.values, fb.values])
    return float(np.max(np.abs(fa(pooled) - fb(pooled))))


def median(samples: Sequence[float]) -> float | None:
    if len(samples) == 0:
        return None
    return float(np.median(np.asarray(samples, dtype=float)))


def within_band(method_median: float, gt_median: float, band: float = MEDIAN_BAND) -> bool:
    return abs(method_median - gt_median) <= band


@dataclass(frozen=True)
class MethodResult:
    """Per-method outcome for one sequence.

    ``samples`` holds the TTC_min values below the 10 s threshold, sorted;
    ``by_category`` splits them by interaction category.
    """

    counts: SeverityCounts
    samples: tuple[float, ...] = ()
    by_category: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    @classmethod
    def from_interactions(
        cls, interactions: Sequence[Interaction], thresholds: tuple[float, float] = DEFAULT_THRESHOLDS
    ) -> "MethodResult":
        counts = count_severities(interactions, thresholds)
        kept = [i for i in interactions if i.ttc_min is not None and i.ttc_min < thresholds[0]]
        by_category = {
            cat: tuple(sorted(i.ttc_min for i in kept if i.category is not None and i.category.value == cat))
            for cat in CATEGORIES
        }
        return cls(counts, tuple(sorted(i.ttc_min for i in kept)), by_category)

    def merged(self, other: "MethodResult") -> "MethodResult":
        cats = {
            c: tuple(sorted(self.by_category.get(c, ()) + other.by_category.get(c, ())))
            for c in CATEGORIES
        }
        return MethodResult(self.counts + other.counts, tuple(sorted(self.samples + other.samples)), cats)


@dataclass
class SequenceReport:
    sequence: str
    methods: dict[str, MethodResult]
    reference: str | None = "GroundTruth"

    def ordered_methods(self) -> list[str]:
        names = sorted(self.methods)
        if self.reference in self.methods:
            names.remove(self.reference)
            names.insert(0, self.reference)
        return names

    def _ref_samples(self):
        if self.reference is None or self.reference not in self.methods:
            return None
        return self.methods[self.reference].samples

    def d_statistic(self, method: str) -> float | None:
        ref = self._ref_samples()
        return None if ref is None else ks_d_statistic(self.methods[method].samples, ref)

    def median(self, method: str) -> float | None:
        return median(self.methods[method].samples)

    def median_abs_diff(self, method: str) -> float | None:
        ref = self._ref_samples()
        m, g = self.median(method), (None if ref is None else median(ref))
        return None if m is None or g is None else abs(m - g)

    def within_band(self, method: str, band: float = MEDIAN_BAND) -> bool | None:
        diff = self.median_abs_diff(method)
        return None if diff is None else diff <= band

    def has_undefined(self) -> bool:
        return any(len(r.samples) == 0 for r in self.methods.values())


def total_report(reports: Sequence[SequenceReport]) -> SequenceReport:
    """Aggregate across sequences: summed counts and pooled samples."""
    merged: dict[str, MethodResult] = {}
    reference = reports[0].reference if reports else None
    for rep in reports:
        for name, res in rep.methods.items():
            merged[name] = merged[name].merged(res) if name in merged else res
    return SequenceReport(TOTAL_ROW, merged, reference)


CSV_COLUMNS = [
    "sequence",
    "method",
    "reference",
    "total_interactions",
    "below_10s",
    "below_1_5s",
    "median",
    "median_abs_diff",
    "d_statistic",
    "within_band",
    "ttc_min",
    "ttc_min_interaction1",
    "ttc_min_interaction2",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _join(samples: Iterable[float]) -> str:
    return " ".join(repr(float(v)) for v in samples)


def _split(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split())


def _method_json(rep: SequenceReport, name: str) -> dict:
    res = rep.methods[name]
    cdf = {}
    for key, samples in [("all", res.samples), *[(c, res.by_category.get(c, ())) for c in CATEGORIES]]:
        xs, fs = EmpiricalCdf(samples).steps() if samples else ([], [])
        cdf[key] = {"x": xs, "F": fs}
    return {
        "counts": {
            "total_interactions": res.counts.total_interactions,
            "below_10s": res.counts.below_10s,
            "below_1_5s": res.counts.below_1_5s,
        },
        "median": rep.median(name),
        "median_abs_diff": rep.median_abs_diff(name),
        "d_statistic": rep.d_statistic(name),
        "within_band": rep.within_band(name),
        "ttc_min": list(res.samples),
        "by_category": {c: list(res.by_category.get(c, ())) for c in CATEGORIES},
        "cdf": cdf,
    }


def _sequence_json(rep: SequenceReport) -> dict:
    return {
        "sequence": rep.sequence,
        "reference": rep.reference,
        "methods": {name: _method_json(rep, name) for name in rep.ordered_methods()},
    }


def export_report(reports: Sequence[SequenceReport], fmt: str = "csv") -> str:
    """Serialize reports sorted by sequence, plus a totals entry when non-empty."""
    reports = sorted(reports, key=lambda r: r.sequence)
    if fmt == "json":
        payload = {"sequences": [_sequence_json(r) for r in reports]}
        payload["total"] = _sequence_json(total_report(reports)) if reports else None
        return json.dumps(payload, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    rows = list(reports) + ([total_report(reports)] if reports else [])
    for rep in rows:
        for name in rep.ordered_methods():
            res = rep.methods[name]
            writer.writerow(
                _cell(v)
                for v in (
                    rep.sequence,
                    name,
                    rep.reference,
                    res.counts.total_interactions,
                    res.counts.below_10s,
                    res.counts.below_1_5s,
                    rep.median(name),
                    rep.median_abs_diff(name),
                    rep.d_statistic(name),
                    rep.within_band(name),
                    _join(res.samples),
                    _join(res.by_category.get(CATEGORIES[0], ())),
                    _join(res.by_category.get(CATEGORIES[1], ())),
                )
            )
    return buf.getvalue()


def parse_report(content: str, fmt: str = "csv") -> list[SequenceReport]:
    """Inverse of ``export_report``; derived columns and totals are recomputed, not read."""
    reports: dict[str, SequenceReport] = {}
    if fmt == "json":
        data = json.loads(content)
        for seq in data["sequences"]:
            methods = {}
            for name, m in seq["methods"].items():
                c = m["counts"]
                methods[name] = MethodResult(
                    SeverityCounts(c["below_10s"], c["below_1_5s"], c["total_interactions"]),
                    tuple(float(v) for v in m["ttc_min"]),
                    {k: tuple(float(v) for v in vs) for k, vs in m["by_category"].items()},
                )
            reports[seq["sequence"]] = SequenceReport(seq["sequence"], methods, seq["reference"])
        return list(reports.values())
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    for row in csv.DictReader(io.StringIO(content)):
        if row["sequence"] == TOTAL_ROW:
            continue
        rep = reports.setdefault(row["sequence"], SequenceReport(row["sequence"], {}, row["reference"] or None))
        rep.methods[row["method"]] = MethodResult(
            SeverityCounts(int(row["below_10s"]), int(row["below_1_5s"]), int(row["total_interactions"])),
            _split(row["ttc_min"]),
            {CATEGORIES[0]: _split(row["ttc_min_interaction1"]), CATEGORIES[1]: _split(row["ttc_min_interaction2"])},
        )
    return list(reports.values())


def export_cdf_table(reports: Sequence[SequenceReport]) -> str:
    """Long-format CDF steps (sequence, method, category, x, F) for external plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sequence", "method", "category", "x", "F"])
    for rep in sorted(reports, key=lambda r: r.sequence):
        for name in rep.ordered_methods():
            res = rep.methods[name]
            for cat, samples in [("all", res.samples), *[(c, res.by_category.get(c, ())) for c in CATEGORIES]]:
                if not samples:
                    continue
                xs, fs = EmpiricalCdf(samples).steps()
                for x, f in zip(xs, fs):
                    writer.writerow([rep.sequence, name, cat, repr(x), repr(f)])
    return buf.getvalue()
