"""Command-line interface.

Subcommands::

    parse-check   validate label files
    postprocess   dump post-processed trajectories as JSON
    analyze       interactions, TTC_min, severity counts and reports
    metrics       CLEAR MOT evaluation of a tracker against ground truth
    export-cdf    CDF step table from a saved JSON/CSV report
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

from kittisafety.geometry import TtcConfig
from kittisafety.kitti_io import ParseError, read_poses, read_tracking_labels
from kittisafety.mot import ALL_CLASSES, evaluate_sequence, metrics
from kittisafety.pipeline import AnalysisConfig, analyze_file, discover_sequences, sequence_trajectories, variant_flags
from kittisafety.safety import Interaction, SeverityCounts, reduction_percentages
from kittisafety.stats import MethodResult, SequenceReport, export_cdf_table, export_report, parse_report
from kittisafety.trajectory import PostProcessConfig, Trajectory

REFERENCE_METHOD = "GroundTruth"


def _post_config(args, file_cfg: dict) -> PostProcessConfig:
    values = {}
    for f in fields(PostProcessConfig):
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            values[f.name] = cli_value
        elif f.name in file_cfg:
            values[f.name] = file_cfg[f.name]
    return PostProcessConfig(**values)


def _ttc_config(args, file_cfg: dict) -> TtcConfig:
    horizon = args.ttc_horizon if args.ttc_horizon is not None else file_cfg.get("ttc_horizon", 10.0)
    dt = args.ttc_dt if args.ttc_dt is not None else file_cfg.get("ttc_dt", 0.1)
    return TtcConfig(horizon=horizon, dt=dt)


def _flag(args, file_cfg: dict, name: str, default: bool = False) -> bool:
    value = getattr(args, name)
    if value is not None:
        return value
    return bool(file_cfg.get(name, default))


def _load_config(path) -> dict:
    if path is None:
        return {}
    cfg = json.loads(Path(path).read_text())
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _base_config(args) -> AnalysisConfig:
    file_cfg = _load_config(getattr(args, "config", None))
    return AnalysisConfig(
        post=_post_config(args, file_cfg),
        ttc=_ttc_config(args, file_cfg),
        idsplit=_flag(args, file_cfg, "enable_idsplit"),
        ss=_flag(args, file_cfg, "enable_ss"),
        include_ego=_flag(args, file_cfg, "include_ego", default=True),
        ego_dims=(args.ego_length, args.ego_width),
    )


def _add_pipeline_flags(p: argparse.ArgumentParser):
    p.add_argument("--labels", required=True, help="label file or directory of NNNN.txt files")
    p.add_argument("--poses", help="ego-pose file, or directory of NNNN pose files")
    p.add_argument("--config", help="JSON file with default thresholds and flags")
    p.add_argument("--enable-idsplit", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--enable-ss", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--include-ego", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--thr-split", type=int, help="max missing frames before a track is split (10)")
    p.add_argument("--thr-cons", type=int, help="min frames for a split segment to survive (3)")
    p.add_argument("--thr-sta", type=float, help="stationary endpoint threshold in meters (2.0)")
    p.add_argument("--fps", type=float, help="frame rate (10)")
    p.add_argument("--velocity-window", type=int, help="finite-difference half window in frames (1)")
    p.add_argument("--ttc-horizon", type=float, help="TTC search horizon in seconds (10)")
    p.add_argument("--ttc-dt", type=float, help="TTC time step in seconds (0.1)")
    p.add_argument("--ego-length", type=float, default=4.5)
    p.add_argument("--ego-width", type=float, default=1.8)


def _pose_path(poses: str | None, seq: str) -> Path | None:
    if poses is None:
        return None
    path = Path(poses)
    if path.is_dir():
        for suffix in (".txt", ".json"):
            candidate = path / f"{seq}{suffix}"
            if candidate.exists():
                return candidate
        raise FileNotFoundError(f"no pose file for sequence {seq} in {path}")
    return path


def _trajectory_json(t: Trajectory) -> dict:
    return {
        "track_id": t.track_id,
        "source_id": t.source_id,
        "class": t.object_class.value,
        "ego": t.is_ego,
        "stationary": t.stationary,
        "states": [asdict(s) for s in t.states],
    }


def cmd_parse_check(args) -> int:
    failures = 0
    for seq, path in discover_sequences(args.labels).items():
        try:
            records = read_tracking_labels(path)
        except ParseError as exc:
            print(f"{seq}: ERROR {exc}", file=sys.stderr)
            failures += 1
            continue
        by_class: dict[str, int] = {}
        for r in records:
            by_class[r.object_class.value] = by_class.get(r.object_class.value, 0) + 1
        summary = " ".join(f"{k}={v}" for k, v in sorted(by_class.items()))
        print(f"{seq}: {len(records)} records {summary}".rstrip())
    return 1 if failures else 0


def cmd_postprocess(args) -> int:
    cfg = _base_config(args)
    out = {}
    for seq, path in discover_sequences(args.labels).items():
        pose_path = _pose_path(args.poses, seq)
        poses = read_poses(pose_path) if pose_path else None
        trajs = sequence_trajectories(read_tracking_labels(path), cfg, poses)
        out[seq] = [_trajectory_json(t) for t in trajs]
    text = json.dumps(out, indent=1) + "\n"
    _emit(text, args.out)
    return 0


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


@dataclass(frozen=True)
class _Job:
    method: str
    seq: str
    labels: Path
    poses: Path | None
    cfg: AnalysisConfig


def _run_job(job: _Job) -> tuple[list[Trajectory], list[Interaction]]:
    return analyze_file(job.labels, job.cfg, job.poses)


INTERACTION_COLUMNS = [
    "method", "variant", "sequence", "track_a", "track_b", "class_a", "class_b",
    "category", "first_frame", "last_frame", "ttc_min",
]


def _interaction_rows(method, variant, seq, trajs, interactions, emit_series):
    classes = {t.track_id: ("Ego" if t.is_ego else t.object_class.value) for t in trajs}
    for inter in interactions:
        a, b = inter.pair
        row = {
            "method": method,
            "variant": variant,
            "sequence": seq,
            "track_a": a,
            "track_b": b,
            "class_a": classes[a],
            "class_b": classes[b],
            "category": inter.category.value if inter.category else None,
            "first_frame": inter.frames[0],
            "last_frame": inter.frames[1],
            "ttc_min": inter.ttc_min,
        }
        if emit_series:
            row["ttc_series"] = {str(f): v for f, v in sorted(inter.ttc_series.items())}
        yield row


def _csv_text(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c)
            if c == "ttc_series" and v is not None:
                v = " ".join(f"{f}:{'' if t is None else repr(t)}" for f, t in v.items())
            cells.append("" if v is None else (repr(v) if isinstance(v, float) else str(v)))
        writer.writerow(cells)
    return buf.getvalue()


def cmd_analyze(args) -> int:
    base = _base_config(args)
    variants = args.variant or [base.variant]
    methods = {args.method: args.labels}
    if args.reference is not None:
        if args.method == REFERENCE_METHOD:
            raise SystemExit(f"--method must differ from the reference label {REFERENCE_METHOD!r}")
        methods = {REFERENCE_METHOD: args.reference, **methods}

    seqs_by_method = {m: discover_sequences(p) for m, p in methods.items()}
    seq_ids = sorted(set().union(*[set(s) for s in seqs_by_method.values()]))
    jobs: list[_Job] = []
    for variant in variants:
        idsplit, ss = variant_flags(variant)
        cfg = AnalysisConfig(**{**base.__dict__, "idsplit": idsplit, "ss": ss})
        for method, seqs in seqs_by_method.items():
            for seq in seq_ids:
                if seq not in seqs:
                    continue
                jobs.append(_Job(method, seq, seqs[seq], _pose_path(args.poses, seq), cfg))

    errors: list[str] = []
    results = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = [pool.submit(_run_job, job) for job in jobs]
            for job, fut in zip(jobs, futures):
                try:
                    results.append(fut.result())
                except (ParseError, ValueError, KeyError, OSError) as exc:
                    errors.append(f"{job.method}/{job.seq}: {exc}")
                    results.append(None)
    else:
        for job in jobs:
            try:
                results.append(_run_job(job))
            except (ParseError, ValueError, KeyError, OSError) as exc:
                errors.append(f"{job.method}/{job.seq}: {exc}")
                results.append(None)
    if errors:
        print(f"{len(errors)} sequence(s) failed; no output written:", file=sys.stderr)
        for e in errors:
            print(f"  {e}", file=sys.stderr)
        return 2

    fmt = args.format
    rows_by_variant: dict[str, list[dict]] = {v: [] for v in variants}
    reports: dict[str, dict[str, SequenceReport]] = {v: {} for v in variants}
    counts: dict[tuple[str, str], SeverityCounts] = {}
    count_rows = []
    for job, (trajs, interactions) in zip(jobs, results):
        variant = job.cfg.variant
        rows_by_variant[variant].extend(
            _interaction_rows(job.method, variant, job.seq, trajs, interactions, args.emit_series)
        )
        res = MethodResult.from_interactions(interactions, job.cfg.thresholds)
        reports[variant].setdefault(job.seq, SequenceReport(job.seq, {}, REFERENCE_METHOD)).methods[job.method] = res
        counts[(job.method, variant)] = counts.get((job.method, variant), SeverityCounts()) + res.counts
        count_rows.append((job.seq, job.method, variant, res.counts))

    files: dict[str, str] = {}
    for variant in variants:
        tag = variant.replace("+", "_")
        rows = rows_by_variant[variant]
        if fmt == "json":
            files[f"interactions_{tag}.json"] = json.dumps(rows, indent=1) + "\n"
        else:
            cols = INTERACTION_COLUMNS + (["ttc_series"] if args.emit_series else [])
            files[f"interactions_{tag}.csv"] = _csv_text(cols, rows)
        seq_reports = list(reports[variant].values())
        if args.drop_undefined:
            seq_reports = [r for r in seq_reports if not r.has_undefined()]
        files[f"report_{tag}.{fmt}"] = export_report(seq_reports, fmt)
        files[f"cdf_{tag}.csv"] = export_cdf_table(seq_reports)

    table = [
        {"sequence": seq, "method": m, "variant": v, "below_10s": c.below_10s,
         "below_1_5s": c.below_1_5s, "total_interactions": c.total_interactions}
        for seq, m, v, c in sorted(count_rows, key=lambda r: (r[2], r[1], r[0]))
    ]
    table += [
        {"sequence": "Total", "method": m, "variant": v, "below_10s": c.below_10s,
         "below_1_5s": c.below_1_5s, "total_interactions": c.total_interactions}
        for (m, v), c in sorted(counts.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    ]
    files["counts.csv"] = _csv_text(
        ["sequence", "method", "variant", "below_10s", "below_1_5s", "total_interactions"], table
    )
    if len(variants) > 1:
        baseline = variants[0]
        red_rows = []
        for method in methods:
            for variant in variants[1:]:
                r10, r15 = reduction_percentages(counts[(method, baseline)], counts[(method, variant)])
                red_rows.append({"method": method, "baseline": baseline, "variant": variant,
                                 "reduction_10s_pct": r10, "reduction_1_5s_pct": r15})
        files["reductions.csv"] = _csv_text(
            ["method", "baseline", "variant", "reduction_10s_pct", "reduction_1_5s_pct"], red_rows
        )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        (out_dir / name).write_text(text)

    width = max(len(m) for m in methods) + len(max(variants, key=len)) + 1
    print(f"{'method/variant':<{width}}  {'<10s':>6} {'<1.5s':>6} {'total':>6}")
    for (m, v), c in sorted(counts.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"{m + '/' + v:<{width}}  {c.below_10s:>6} {c.below_1_5s:>6} {c.total_interactions:>6}")
    if "reductions.csv" in files:
        for row in csv.DictReader(io.StringIO(files["reductions.csv"])):
            print(f"reduction {row['method']} {row['baseline']}->{row['variant']}: "
                  f"{_pct(row['reduction_10s_pct'])} / {_pct(row['reduction_1_5s_pct'])}")
    return 0


def _pct(cell: str) -> str:
    return "undefined" if cell == "" else f"{float(cell):.2f}%"


METRIC_COLUMNS = ["mota", "motp", "moda", "modp", "mt", "ml", "fp_pct", "fn_pct", "idf1", "idsw", "frag"]


def cmd_metrics(args) -> int:
    gt_seqs = discover_sequences(args.gt)
    pred_seqs = discover_sequences(args.pred)
    if Path(args.gt).is_file() and Path(args.pred).is_file():
        # Two explicit files are compared directly whatever their names.
        pred_seqs = {seq: Path(args.pred) for seq in gt_seqs}
    missing = sorted(set(gt_seqs) - set(pred_seqs))
    if missing:
        print(f"no prediction file for sequence(s): {', '.join(missing)}", file=sys.stderr)
        return 2
    totals = {}
    for seq, gt_path in gt_seqs.items():
        accs = evaluate_sequence(
            read_tracking_labels(gt_path),
            read_tracking_labels(pred_seqs[seq]),
            gate=args.gate_iou,
            cost=args.cost,
            distance_gate=args.gate_distance,
        )
        for name, acc in accs.items():
            totals[name] = totals[name] + acc if name in totals else acc
    reports = {name: metrics(acc).as_dict() for name, acc in totals.items()}
    if args.format == "json":
        _emit(json.dumps(reports, indent=2) + "\n", args.out)
        return 0
    lines = [f"{'class':<11}" + "".join(f"{c.upper():>9}" for c in METRIC_COLUMNS)]
    for name in ["Car", "Pedestrian", "Cyclist", ALL_CLASSES]:
        rep = reports[name]
        cells = []
        for c in METRIC_COLUMNS:
            v = rep[c]
            if v is None:
                cells.append(f"{'-':>9}")
            elif c in ("idsw", "frag"):
                cells.append(f"{v:>9d}")
            elif c in ("fp_pct", "fn_pct"):
                cells.append(f"{v:>9.2f}")
            else:
                cells.append(f"{100 * v:>9.2f}")
        lines.append(f"{name:<11}" + "".join(cells))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_export_cdf(args) -> int:
    path = Path(args.report)
    fmt = "json" if path.suffix == ".json" else "csv"
    _emit(export_cdf_table(parse_report(path.read_text(), fmt)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kittisafety", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-check", help="validate KITTI tracking label files")
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_parse_check)

    p = sub.add_parser("postprocess", help="dump post-processed trajectories")
    _add_pipeline_flags(p)
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("analyze", help="interactions, TTC and severity counts")
    _add_pipeline_flags(p)
    p.add_argument("--method", default=REFERENCE_METHOD, help="label carried into every output row")
    p.add_argument("--reference", help="ground-truth labels to compare against (labelled GroundTruth)")
    p.add_argument("--variant", action="append", choices=["none", "idsplit", "ss", "idsplit+ss"],
                   help="post-processing variant; repeat to compare (first one is the baseline)")
    p.add_argument("--drop-undefined", action="store_true",
                   help="leave out sequences where some method has no TTC_min below 10 s")
    p.add_argument("--emit-series", action="store_true", help="include per-frame TTC series")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("metrics", help="CLEAR MOT metrics")
    p.add_argument("--gt", required=True, help="ground-truth label file or directory")
    p.add_argument("--pred", required=True, help="tracker output file or directory")
    p.add_argument("--gate-iou", type=float, default=0.5)
    p.add_argument("--cost", choices=["iou", "center"], default="iou")
    p.add_argument("--gate-distance", type=float, default=50.0, help="pixel gate for --cost center")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("export-cdf", help="CDF step table from a saved report")
    p.add_argument("--report", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_cdf)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
