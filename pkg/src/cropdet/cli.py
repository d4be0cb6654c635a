"""Command-line entry points.

Subcommands:
    run      replay annotated sequences through the pipeline, write results
    propose  print the crop proposal for one annotated frame
    eval     score a predictions JSONL file against annotations
    bench    run the same sequence with and without crop scheduling

Every tunable has a flag; --config takes a JSON file with the same keys.
Precedence is defaults, then config file, then flags. Outputs split into
deterministic files (detections.jsonl, report.json, pr_curve.csv,
config.json), which are byte-identical for identical seeded runs, and
wall-clock files (timing.jsonl, perf.json), which are not.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .crop_proposal import CropTierConfig, proposal_debug_dump, two_tier_proposal
from .datasets_eval import (
    AnnotationParseError,
    AnnotationSet,
    EvaluationError,
    evaluate_map,
    load_annotations,
    measure_fps,
    parse_annotations,
    write_pr_csv,
)
from .detections import Detection
from .detector_stub import (
    DetectorError,
    ExternalProcessDetector,
    OracleConfig,
    OracleDetector,
)
from .geometry import FrameDims
from .pipeline import (
    Detector,
    FrameProcessingError,
    PipelineConfig,
    detection_from_dict,
    frame_result_to_dict,
    run_replay,
    timing_to_dict,
)
from .temporal_filter import TemporalConfig


class CliError(Exception):
    """User-facing invocation problem; printed without a traceback."""


DEFAULTS: dict = {
    "full_frame_period": 5,
    "full_frame_width": 416,
    "full_frame_height": 416,
    "nms_iou": 0.45,
    "crops_on_refresh": True,
    "full_frame_only": False,
    "temporal_filter": True,
    "conf_genuine": 0.2,
    "conf_floor": 0.001,
    "overlap_min": 0.5,
    "large_k": 3,
    "large_max_width": 448.0,
    "large_max_height": 256.0,
    "large_target_width": 224,
    "large_target_height": 128,
    "small_k": 20,
    "small_max_width": 160.0,
    "small_max_height": 96.0,
    "small_target_width": 160,
    "small_target_height": 96,
    "pad_fraction": 0.10,
    "min_pad_px": 8.0,
    "frame_width": 1920,
    "frame_height": 1080,
    "frames": None,
    "detector": "oracle",
    "external_cmd": None,
    "seed": 0,
    "min_visible_height": 12.0,
    "jitter_fraction": 0.05,
    "base_confidence": 0.85,
    "flicker_prob": 0.0,
    "degraded_confidence": 0.05,
}

# flag value types for keys whose default is None
_FLAG_TYPES = {"frames": int, "external_cmd": str}

_AUTO_FORMATS = {".json": "json", ".txt": "visdrone", ".csv": "darklabel"}


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="JSON", help="config file; flags override it")
    for key, default in DEFAULTS.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            parent.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None)
        else:
            value_type = _FLAG_TYPES.get(key, type(default))
            parent.add_argument(flag, dest=key, type=value_type, default=None)
    return parent


def resolve_config(args: argparse.Namespace) -> dict:
    resolved = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CliError(f"{config_path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise CliError(f"{config_path}: config must be a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise CliError(f"{config_path}: unknown config keys: {', '.join(unknown)}")
        resolved.update(data)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    if not resolved["temporal_filter"]:
        # disabling the filter means nothing below the genuine threshold survives
        resolved["conf_floor"] = resolved["conf_genuine"]
    return resolved


def build_pipeline_config(cfg: dict) -> PipelineConfig:
    large = CropTierConfig(
        name="large",
        k=cfg["large_k"],
        max_width=cfg["large_max_width"],
        max_height=cfg["large_max_height"],
        target_width=cfg["large_target_width"],
        target_height=cfg["large_target_height"],
        pad_fraction=cfg["pad_fraction"],
        min_pad_px=cfg["min_pad_px"],
    )
    small = CropTierConfig(
        name="small",
        k=cfg["small_k"],
        max_width=cfg["small_max_width"],
        max_height=cfg["small_max_height"],
        target_width=cfg["small_target_width"],
        target_height=cfg["small_target_height"],
        pad_fraction=cfg["pad_fraction"],
        min_pad_px=cfg["min_pad_px"],
    )
    temporal = TemporalConfig(
        conf_genuine=cfg["conf_genuine"],
        conf_floor=cfg["conf_floor"],
        overlap_min=cfg["overlap_min"],
    )
    return PipelineConfig(
        full_frame_period=cfg["full_frame_period"],
        full_frame_width=cfg["full_frame_width"],
        full_frame_height=cfg["full_frame_height"],
        large_tier=large,
        small_tier=small,
        temporal=temporal,
        nms_iou=cfg["nms_iou"],
        crops_on_refresh=cfg["crops_on_refresh"],
        full_frame_only=cfg["full_frame_only"],
    )


def build_oracle_config(cfg: dict) -> OracleConfig:
    return OracleConfig(
        rng_seed=cfg["seed"],
        min_visible_height=cfg["min_visible_height"],
        jitter_fraction=cfg["jitter_fraction"],
        base_confidence=cfg["base_confidence"],
        flicker_prob=cfg["flicker_prob"],
        degraded_confidence=cfg["degraded_confidence"],
    )


def load_annotation_file(path: str, fmt: str, cfg: dict) -> AnnotationSet:
    if fmt == "auto":
        suffix = Path(path).suffix.lower()
        fmt = _AUTO_FORMATS.get(suffix)
        if fmt is None:
            raise CliError(
                f"cannot infer annotation format from {path!r}; pass --format explicitly"
            )
    if fmt == "json":
        return load_annotations(path)
    dims = FrameDims(cfg["frame_width"], cfg["frame_height"])
    return parse_annotations(path, fmt, dims)


def make_detector(cfg: dict, annotations: AnnotationSet) -> Detector:
    kind = cfg["detector"]
    if kind == "oracle":
        return OracleDetector(annotations, build_oracle_config(cfg))
    if kind == "external":
        command = cfg["external_cmd"]
        if not command:
            raise CliError("--external-cmd is required with --detector external")
        return ExternalProcessDetector(shlex.split(command))
    raise CliError(f"unknown detector {kind!r} (expected oracle or external)")


def _write_jsonl(path: Path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_json(path: Path, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def run_one_sequence(
    annotations_path: str,
    out_dir: Path,
    cfg: dict,
    fmt: str,
    eval_iou: float = 0.5,
    interpolation: str = "all_point",
) -> dict:
    """Replay one annotated sequence and write the output file set."""
    annotations = load_annotation_file(annotations_path, fmt, cfg)
    if annotations.frame_count == 0:
        raise CliError(f"{annotations_path}: no annotated frames")
    n_frames = cfg["frames"] if cfg["frames"] is not None else annotations.frame_count
    if not 1 <= n_frames <= annotations.frame_count:
        raise CliError(
            f"--frames {n_frames} outside the annotated range 1..{annotations.frame_count}"
        )

    pipeline_cfg = build_pipeline_config(cfg)
    detector = make_detector(cfg, annotations)
    try:
        results = run_replay(detector, pipeline_cfg, annotations.dims, n_frames)
    finally:
        close = getattr(detector, "close", None)
        if close is not None:
            close()

    predictions = {r.frame_index: list(r.detections) for r in results}
    report = evaluate_map(
        predictions, annotations, iou_threshold=eval_iou, interpolation=interpolation
    )
    fps, mean_pixels = measure_fps(results)
    report = replace(report, mean_pixels_per_frame=mean_pixels)

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_jsonl(out_dir / "detections.jsonl", [frame_result_to_dict(r) for r in results])
    _write_jsonl(out_dir / "timing.jsonl", [timing_to_dict(r) for r in results])
    _write_json(out_dir / "report.json", report.to_json_dict())
    write_pr_csv(report, out_dir / "pr_curve.csv")
    _write_json(
        out_dir / "config.json",
        dict(cfg, annotations=str(annotations_path), format=fmt,
             eval_iou=eval_iou, interpolation=interpolation),
    )
    wall_seconds = sum(r.timing.total_s for r in results)
    _write_json(
        out_dir / "perf.json",
        {"fps": fps, "wall_seconds": wall_seconds, "mean_pixels_per_frame": mean_pixels},
    )
    return {
        "sequence": Path(annotations_path).stem,
        "frames": n_frames,
        "mean_ap": report.mean_ap,
        "fps": fps,
        "mean_pixels_per_frame": mean_pixels,
        "out_dir": str(out_dir),
    }


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    paths = args.annotations
    if len(paths) == 1:
        summaries = [run_one_sequence(paths[0], out, cfg, args.format, args.eval_iou, args.interpolation)]
    else:
        stems = [Path(p).stem for p in paths]
        if len(set(stems)) != len(stems):
            raise CliError("annotation files must have distinct basenames for a multi-sequence run")
        jobs = [(p, out / stem) for p, stem in zip(paths, stems)]
        if args.parallel_sequences > 1:
            with ThreadPoolExecutor(max_workers=args.parallel_sequences) as pool:
                futures = [
                    pool.submit(run_one_sequence, p, d, cfg, args.format, args.eval_iou, args.interpolation)
                    for p, d in jobs
                ]
                summaries = [f.result() for f in futures]
        else:
            summaries = [
                run_one_sequence(p, d, cfg, args.format, args.eval_iou, args.interpolation)
                for p, d in jobs
            ]
    for s in summaries:
        print(
            f"{s['sequence']}: mAP {s['mean_ap']:.4f}, fps {s['fps']:.1f}, "
            f"mean px/frame {s['mean_pixels_per_frame']:.0f}, frames {s['frames']}"
        )
    return 0


def cmd_propose(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    annotations = load_annotation_file(args.annotations, args.format, cfg)
    if not 0 <= args.frame < annotations.frame_count:
        raise CliError(
            f"frame {args.frame} outside the annotated range 0..{annotations.frame_count - 1}"
        )
    pipeline_cfg = build_pipeline_config(cfg)
    boxes = [gt.box for gt in annotations.eval_boxes(args.frame)]
    large, small, _ = two_tier_proposal(
        boxes, pipeline_cfg.large_tier, pipeline_cfg.small_tier, annotations.dims
    )
    print(json.dumps(proposal_debug_dump(args.frame, large, small), sort_keys=True, indent=2))
    return 0


def _read_predictions(path: str) -> dict[int, list[Detection]]:
    predictions: dict[int, list[Detection]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                frame = int(row["frame"])
                dets = [detection_from_dict(d) for d in row["detections"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CliError(f"{path}:{lineno}: bad prediction row ({exc})") from exc
            predictions.setdefault(frame, []).extend(dets)
    return predictions


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    annotations = load_annotation_file(args.annotations, args.format, cfg)
    predictions = _read_predictions(args.predictions)
    report = evaluate_map(
        predictions, annotations, iou_threshold=args.eval_iou, interpolation=args.interpolation
    )
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", report.to_json_dict())
        write_pr_csv(report, out / "pr_curve.csv")
    print(json.dumps(report.to_json_dict(), sort_keys=True, indent=2))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    crop_summary = run_one_sequence(
        args.annotations, out / "crop", dict(cfg, full_frame_only=False),
        args.format, args.eval_iou, args.interpolation,
    )
    full_summary = run_one_sequence(
        args.annotations, out / "full_frame", dict(cfg, full_frame_only=True),
        args.format, args.eval_iou, args.interpolation,
    )
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "bench.json", {"crop": crop_summary, "full_frame": full_summary})
    header = f"{'mode':<12} {'mAP':>8} {'fps':>10} {'mean px/frame':>14}"
    print(header)
    print("-" * len(header))
    for name, s in (("crop", crop_summary), ("full_frame", full_summary)):
        print(
            f"{name:<12} {s['mean_ap']:>8.4f} {s['fps']:>10.1f} "
            f"{s['mean_pixels_per_frame']:>14.0f}"
        )
    return 0


def _add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eval-iou", type=float, default=0.5,
                        help="IoU threshold for matching predictions to ground truth")
    parser.add_argument("--interpolation", choices=("all_point", "eleven_point"),
                        default="all_point", help="precision/recall interpolation rule")


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="cropdet", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[parent], help="replay sequences through the pipeline")
    p_run.add_argument("--annotations", nargs="+", required=True, metavar="PATH")
    p_run.add_argument("--format", default="auto",
                       choices=("auto", "visdrone", "darklabel", "json"))
    p_run.add_argument("--out", required=True, metavar="DIR")
    p_run.add_argument("--parallel-sequences", type=int, default=1, metavar="N",
                       help="worker threads when running several sequences")
    _add_eval_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_propose = sub.add_parser("propose", parents=[parent],
                               help="print the crop proposal for one frame")
    p_propose.add_argument("--annotations", required=True, metavar="PATH")
    p_propose.add_argument("--format", default="auto",
                           choices=("auto", "visdrone", "darklabel", "json"))
    p_propose.add_argument("--frame", type=int, default=0)
    p_propose.set_defaults(func=cmd_propose)

    p_eval = sub.add_parser("eval", parents=[parent],
                            help="score a predictions JSONL file against annotations")
    p_eval.add_argument("--annotations", required=True, metavar="PATH")
    p_eval.add_argument("--format", default="auto",
                        choices=("auto", "visdrone", "darklabel", "json"))
    p_eval.add_argument("--predictions", required=True, metavar="JSONL")
    p_eval.add_argument("--out", default=None, metavar="DIR")
    _add_eval_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", parents=[parent],
                             help="compare crop scheduling against full-frame only")
    p_bench.add_argument("--annotations", required=True, metavar="PATH")
    p_bench.add_argument("--format", default="auto",
                         choices=("auto", "visdrone", "darklabel", "json"))
    p_bench.add_argument("--out", required=True, metavar="DIR")
    _add_eval_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        CliError,
        AnnotationParseError,
        EvaluationError,
        DetectorError,
        FrameProcessingError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
