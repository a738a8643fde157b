"""Command-line interface.

Subcommands: ``generate`` builds a corpus, ``baseline`` completes priors
with a non-learning estimator, ``evaluate`` scores 3-channel predictions
from any producer against a corpus, ``render`` writes PNG views.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import baselines
from .channel import ChannelParams, channel_from_json_dict
from .dataset import (
    DatasetError,
    DatasetManifest,
    GenerateConfig,
    LoadedRecord,
    generate_dataset,
    load_manifest,
    load_record,
)
from .envmap import (
    compress_channels,
    compute_weights,
    decode_to_rss,
    encode_complete,
    encoded_from_bytes,
    encoded_to_bytes,
    segment,
)
from .metrics import (
    EvalReport,
    SceneEval,
    average_precision,
    extract_detections,
    mask_components,
    weighted_mse,
)
from .raytrace import RadioMap
from .scenario import GridSpec, ScenarioConfig


class UsageError(ValueError):
    """Bad flags or config; maps to exit code 2."""


def _parse_counts(text: str) -> tuple[int, ...]:
    text = text.strip()
    try:
        if "-" in text:
            lo, hi = text.split("-")
            counts = tuple(range(int(lo), int(hi) + 1))
        elif "," in text:
            counts = tuple(int(t) for t in text.split(","))
        else:
            counts = (int(text),)
    except ValueError as exc:
        raise UsageError(f"cannot parse --counts value {text!r} (use A-B, A,B,C, or N)") from exc
    if not counts or any(c < 0 for c in counts):
        raise UsageError(f"invalid obstacle counts {text!r}")
    return counts


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc


def _build_generate_config(args) -> GenerateConfig:
    if args.n <= 0:
        raise UsageError("--n must be a positive scene count")
    if not (0.0 < args.rate <= 1.0):
        raise UsageError("--rate must be in (0, 1]")
    cfg_doc = _load_config_file(args.config)

    grid_doc = cfg_doc.get("grid", {})
    grid = GridSpec(
        n_rows=grid_doc.get("rows", 48),
        n_cols=grid_doc.get("cols", 48),
        area_length_m=grid_doc.get("length_m", 16.0),
        area_width_m=grid_doc.get("width_m", 20.0),
    )
    scen_doc = cfg_doc.get("scenario", {})
    scenario = ScenarioConfig(
        obstacle_count_choices=_parse_counts(args.counts) if args.counts
        else tuple(scen_doc.get("obstacle_count_choices", (1, 2, 3, 4, 5))),
        size_range_m=tuple(scen_doc.get("size_range_m", (0.75, 2.0))),
        margin_m=scen_doc.get("margin_m", 0.5),
    )
    channel = channel_from_json_dict({
        "carrier_hz": 3.0e11,
        "beamwidth_deg": 20.0,
        "tx_power_dbm": 30.0,
        "noise_dbm": -90.0,
        "absorption_per_m": 0.0033,
        "reflection_loss_db": 10.0,
        "diffraction_loss_db": 25.0,
        "beam_boresight_deg": 0.0,
        "sidelobe_gain_db": -20.0,
        **cfg_doc.get("channel", {}),
    })
    if args.boresight_deg is not None:
        channel = replace(channel, beam_boresight_rad=math.radians(args.boresight_deg))

    encode = None
    if "encode" in cfg_doc or args.psi_smax is not None:
        from .envmap import default_encode_params, encode_params_from_json_dict

        if "encode" in cfg_doc:
            encode = encode_params_from_json_dict(cfg_doc["encode"])
            if args.psi_smax is not None:
                encode = replace(encode, psi_smax=args.psi_smax)
        else:
            encode = default_encode_params(channel, grid, psi_smax=args.psi_smax)

    return GenerateConfig(
        n_scenes=args.n,
        master_seed=args.seed,
        split=args.split,
        grid=grid,
        scenario=scenario,
        channel=channel,
        encode=encode,
        sampling_rate=args.rate,
        randomize_boresight=args.randomize_boresight,
        workers=args.threads,
    )


def cmd_generate(args) -> int:
    cfg = _build_generate_config(args)
    started = time.perf_counter()
    manifest = generate_dataset(cfg, args.out)
    elapsed = time.perf_counter() - started
    print(f"wrote {manifest.n_scenes} records to {args.out} "
          f"(split={manifest.split}, rate={manifest.sampling_rate}, seed={manifest.master_seed}, "
          f"{elapsed:.1f}s, {manifest.n_scenes / elapsed:.1f} scenes/s)")
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    if args.render:
        out = Path(args.out) / "png"
        for rec in manifest.records[: args.render]:
            record = load_record(manifest, rec.scene_id, args.out)
            _render_record(record, manifest, out, scale=args.scale, pred_dir=None)
        print(f"rendered {min(args.render, len(manifest.records))} scenes to {out}")
    return 0


def _truth_unit(record: LoadedRecord, manifest: DatasetManifest) -> np.ndarray:
    return compute_weights(record.truth, record.mask, manifest.encode).weights


def evaluate_predictions(dataset_dir, pred_dir, iou_threshold: float = 0.5) -> EvalReport:
    """Score gen_{id}.f32 predictions in pred_dir against the corpus."""
    manifest = load_manifest(dataset_dir)
    enc = manifest.encode
    pred = Path(pred_dir)

    per_scene: list[SceneEval] = []
    detections = []
    ground_truth = []
    for rec in manifest.records:
        gen_path = pred / f"gen_{rec.scene_id:06d}.f32"
        if not gen_path.exists():
            raise DatasetError(f"missing prediction for scene id {rec.scene_id}: {gen_path}")
        record = load_record(manifest, rec.scene_id, dataset_dir)
        gen = encoded_from_bytes(gen_path.read_bytes(), manifest.grid)

        truth_w = _truth_unit(record, manifest)
        aware = decode_to_rss(gen, record.prior, enc)
        aware_w = compute_weights(aware, aware.blocked_mask, enc).weights
        mse = weighted_mse(truth_w, aware_w, truth_w)

        compressed = compress_channels(gen)
        detections.append(extract_detections(compressed, enc))
        ground_truth.append(mask_components(record.mask))
        per_scene.append(SceneEval(scene_id=f"{rec.scene_id:06d}", mse=mse))

    ap, counts = average_precision(detections, ground_truth, iou_threshold)
    for entry, (tp, fp, fn) in zip(per_scene, counts):
        entry.tp, entry.fp, entry.fn = tp, fp, fn
    return EvalReport(
        weighted_mse=float(np.mean([s.mse for s in per_scene])) if per_scene else 0.0,
        ap=ap,
        iou_threshold=iou_threshold,
        per_scene=per_scene,
    )


def run_baseline(dataset_dir, method: str, power: float, out_dir) -> Path:
    """Complete every prior and write gen_{id}.f32 files; returns the directory."""
    manifest = load_manifest(dataset_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    no_obstacles = np.zeros(manifest.grid.shape, dtype=bool)
    for rec in manifest.records:
        record = load_record(manifest, rec.scene_id, dataset_dir)
        if method == "nn":
            filled = baselines.nearest_neighbor_fill(record.prior)
        else:
            filled = baselines.idw_fill(record.prior, power=power)
        enc_map = encode_complete(filled, no_obstacles, manifest.encode)
        (out / f"gen_{rec.scene_id:06d}.f32").write_bytes(encoded_to_bytes(enc_map))
    return out


def cmd_baseline(args) -> int:
    out = Path(args.out) if args.out else Path(args.data) / f"baseline_{args.method}"
    run_baseline(args.data, args.method, args.power, out)
    report = evaluate_predictions(args.data, out, args.iou)
    report_path = out / "report.json"
    report_path.write_text(report.to_json())
    print(f"method={args.method} weighted_mse={report.weighted_mse:.6g} "
          f"ap@{report.iou_threshold}={report.ap:.4f} n_scenes={report.n_scenes}")
    print(f"report: {report_path}")
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_predictions(args.data, args.pred, args.iou)
    out = Path(args.out) if args.out else Path(args.pred) / "report.json"
    out.write_text(report.to_json())
    print(f"weighted_mse={report.weighted_mse:.6g} ap@{report.iou_threshold}={report.ap:.4f} "
          f"n_scenes={report.n_scenes}")
    print(f"report: {out}")
    return 0


def _to_png(rgb: np.ndarray, path: Path, scale: int) -> None:
    img = np.kron(rgb, np.ones((scale, scale, 1))).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, mode="RGB").save(path)


def _gray_rgb(unit: np.ndarray) -> np.ndarray:
    g = np.clip(np.round(unit * 255.0), 0, 255)
    return np.stack([g, g, g], axis=-1)


def _channels_rgb(channels: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.moveaxis(channels, 0, -1) * 255.0), 0, 255)


def _render_record(record: LoadedRecord, manifest: DatasetManifest, out_dir: Path,
                   scale: int, pred_dir) -> None:
    sid = f"{record.info.scene_id:06d}"
    _to_png(_channels_rgb(record.enc_complete.channels), out_dir / f"truth_{sid}.png", scale)
    _to_png(_channels_rgb(record.enc_prior.channels), out_dir / f"prior_{sid}.png", scale)
    if pred_dir is not None:
        gen_path = Path(pred_dir) / f"gen_{sid}.f32"
        if not gen_path.exists():
            raise DatasetError(f"missing prediction for scene id {record.info.scene_id}: {gen_path}")
        gen = encoded_from_bytes(gen_path.read_bytes(), manifest.grid)
        compressed = compress_channels(gen)
        _to_png(_gray_rgb(compressed), out_dir / f"aware_{sid}.png", scale)
        # Sensing errors (mask mismatches) in red over the truth image.
        pred_mask = segment(compressed, manifest.encode)
        overlay = _gray_rgb(compress_channels(record.enc_complete.channels))
        wrong = pred_mask != record.mask
        overlay[wrong] = [255.0, 0.0, 0.0]
        _to_png(overlay, out_dir / f"error_{sid}.png", scale)


def cmd_render(args) -> int:
    manifest = load_manifest(args.data)
    ids = args.scene_ids or [r.scene_id for r in manifest.records[: args.limit]]
    out = Path(args.out) if args.out else Path(args.data) / "png"
    for sid in ids:
        record = load_record(manifest, sid, args.data)
        _render_record(record, manifest, out, scale=args.scale, pred_dir=args.pred)
    print(f"rendered {len(ids)} scenes to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thz-envsense",
                                     description="THz radio-environment simulator and benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a corpus of ray-traced scenes")
    gen.add_argument("--out", required=True, help="output dataset directory")
    gen.add_argument("--n", type=int, required=True, help="number of scenes")
    gen.add_argument("--counts", default=None, help="obstacle counts: A-B, A,B,C, or N")
    gen.add_argument("--rate", type=float, default=0.5, help="sensor sampling rate")
    gen.add_argument("--seed", type=int, default=0, help="master seed")
    gen.add_argument("--split", default="train", choices=("train", "test"))
    gen.add_argument("--config", default=None, help="JSON config file (flags win)")
    gen.add_argument("--psi-smax", dest="psi_smax", type=float, default=None)
    gen.add_argument("--boresight-deg", dest="boresight_deg", type=float, default=None)
    gen.add_argument("--randomize-boresight", action="store_true")
    gen.add_argument("--threads", type=int, default=None, help="worker processes")
    gen.add_argument("--render", type=int, default=0, metavar="N",
                     help="also render the first N scenes to PNG")
    gen.add_argument("--scale", type=int, default=8, help="PNG upscale factor")
    gen.set_defaults(func=cmd_generate)

    base = sub.add_parser("baseline", help="complete priors with a reference estimator")
    base.add_argument("--data", required=True, help="dataset directory")
    base.add_argument("--method", required=True, choices=("nn", "idw"))
    base.add_argument("--power", type=float, default=2.0, help="IDW exponent")
    base.add_argument("--iou", type=float, default=0.5)
    base.add_argument("--out", default=None, help="prediction output directory")
    base.set_defaults(func=cmd_baseline)

    ev = sub.add_parser("evaluate", help="score gen_*.f32 predictions against a corpus")
    ev.add_argument("--data", required=True, help="dataset directory")
    ev.add_argument("--pred", required=True, help="directory with gen_{id}.f32 files")
    ev.add_argument("--iou", type=float, default=0.5)
    ev.add_argument("--out", default=None, help="report path (default <pred>/report.json)")
    ev.set_defaults(func=cmd_evaluate)

    ren = sub.add_parser("render", help="write PNG views of scenes")
    ren.add_argument("--data", required=True)
    ren.add_argument("--pred", default=None, help="optional prediction directory")
    ren.add_argument("--out", default=None)
    ren.add_argument("--scene-ids", dest="scene_ids", type=int, nargs="*", default=None)
    ren.add_argument("--limit", type=int, default=4)
    ren.add_argument("--scale", type=int, default=8)
    ren.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: placement, I/O
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
