"""Reproducible corpus generation and loading.

Each record derives its own seed from (master_seed, scene_id) via
numpy's SeedSequence, so records can be regenerated independently and in
any order. All record files are written before the manifest; the manifest
acts as the completion marker.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import ChannelParams, channel_from_json_dict, channel_to_json_dict
from .envmap import (
    EncodeParams,
    EncodedMap,
    PriorMap,
    default_encode_params,
    encode_complete,
    encode_params_from_json_dict,
    encode_params_to_json_dict,
    encode_prior,
    encoded_from_bytes,
    encoded_to_bytes,
    prior_from_parts,
    prior_to_json,
    prior_values_to_bytes,
    sample_prior,
)
from .raytrace import RadioMap, compute_rss, radiomap_from_bytes, radiomap_to_bytes
from .scenario import (
    GridSpec,
    Scene,
    ScenarioConfig,
    rasterize_obstacles,
    sample_scene,
    scene_from_json,
    scene_to_json,
)

FORMAT_VERSION = "1"
THREADS_ENV = "THZ_ENVSENSE_THREADS"


class DatasetError(RuntimeError):
    pass


class CorruptRecordError(DatasetError):
    pass


class VersionMismatchError(DatasetError):
    pass


@dataclass(frozen=True)
class GenerateConfig:
    n_scenes: int
    master_seed: int
    split: str = "train"
    grid: GridSpec = GridSpec()
    scenario: ScenarioConfig = ScenarioConfig()
    channel: ChannelParams = ChannelParams()
    encode: EncodeParams | None = None
    sampling_rate: float = 0.5
    randomize_boresight: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.n_scenes <= 0:
            raise ValueError("n_scenes must be positive")
        if not (0.0 < self.sampling_rate <= 1.0):
            raise ValueError("sampling_rate must be in (0, 1]")

    def resolved_encode(self) -> EncodeParams:
        if self.encode is not None:
            return self.encode
        return default_encode_params(self.channel, self.grid)


@dataclass(frozen=True)
class RecordInfo:
    scene_id: int
    seed: int
    boresight_deg: float
    files: dict[str, str]


@dataclass(frozen=True)
class DatasetManifest:
    version: str
    split: str
    n_scenes: int
    master_seed: int
    sampling_rate: float
    randomize_boresight: bool
    grid: GridSpec
    scenario: ScenarioConfig
    channel: ChannelParams
    encode: EncodeParams
    records: tuple[RecordInfo, ...]


def record_seed(master_seed: int, scene_id: int) -> int:
    """Stable per-record seed derived from the master seed."""
    seq = np.random.SeedSequence((master_seed, scene_id))
    return int(seq.generate_state(1, np.uint64)[0])


def _record_filenames(scene_id: int) -> dict[str, str]:
    sid = f"{scene_id:06d}"
    return {
        "scene": f"scene_{sid}.json",
        "truth": f"truth_{sid}.f32",
        "mask": f"mask_{sid}.u8",
        "prior_meta": f"prior_{sid}.json",
        "prior_values": f"prior_{sid}.f32",
        "enc_complete": f"enc_complete_{sid}.f32",
        "enc_prior": f"enc_prior_{sid}.f32",
    }


def build_record(cfg: GenerateConfig, scene_id: int):
    """Run the full per-scene pipeline in memory."""
    seed = record_seed(cfg.master_seed, scene_id)
    rng = np.random.default_rng(seed)
    params = cfg.channel
    if cfg.randomize_boresight:
        params = replace(params, beam_boresight_rad=float(rng.uniform(0.0, 2.0 * np.pi)))
    scene = sample_scene(cfg.scenario, cfg.grid, rng=rng, seed=seed)
    mask = rasterize_obstacles(scene)
    truth = compute_rss(scene, params)
    enc = cfg.resolved_encode()
    prior = sample_prior(truth, mask, cfg.sampling_rate, rng)
    enc_c = encode_complete(truth, mask, enc)
    enc_p = encode_prior(prior, enc)
    info = RecordInfo(
        scene_id=scene_id,
        seed=seed,
        boresight_deg=math.degrees(params.beam_boresight_rad),
        files=_record_filenames(scene_id),
    )
    return info, scene, truth, mask, prior, enc_c, enc_p


def _write_record(cfg: GenerateConfig, scene_id: int, out_dir: str) -> RecordInfo:
    info, scene, truth, mask, prior, enc_c, enc_p = build_record(cfg, scene_id)
    out = Path(out_dir)
    written: list[Path] = []
    try:
        payloads = {
            "scene": scene_to_json(scene).encode(),
            "truth": radiomap_to_bytes(truth),
            "mask": mask.astype(np.uint8).tobytes(order="C"),
            "prior_meta": prior_to_json(prior).encode(),
            "prior_values": prior_values_to_bytes(prior),
            "enc_complete": encoded_to_bytes(enc_c),
            "enc_prior": encoded_to_bytes(enc_p),
        }
        for key, data in payloads.items():
            path = out / info.files[key]
            path.write_bytes(data)
            written.append(path)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return info


def generate_dataset(cfg: GenerateConfig, out_dir) -> DatasetManifest:
    """Generate all records, then write manifest.json as completion marker."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = cfg.workers
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = max(1, min(workers, cfg.n_scenes))

    ids = list(range(cfg.n_scenes))
    if workers == 1:
        records = [_write_record(cfg, sid, str(out)) for sid in ids]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_write_record, [cfg] * len(ids), ids,
                                    [str(out)] * len(ids), chunksize=8))
    records.sort(key=lambda r: r.scene_id)

    manifest = DatasetManifest(
        version=FORMAT_VERSION,
        split=cfg.split,
        n_scenes=cfg.n_scenes,
        master_seed=cfg.master_seed,
        sampling_rate=cfg.sampling_rate,
        randomize_boresight=cfg.randomize_boresight,
        grid=cfg.grid,
        scenario=cfg.scenario,
        channel=cfg.channel,
        encode=cfg.resolved_encode(),
        records=tuple(records),
    )
    (out / "manifest.json").write_text(manifest_to_json(manifest))
    return manifest


def manifest_to_json(manifest: DatasetManifest) -> str:
    doc = {
        "version": manifest.version,
        "split": manifest.split,
        "n_scenes": manifest.n_scenes,
        "master_seed": manifest.master_seed,
        "sampling_rate": manifest.sampling_rate,
        "randomize_boresight": manifest.randomize_boresight,
        "grid": {
            "rows": manifest.grid.n_rows,
            "cols": manifest.grid.n_cols,
            "length_m": manifest.grid.area_length_m,
            "width_m": manifest.grid.area_width_m,
        },
        "scenario": {
            "obstacle_count_choices": list(manifest.scenario.obstacle_count_choices),
            "size_range_m": list(manifest.scenario.size_range_m),
            "margin_m": manifest.scenario.margin_m,
            "max_attempts": manifest.scenario.max_attempts,
        },
        "channel": channel_to_json_dict(manifest.channel),
        "encode": encode_params_to_json_dict(manifest.encode),
        "records": [
            {
                "scene_id": r.scene_id,
                "seed": r.seed,
                "boresight_deg": r.boresight_deg,
                "files": r.files,
            }
            for r in manifest.records
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def manifest_from_json(text: str) -> DatasetManifest:
    doc = json.loads(text)
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"manifest version {doc.get('version')!r}, expected {FORMAT_VERSION!r}"
        )
    grid = GridSpec(
        n_rows=doc["grid"]["rows"],
        n_cols=doc["grid"]["cols"],
        area_length_m=doc["grid"]["length_m"],
        area_width_m=doc["grid"]["width_m"],
    )
    scenario = ScenarioConfig(
        obstacle_count_choices=tuple(doc["scenario"]["obstacle_count_choices"]),
        size_range_m=tuple(doc["scenario"]["size_range_m"]),
        margin_m=doc["scenario"]["margin_m"],
        max_attempts=doc["scenario"]["max_attempts"],
    )
    records = tuple(
        RecordInfo(
            scene_id=r["scene_id"],
            seed=r["seed"],
            boresight_deg=r["boresight_deg"],
            files=r["files"],
        )
        for r in doc["records"]
    )
    return DatasetManifest(
        version=doc["version"],
        split=doc["split"],
        n_scenes=doc["n_scenes"],
        master_seed=doc["master_seed"],
        sampling_rate=doc["sampling_rate"],
        randomize_boresight=doc["randomize_boresight"],
        grid=grid,
        scenario=scenario,
        channel=channel_from_json_dict(doc["channel"]),
        encode=encode_params_from_json_dict(doc["encode"]),
        records=records,
    )


def load_manifest(dataset_dir) -> DatasetManifest:
    path = Path(dataset_dir) / "manifest.json"
    if not path.exists():
        raise DatasetError(f"no manifest.json under {dataset_dir}")
    return manifest_from_json(path.read_text())


def config_from_manifest(manifest: DatasetManifest, workers: int | None = None) -> GenerateConfig:
    return GenerateConfig(
        n_scenes=manifest.n_scenes,
        master_seed=manifest.master_seed,
        split=manifest.split,
        grid=manifest.grid,
        scenario=manifest.scenario,
        channel=manifest.channel,
        encode=manifest.encode,
        sampling_rate=manifest.sampling_rate,
        randomize_boresight=manifest.randomize_boresight,
        workers=workers,
    )


@dataclass(frozen=True)
class LoadedRecord:
    info: RecordInfo
    scene: Scene
    truth: RadioMap
    mask: np.ndarray
    prior: PriorMap
    enc_complete: EncodedMap
    enc_prior: EncodedMap


def _read(path: Path) -> bytes:
    if not path.exists():
        raise CorruptRecordError(f"missing record file {path}")
    return path.read_bytes()


def load_record(manifest: DatasetManifest, scene_id: int, dataset_dir) -> LoadedRecord:
    base = Path(dataset_dir)
    matches = [r for r in manifest.records if r.scene_id == scene_id]
    if not matches:
        raise DatasetError(f"scene id {scene_id} not in manifest")
    info = matches[0]
    grid = manifest.grid
    try:
        scene = scene_from_json(_read(base / info.files["scene"]).decode())
        truth = radiomap_from_bytes(_read(base / info.files["truth"]), grid)
        mask_raw = np.frombuffer(_read(base / info.files["mask"]), dtype=np.uint8)
        if mask_raw.size != grid.n_cells:
            raise ValueError(f"expected {grid.n_cells} mask bytes, got {mask_raw.size}")
        mask = mask_raw.reshape(grid.shape).astype(bool)
        prior = prior_from_parts(
            _read(base / info.files["prior_meta"]).decode(),
            _read(base / info.files["prior_values"]),
            grid,
        )
        enc_c = encoded_from_bytes(_read(base / info.files["enc_complete"]), grid)
        enc_p = encoded_from_bytes(_read(base / info.files["enc_prior"]), grid)
    except (ValueError, json.JSONDecodeError) as exc:
        raise CorruptRecordError(f"record {scene_id}: {exc}") from exc
    return LoadedRecord(info=info, scene=scene, truth=truth, mask=mask, prior=prior,
                        enc_complete=enc_c, enc_prior=enc_p)
