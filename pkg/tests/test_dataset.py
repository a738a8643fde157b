import json
from pathlib import Path

import numpy as np
import pytest

from thz_envsense.channel import ChannelParams
from thz_envsense.dataset import (
    CorruptRecordError,
    DatasetError,
    GenerateConfig,
    VersionMismatchError,
    build_record,
    config_from_manifest,
    generate_dataset,
    load_manifest,
    load_record,
    record_seed,
)
from thz_envsense.scenario import GridSpec, ScenarioConfig


def small_cfg(n=5, seed=11, **kw):
    defaults = dict(
        n_scenes=n,
        master_seed=seed,
        grid=GridSpec(n_rows=24, n_cols=24),
        scenario=ScenarioConfig(obstacle_count_choices=(1, 2, 3)),
        channel=ChannelParams(),
        sampling_rate=0.5,
        workers=1,
    )
    defaults.update(kw)
    return GenerateConfig(**defaults)


def read_all_bytes(root: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir()) if p.is_file()}


class TestGenerate:
    def test_layout_and_manifest(self, tmp_path):
        cfg = small_cfg()
        manifest = generate_dataset(cfg, tmp_path)
        assert (tmp_path / "manifest.json").exists()
        assert len(manifest.records) == 5
        for rec in manifest.records:
            for name in rec.files.values():
                assert (tmp_path / name).exists()
        doc = json.loads((tmp_path / "manifest.json").read_text())
        assert doc["version"] == "1"
        assert doc["n_scenes"] == 5

    def test_forced_obstacle_count(self, tmp_path):
        cfg = small_cfg(scenario=ScenarioConfig(obstacle_count_choices=(6,)))
        manifest = generate_dataset(cfg, tmp_path)
        for rec in manifest.records:
            record = load_record(manifest, rec.scene_id, tmp_path)
            assert len(record.scene.obstacles) == 6

    def test_regeneration_is_byte_identical(self, tmp_path):
        cfg = small_cfg()
        generate_dataset(cfg, tmp_path / "a")
        manifest = load_manifest(tmp_path / "a")
        generate_dataset(config_from_manifest(manifest, workers=1), tmp_path / "b")
        a = read_all_bytes(tmp_path / "a")
        b = read_all_bytes(tmp_path / "b")
        assert a.keys() == b.keys()
        for name in a:
            assert a[name] == b[name], name

    def test_parallel_generation_matches_serial(self, tmp_path):
        cfg = small_cfg(n=6)
        generate_dataset(cfg, tmp_path / "serial")
        generate_dataset(small_cfg(n=6, workers=2), tmp_path / "par")
        a = read_all_bytes(tmp_path / "serial")
        b = read_all_bytes(tmp_path / "par")
        assert a == b

    def test_per_record_seeds_differ_and_are_stable(self):
        seeds = [record_seed(11, i) for i in range(10)]
        assert len(set(seeds)) == 10
        assert seeds == [record_seed(11, i) for i in range(10)]

    def test_randomized_boresight_recorded(self, tmp_path):
        cfg = small_cfg(randomize_boresight=True)
        manifest = generate_dataset(cfg, tmp_path)
        degs = [rec.boresight_deg for rec in manifest.records]
        assert len(set(degs)) > 1
        assert all(0.0 <= d < 360.0 for d in degs)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            small_cfg(n=0)
        with pytest.raises(ValueError):
            small_cfg(sampling_rate=0.0)


class TestLoad:
    def test_round_trip_matches_memory(self, tmp_path):
        cfg = small_cfg()
        manifest = generate_dataset(cfg, tmp_path)
        for rec in manifest.records[:2]:
            info, scene, truth, mask, prior, enc_c, enc_p = build_record(cfg, rec.scene_id)
            loaded = load_record(manifest, rec.scene_id, tmp_path)
            assert np.array_equal(loaded.mask, mask)
            for oa, ob in zip(loaded.scene.obstacles, scene.obstacles):
                assert np.array_equal(oa.vertices, ob.vertices)
            assert np.array_equal(loaded.prior.sensor_cells, prior.sensor_cells)
            ok = ~mask
            assert np.max(np.abs(loaded.truth.values_dbm[ok] - truth.values_dbm[ok])) <= 1e-5
            assert np.max(np.abs(loaded.enc_complete.channels - enc_c.channels)) < 1e-7
            assert np.max(np.abs(loaded.enc_prior.channels - enc_p.channels)) < 1e-7

    def test_unknown_scene_id(self, tmp_path):
        manifest = generate_dataset(small_cfg(), tmp_path)
        with pytest.raises(DatasetError):
            load_record(manifest, 999, tmp_path)

    def test_truncated_file_detected(self, tmp_path):
        manifest = generate_dataset(small_cfg(), tmp_path)
        victim = tmp_path / manifest.records[0].files["truth"]
        victim.write_bytes(victim.read_bytes()[:-8])
        with pytest.raises(CorruptRecordError):
            load_record(manifest, 0, tmp_path)

    def test_missing_file_detected(self, tmp_path):
        manifest = generate_dataset(small_cfg(), tmp_path)
        (tmp_path / manifest.records[1].files["mask"]).unlink()
        with pytest.raises(CorruptRecordError):
            load_record(manifest, 1, tmp_path)

    def test_version_mismatch(self, tmp_path):
        generate_dataset(small_cfg(), tmp_path)
        doc = json.loads((tmp_path / "manifest.json").read_text())
        doc["version"] = "999"
        (tmp_path / "manifest.json").write_text(json.dumps(doc))
        with pytest.raises(VersionMismatchError):
            load_manifest(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError):
            load_manifest(tmp_path / "nowhere")
