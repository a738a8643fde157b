import numpy as np
import pytest

from thz_envsense.channel import ChannelParams
from thz_envsense.envmap import (
    EncodedMap,
    EncodeParams,
    PriorMap,
    compress_channels,
    compute_weights,
    decode_to_rss,
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
    segment,
)
from thz_envsense.raytrace import RadioMap, compute_rss
from thz_envsense.scenario import GridSpec, rasterize_obstacles

from conftest import make_scene

ENC = EncodeParams(psi_min_dbm=-90.0, psi_max_dbm=-34.0)


def flat_map(grid, value):
    return RadioMap(grid=grid, values_dbm=np.full(grid.shape, float(value)))


def scene_with_maps(seed, params=None):
    params = params or ChannelParams()
    scene = make_scene(seed)
    mask = rasterize_obstacles(scene)
    rss = compute_rss(scene, params)
    enc = default_encode_params(params, scene.grid)
    return scene, mask, rss, enc


class TestEncodeParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            EncodeParams(psi_min_dbm=-90, psi_max_dbm=-34, psi_smin=0.1)
        with pytest.raises(ValueError):
            EncodeParams(psi_min_dbm=-90, psi_max_dbm=-34, psi_smax=1.0)
        with pytest.raises(ValueError):
            EncodeParams(psi_min_dbm=-90, psi_max_dbm=-34, psi_smax=0.0)
        with pytest.raises(ValueError):
            EncodeParams(psi_min_dbm=-34, psi_max_dbm=-90)

    def test_default_window(self, grid, params):
        enc = default_encode_params(params, grid)
        assert enc.psi_min_dbm == params.noise_dbm
        assert -40 < enc.psi_max_dbm < -25
        assert enc.psi_smax == 0.9

    def test_json_round_trip(self):
        doc = encode_params_to_json_dict(ENC)
        assert encode_params_from_json_dict(doc) == ENC


class TestComputeWeights:
    def test_formula_endpoints(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        w_min = compute_weights(flat_map(grid, ENC.psi_min_dbm), mask, ENC).weights
        assert np.all(w_min == 0.0)
        w_max = compute_weights(flat_map(grid, ENC.psi_max_dbm), mask, ENC).weights
        assert np.all(w_max == ENC.psi_smax)

    def test_midpoint(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        w = compute_weights(flat_map(grid, -62.0), mask, ENC).weights
        assert np.all(np.isclose(w, 0.45))

    def test_obstacle_cells_force_one(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        mask[3, 7] = True
        vals = np.full(grid.shape, -50.0)
        vals[3, 7] = np.nan
        w = compute_weights(RadioMap(grid=grid, values_dbm=vals), mask, ENC).weights
        assert w[3, 7] == 1.0
        assert np.all(w[~mask] < 1.0)

    def test_clamps_out_of_range(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        w_low = compute_weights(flat_map(grid, -120.0), mask, ENC).weights
        w_high = compute_weights(flat_map(grid, 0.0), mask, ENC).weights
        assert np.all(w_low == 0.0)
        assert np.all(w_high == ENC.psi_smax)

    def test_strictly_increasing_in_rss(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        levels = np.linspace(ENC.psi_min_dbm, ENC.psi_max_dbm, 25)
        ws = [compute_weights(flat_map(grid, lv), mask, ENC).weights[0, 0] for lv in levels]
        assert np.all(np.diff(ws) > 0)


class TestSamplePrior:
    def test_rate_one_takes_all_free_cells(self):
        scene, mask, rss, enc = scene_with_maps(2)
        prior = sample_prior(rss, mask, 1.0, np.random.default_rng(0))
        assert prior.sensor_cells.size == (~mask).sum()
        assert not np.any(mask.reshape(-1)[prior.sensor_cells])

    def test_sensor_count_rounding(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        mask.reshape(-1)[:104] = True  # 2304 - 104 = 2200 free cells
        rss = flat_map(grid, -60.0)
        prior = sample_prior(rss, mask, 0.5, np.random.default_rng(1))
        assert prior.sensor_cells.size == 1100

    def test_deterministic(self):
        scene, mask, rss, enc = scene_with_maps(5)
        a = sample_prior(rss, mask, 0.5, np.random.default_rng(42))
        b = sample_prior(rss, mask, 0.5, np.random.default_rng(42))
        assert np.array_equal(a.sensor_cells, b.sensor_cells)
        assert np.array_equal(a.values_dbm, b.values_dbm)

    def test_values_copied_from_map(self):
        scene, mask, rss, enc = scene_with_maps(6)
        prior = sample_prior(rss, mask, 0.3, np.random.default_rng(3))
        assert np.array_equal(prior.values_dbm, rss.values_dbm.reshape(-1)[prior.sensor_cells])

    def test_invalid_rate(self):
        scene, mask, rss, enc = scene_with_maps(7)
        with pytest.raises(ValueError):
            sample_prior(rss, mask, 0.0, np.random.default_rng(0))
        with pytest.raises(ValueError):
            sample_prior(rss, mask, 1.5, np.random.default_rng(0))


class TestEncodings:
    def test_complete_is_gray_weights(self):
        scene, mask, rss, enc = scene_with_maps(8)
        img = encode_complete(rss, mask, enc)
        w = compute_weights(rss, mask, enc).weights
        assert np.array_equal(img.channels[0], w)
        assert np.array_equal(img.channels[0], img.channels[1])
        assert np.array_equal(img.channels[0], img.channels[2])
        assert np.all(img.channels[:, mask] == 1.0)

    def test_prior_red_partition(self):
        scene, mask, rss, enc = scene_with_maps(9)
        prior = sample_prior(rss, mask, 0.5, np.random.default_rng(4))
        img = encode_prior(prior, enc)
        sensor = prior.sensor_mask
        c = img.channels
        gray = (c[0] == c[1]) & (c[1] == c[2])
        red = (c[0] == 1.0) & (c[1] == 0.0) & (c[2] == 0.0)
        assert np.all(gray[sensor])
        assert np.all(red[~sensor])
        assert np.all(red[mask])  # no sensors on obstacles

    def test_prior_rate_one_equals_complete_without_obstacles(self, grid, params):
        from thz_envsense.scenario import Scene

        scene = Scene(obstacles=(), bs_xy=grid.center, grid=grid, seed=0)
        mask = np.zeros(grid.shape, dtype=bool)
        rss = compute_rss(scene, params)
        enc = default_encode_params(params, grid)
        prior = sample_prior(rss, mask, 1.0, np.random.default_rng(5))
        assert np.array_equal(encode_prior(prior, enc).channels,
                              encode_complete(rss, mask, enc).channels)

    def test_sensor_at_max_encodes_smax(self, grid):
        prior = PriorMap(grid=grid, sensor_cells=np.array([7]),
                         values_dbm=np.array([ENC.psi_max_dbm]), sampling_rate=0.01)
        img = encode_prior(prior, ENC)
        assert img.channels[0].reshape(-1)[7] == ENC.psi_smax


class TestCompressSegment:
    def test_gray_round_trip(self):
        rng = np.random.default_rng(0)
        g = GridSpec(n_rows=6, n_cols=5)
        w = rng.uniform(0, 1, g.shape)
        img = EncodedMap(grid=g, channels=np.stack([w, w, w]))
        assert np.allclose(compress_channels(img), w, atol=1e-15)

    def test_red_compresses_to_third(self, grid):
        c = np.zeros((3, *grid.shape))
        c[0] = 1.0
        assert np.allclose(compress_channels(c), 1.0 / 3.0)

    def test_compress_of_complete_is_weight_map(self):
        scene, mask, rss, enc = scene_with_maps(10)
        w = compute_weights(rss, mask, enc).weights
        got = compress_channels(encode_complete(rss, mask, enc))
        # (w + w + w) / 3 can wobble by one ulp; obstacle cells stay exact.
        assert np.max(np.abs(got - w)) <= 4e-16
        assert np.all(got[mask] == 1.0)

    def test_segment_band(self):
        vals = np.array([[0.0, 0.5, 0.9], [0.9000001, 0.95, 1.0]])
        got = segment(vals, ENC)
        assert np.array_equal(got, np.array([[False, False, False], [True, True, True]]))

    def test_exact_threshold_not_segmented(self):
        vals = np.full((2, 2), ENC.psi_smax)
        assert not segment(vals, ENC).any()

    def test_all_zeros_empty(self):
        assert not segment(np.zeros((4, 4)), ENC).any()

    def test_segment_recovers_mask_through_pipeline(self):
        for seed in range(8):
            scene, mask, rss, enc = scene_with_maps(seed)
            got = segment(compress_channels(encode_complete(rss, mask, enc)), enc)
            assert np.array_equal(got, mask)


class TestDecode:
    def test_round_trip_identity(self):
        scene, mask, rss, enc = scene_with_maps(11)
        prior = sample_prior(rss, mask, 1.0, np.random.default_rng(6))
        img = encode_complete(rss, mask, enc)
        decoded = decode_to_rss(img, prior, enc)
        assert np.array_equal(np.isnan(decoded.values_dbm), mask)
        free = ~mask
        clamped = np.clip(rss.values_dbm[free], enc.psi_min_dbm, enc.psi_max_dbm)
        assert np.max(np.abs(decoded.values_dbm[free] - clamped)) < 1e-6

    def test_sensor_replacement_wins(self):
        scene, mask, rss, enc = scene_with_maps(12)
        prior = sample_prior(rss, mask, 0.4, np.random.default_rng(7))
        junk = np.full((3, *scene.grid.shape), 0.42)
        decoded = decode_to_rss(junk, prior, enc)
        flat = decoded.values_dbm.reshape(-1)
        assert np.array_equal(flat[prior.sensor_cells], prior.values_dbm)

    def test_gray_smax_decodes_to_psi_max(self, grid):
        prior = PriorMap(grid=grid, sensor_cells=np.array([0]),
                         values_dbm=np.array([-70.0]), sampling_rate=0.001)
        img = np.full((3, *grid.shape), ENC.psi_smax)
        decoded = decode_to_rss(img, prior, ENC)
        assert decoded.values_dbm[10, 10] == pytest.approx(ENC.psi_max_dbm, abs=1e-9)

    def test_segmented_cells_become_blocked(self, grid):
        prior = PriorMap(grid=grid, sensor_cells=np.array([0]),
                         values_dbm=np.array([-70.0]), sampling_rate=0.001)
        img = np.full((3, *grid.shape), 0.2)
        img[:, 5, 5] = 1.0
        decoded = decode_to_rss(img, prior, ENC)
        assert np.isnan(decoded.values_dbm[5, 5])
        assert not np.isnan(decoded.values_dbm[6, 6])


class TestBytes:
    def test_encoded_round_trip_exact_for_f32_values(self):
        scene, mask, rss, enc = scene_with_maps(13)
        img = encode_complete(rss, mask, enc)
        restored = encoded_from_bytes(encoded_to_bytes(img), scene.grid)
        assert np.max(np.abs(restored.channels - img.channels)) < 1e-7

    def test_prior_parts_round_trip(self):
        scene, mask, rss, enc = scene_with_maps(14)
        prior = sample_prior(rss, mask, 0.5, np.random.default_rng(8))
        restored = prior_from_parts(prior_to_json(prior), prior_values_to_bytes(prior), scene.grid)
        assert np.array_equal(restored.sensor_cells, prior.sensor_cells)
        assert np.max(np.abs(restored.values_dbm - prior.values_dbm)) < 1e-5
        assert restored.sampling_rate == prior.sampling_rate

    def test_bad_length_rejected(self, grid):
        with pytest.raises(ValueError):
            encoded_from_bytes(b"\x00" * 12, grid)
