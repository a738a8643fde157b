"""Unit-interval encodings of RSS maps and their inverses.

RSS in dBm is clamped to a global [psi_min, psi_max] window and mapped
affinely into [0, psi_smax]; obstacle cells encode to exactly 1, reserving
(psi_smax, 1] as the obstacle band. Complete maps become 3-channel
grayscale images; sparse prior maps paint unknown cells pure red [1, 0, 0].
Segmentation and decoding invert the construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, free_space_gain, from_dbm, to_dbm
from .raytrace import RadioMap
from .scenario import GridSpec


@dataclass(frozen=True)
class EncodeParams:
    psi_min_dbm: float
    psi_max_dbm: float
    psi_smin: float = 0.0
    psi_smax: float = 0.9

    def __post_init__(self):
        if self.psi_smin != 0.0:
            raise ValueError("psi_smin is fixed at 0")
        if not (self.psi_smin < self.psi_smax < 1.0):
            raise ValueError("need 0 = psi_smin < psi_smax < 1")
        if not self.psi_min_dbm < self.psi_max_dbm:
            raise ValueError("psi_min_dbm must be below psi_max_dbm")


def default_encode_params(params: ChannelParams, grid: GridSpec, psi_smax: float = 0.9) -> EncodeParams:
    """Corpus-level normalization window.

    Floor at the noise level; ceiling at the boresight RSS one cell
    diagonal away from the transmitter (values above it are clamped).
    """
    d_min = float(np.hypot(grid.cell_width_m, grid.cell_height_m))
    peak_w = params.tx_power_w * params.main_lobe_gain * free_space_gain(d_min, params) + params.noise_w
    return EncodeParams(psi_min_dbm=params.noise_dbm, psi_max_dbm=to_dbm(peak_w), psi_smax=psi_smax)


@dataclass(frozen=True)
class WeightMap:
    grid: GridSpec
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.shape != self.grid.shape:
            raise ValueError("weight shape does not match the grid")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")


@dataclass(frozen=True)
class PriorMap:
    """Sparse RSS observations at sensor cells.

    ``sensor_cells`` holds row-major linear cell indices, sorted ascending;
    ``values_dbm`` gives the measured RSS per sensor in the same order.
    """

    grid: GridSpec
    sensor_cells: np.ndarray
    values_dbm: np.ndarray
    sampling_rate: float

    def __post_init__(self):
        cells = np.asarray(self.sensor_cells, dtype=np.int64)
        vals = np.asarray(self.values_dbm, dtype=float)
        object.__setattr__(self, "sensor_cells", cells)
        object.__setattr__(self, "values_dbm", vals)
        if cells.ndim != 1 or vals.shape != cells.shape:
            raise ValueError("sensor cells and values must be parallel 1-D arrays")
        if cells.size and (cells.min() < 0 or cells.max() >= self.grid.n_cells):
            raise ValueError("sensor cell index out of range")
        if cells.size and np.any(np.diff(cells) <= 0):
            raise ValueError("sensor cells must be sorted and unique")

    @property
    def sensor_mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.n_cells, dtype=bool)
        mask[self.sensor_cells] = True
        return mask.reshape(self.grid.shape)


@dataclass(frozen=True)
class EncodedMap:
    """3-channel image in [0, 1]; every pixel is gray or pure red."""

    grid: GridSpec
    channels: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.channels, dtype=float)
        object.__setattr__(self, "channels", c)
        if c.shape != (3, *self.grid.shape):
            raise ValueError("expected channels of shape (3, n_rows, n_cols)")
        if np.any(c < 0.0) or np.any(c > 1.0):
            raise ValueError("channel values must lie in [0, 1]")


def _weights_from_dbm(values_dbm: np.ndarray, enc: EncodeParams) -> np.ndarray:
    clamped = np.clip(values_dbm, enc.psi_min_dbm, enc.psi_max_dbm)
    span = enc.psi_max_dbm - enc.psi_min_dbm
    return enc.psi_smin + enc.psi_smax * (clamped - enc.psi_min_dbm) / span


def compute_weights(rmap: RadioMap, obstacle_mask: np.ndarray, enc: EncodeParams) -> WeightMap:
    """Per-cell weights: 1 on obstacle cells, affine in dBm elsewhere."""
    vals = np.where(obstacle_mask, enc.psi_min_dbm, rmap.values_dbm)
    w = _weights_from_dbm(vals, enc)
    w[obstacle_mask] = 1.0
    return WeightMap(grid=rmap.grid, weights=w)


def sample_prior(rmap: RadioMap, obstacle_mask: np.ndarray, rate: float,
                 rng: np.random.Generator) -> PriorMap:
    """Uniform sensor placement over non-obstacle cells, without replacement."""
    if not (0.0 < rate <= 1.0):
        raise ValueError("sampling rate must be in (0, 1]")
    free = np.flatnonzero(~obstacle_mask.reshape(-1))
    if free.size == 0:
        raise ValueError("scene has no non-obstacle cells to sample")
    k = int(round(rate * free.size))
    chosen = np.sort(rng.choice(free, size=k, replace=False))
    values = rmap.values_dbm.reshape(-1)[chosen]
    return PriorMap(grid=rmap.grid, sensor_cells=chosen, values_dbm=values, sampling_rate=rate)


def encode_complete(rmap: RadioMap, obstacle_mask: np.ndarray, enc: EncodeParams) -> EncodedMap:
    """Weight map replicated to three gray channels (obstacles become 1)."""
    w = compute_weights(rmap, obstacle_mask, enc).weights
    return EncodedMap(grid=rmap.grid, channels=np.stack([w, w, w]))


def encode_prior(prior: PriorMap, enc: EncodeParams) -> EncodedMap:
    """Gray [w, w, w] at sensor cells, red [1, 0, 0] everywhere else."""
    w = _weights_from_dbm(prior.values_dbm, enc)
    shape = prior.grid.shape
    red = np.zeros((3, *shape))
    red[0] = 1.0
    flat = red.reshape(3, -1)
    flat[:, prior.sensor_cells] = w
    return EncodedMap(grid=prior.grid, channels=flat.reshape(3, *shape))


def compress_channels(channels) -> np.ndarray:
    """Mean over the 3 channels, clamped to [0, 1]."""
    c = channels.channels if isinstance(channels, EncodedMap) else np.asarray(channels, dtype=float)
    if c.ndim != 3 or c.shape[0] != 3:
        raise ValueError("expected a (3, n_rows, n_cols) array")
    return np.clip((c[0] + c[1] + c[2]) / 3.0, 0.0, 1.0)


def segment(compressed: np.ndarray, enc: EncodeParams) -> np.ndarray:
    """Obstacle mask: cells whose value falls in the band (psi_smax, 1]."""
    return (compressed > enc.psi_smax) & (compressed <= 1.0)


def decode_to_rss(generated, prior: PriorMap, enc: EncodeParams) -> RadioMap:
    """Invert the encoding and re-impose the measured sensor values.

    Segmented cells become blocked (NaN); everything else maps back to dBm
    through the inverse affine transform; sensor cells are overwritten with
    their measurements regardless of what was generated there.
    """
    compressed = compress_channels(generated)
    seg = segment(compressed, enc)
    span = enc.psi_max_dbm - enc.psi_min_dbm
    w = np.clip(compressed, enc.psi_smin, enc.psi_smax)
    dbm = enc.psi_min_dbm + (w - enc.psi_smin) * span / enc.psi_smax
    dbm[seg] = np.nan
    flat = dbm.reshape(-1)
    flat[prior.sensor_cells] = prior.values_dbm
    return RadioMap(grid=prior.grid, values_dbm=flat.reshape(prior.grid.shape))


def encoded_to_bytes(enc_map: EncodedMap) -> bytes:
    """3 planes, row-major float32 little-endian."""
    return enc_map.channels.astype("<f4").tobytes(order="C")


def encoded_from_bytes(data: bytes, grid: GridSpec) -> EncodedMap:
    vals = np.frombuffer(data, dtype="<f4")
    if vals.size != 3 * grid.n_cells:
        raise ValueError(f"expected {3 * grid.n_cells} float32 values, got {vals.size}")
    return EncodedMap(grid=grid, channels=vals.astype(float).reshape(3, *grid.shape))


def prior_to_json(prior: PriorMap) -> str:
    doc = {
        "sampling_rate": prior.sampling_rate,
        "n_sensors": int(prior.sensor_cells.size),
        "cells": [int(c) for c in prior.sensor_cells],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def prior_values_to_bytes(prior: PriorMap) -> bytes:
    return prior.values_dbm.astype("<f4").tobytes(order="C")


def prior_from_parts(doc_text: str, values: bytes, grid: GridSpec) -> PriorMap:
    doc = json.loads(doc_text)
    cells = np.array(doc["cells"], dtype=np.int64)
    vals = np.frombuffer(values, dtype="<f4").astype(float)
    if vals.size != cells.size or doc["n_sensors"] != cells.size:
        raise ValueError("prior cell list and value payload disagree")
    return PriorMap(grid=grid, sensor_cells=cells, values_dbm=vals,
                    sampling_rate=doc["sampling_rate"])


def encode_params_to_json_dict(enc: EncodeParams) -> dict:
    return {
        "psi_min_dbm": enc.psi_min_dbm,
        "psi_max_dbm": enc.psi_max_dbm,
        "psi_smin": enc.psi_smin,
        "psi_smax": enc.psi_smax,
    }


def encode_params_from_json_dict(doc: dict) -> EncodeParams:
    return EncodeParams(
        psi_min_dbm=doc["psi_min_dbm"],
        psi_max_dbm=doc["psi_max_dbm"],
        psi_smin=doc["psi_smin"],
        psi_smax=doc["psi_smax"],
    )
