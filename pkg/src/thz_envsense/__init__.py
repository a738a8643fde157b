"""Deterministic 2D THz radio-environment simulator and obstacle-sensing benchmark."""

from .channel import ChannelParams, beam_gain, free_space_gain, from_dbm, to_dbm
from .envmap import (
    EncodedMap,
    EncodeParams,
    PriorMap,
    WeightMap,
    compress_channels,
    compute_weights,
    decode_to_rss,
    default_encode_params,
    encode_complete,
    encode_prior,
    sample_prior,
    segment,
)
from .metrics import Detection, EvalReport, average_precision, extract_detections, weighted_mse
from .raytrace import BLOCKED_DBM, PathKind, RadioMap, RayPath, compute_rss, segment_blocked, trace_paths
from .scenario import (
    GridSpec,
    Obstacle,
    PlacementError,
    ScenarioConfig,
    Scene,
    rasterize_obstacles,
    sample_scene,
)

__version__ = "0.1.0"
