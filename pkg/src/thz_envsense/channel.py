"""Sub-THz propagation primitives.

Free-space spreading with exponential molecular absorption, a flat-top
(sectored) transmit beam normalized to unit average gain over all
directions, and dBm/watt conversions. Everything is stateless and accepts
scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class ChannelParams:
    carrier_hz: float = 3.0e11
    beamwidth_rad: float = math.radians(20.0)
    tx_power_dbm: float = 30.0
    noise_dbm: float = -90.0
    absorption_per_m: float = 0.0033
    reflection_loss_db: float = 10.0
    diffraction_loss_db: float = 25.0
    beam_boresight_rad: float = 0.0
    sidelobe_gain_db: float = -20.0

    def __post_init__(self):
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if not (0.0 < self.beamwidth_rad <= 2.0 * math.pi):
            raise ValueError("beamwidth_rad must lie in (0, 2*pi]")
        if self.absorption_per_m < 0:
            raise ValueError("absorption_per_m must be non-negative")
        if self.tx_power_dbm <= self.noise_dbm:
            raise ValueError("tx_power_dbm must exceed noise_dbm")

    @property
    def tx_power_w(self) -> float:
        return from_dbm(self.tx_power_dbm)

    @property
    def noise_w(self) -> float:
        return from_dbm(self.noise_dbm)

    @property
    def sidelobe_gain(self) -> float:
        return 10.0 ** (self.sidelobe_gain_db / 10.0)

    @property
    def main_lobe_gain(self) -> float:
        """Main-lobe gain making the all-direction average gain exactly 1."""
        two_pi = 2.0 * math.pi
        g_side = self.sidelobe_gain
        return (two_pi - (two_pi - self.beamwidth_rad) * g_side) / self.beamwidth_rad


def free_space_gain(distance_m, params: ChannelParams):
    """Linear power gain (c / (4*pi*f*d))^2 * exp(-k_abs*d), in (0, 1] typically."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    amp = SPEED_OF_LIGHT / (4.0 * np.pi * params.carrier_hz * d)
    gain = amp * amp * np.exp(-params.absorption_per_m * d)
    return gain if gain.ndim else float(gain)


def beam_gain(direction_rad, params: ChannelParams):
    """Flat-top beam: main-lobe gain within half a beamwidth of boresight."""
    d = np.asarray(direction_rad, dtype=float)
    off = np.mod(d - params.beam_boresight_rad + np.pi, 2.0 * np.pi) - np.pi
    gain = np.where(np.abs(off) <= params.beamwidth_rad / 2.0,
                    params.main_lobe_gain, params.sidelobe_gain)
    return gain if gain.ndim else float(gain)


def to_dbm(power_w):
    p = np.asarray(power_w, dtype=float)
    if np.any(p <= 0.0):
        raise ValueError("power must be positive")
    out = 10.0 * np.log10(p) + 30.0
    return out if out.ndim else float(out)


def from_dbm(power_dbm):
    p = np.asarray(power_dbm, dtype=float)
    out = 10.0 ** ((p - 30.0) / 10.0)
    return out if out.ndim else float(out)


def channel_to_json_dict(params: ChannelParams) -> dict:
    """Manifest encoding; angles are stored in degrees."""
    return {
        "carrier_hz": params.carrier_hz,
        "beamwidth_deg": math.degrees(params.beamwidth_rad),
        "tx_power_dbm": params.tx_power_dbm,
        "noise_dbm": params.noise_dbm,
        "absorption_per_m": params.absorption_per_m,
        "reflection_loss_db": params.reflection_loss_db,
        "diffraction_loss_db": params.diffraction_loss_db,
        "beam_boresight_deg": math.degrees(params.beam_boresight_rad),
        "sidelobe_gain_db": params.sidelobe_gain_db,
    }


def channel_from_json_dict(doc: dict) -> ChannelParams:
    return ChannelParams(
        carrier_hz=doc["carrier_hz"],
        beamwidth_rad=math.radians(doc["beamwidth_deg"]),
        tx_power_dbm=doc["tx_power_dbm"],
        noise_dbm=doc["noise_dbm"],
        absorption_per_m=doc["absorption_per_m"],
        reflection_loss_db=doc["reflection_loss_db"],
        diffraction_loss_db=doc["diffraction_loss_db"],
        beam_boresight_rad=math.radians(doc["beam_boresight_deg"]),
        sidelobe_gain_db=doc["sidelobe_gain_db"],
    )
