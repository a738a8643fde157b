"""Non-learning completion of sparse prior maps.

Both estimators fill every non-sensor cell from the sensor measurements
alone (in dBm), keep the measurements themselves untouched, and never
predict a blocked cell.
"""

from __future__ import annotations

import numpy as np

from .envmap import PriorMap
from .raytrace import RadioMap


def _distances_to_sensors(prior: PriorMap) -> np.ndarray:
    """(n_cells, n_sensors) Euclidean distances between cell centers."""
    centers = prior.grid.cell_centers().reshape(-1, 2)
    sensors = centers[prior.sensor_cells]
    dx = centers[:, 0][:, None] - sensors[None, :, 0]
    dy = centers[:, 1][:, None] - sensors[None, :, 1]
    return np.hypot(dx, dy)


def nearest_neighbor_fill(prior: PriorMap) -> RadioMap:
    """Each cell copies the nearest sensor's value.

    Distance ties resolve to the sensor with the lowest row-major index
    (sensor cells are stored sorted, and argmin keeps the first minimum).
    """
    if prior.sensor_cells.size == 0:
        raise ValueError("prior has no sensors")
    dist = _distances_to_sensors(prior)
    nearest = np.argmin(dist, axis=1)
    values = prior.values_dbm[nearest]
    values[prior.sensor_cells] = prior.values_dbm
    return RadioMap(grid=prior.grid, values_dbm=values.reshape(prior.grid.shape))


def idw_fill(prior: PriorMap, power: float = 2.0) -> RadioMap:
    """Inverse-distance weighting in dBm over all sensors."""
    if power <= 0:
        raise ValueError("power must be positive")
    if prior.sensor_cells.size == 0:
        raise ValueError("prior has no sensors")
    dist = _distances_to_sensors(prior)
    # Sensor cells hit d = 0 -> inf weight -> NaN ratio; they are replaced
    # with the exact measurements below.
    with np.errstate(divide="ignore", invalid="ignore"):
        w = dist ** (-power)
        values = (w @ prior.values_dbm) / np.sum(w, axis=1)
    values[prior.sensor_cells] = prior.values_dbm
    return RadioMap(grid=prior.grid, values_dbm=values.reshape(prior.grid.shape))
