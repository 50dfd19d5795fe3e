"""Sensing-action geometry and heteroscedastic observation synthesis.

Readings follow a clipped half-Gaussian model: a cell containing a target
reads ``clip(1 - n, 0, 1)`` and an empty cell reads ``clip(0 + n, 0, 1)``
where ``n = sigma * |z|`` with ``z`` standard normal. Empty-cell variance
grows with observer-to-cell distance; target-cell variance comes from a
simulated detector confidence and localization-uncertainty volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import HEADING_STEPS, GroundTruth, Pose, SearchRegion

# Simulated detector outputs backing positive readings: the localization
# uncertainty ellipsoid grows linearly with distance, detection confidence is
# drawn uniformly per sighting.
POSITIVE_VOL_BASE_M3 = 5.0
POSITIVE_VOL_DISTANCE_SCALE_M = 30.0
POSITIVE_CONFIDENCE_RANGE = (0.6, 0.95)

DEFAULT_UAV_HEIGHT_M = 80.0


@dataclass(frozen=True)
class NoiseConfig:
    """Parameters of the reading-noise models and false-positive injector.

    ``sigma2_min`` doubles as the floor applied to positive-observation
    variances so no reading is ever claimed noiseless.
    """

    sigma2_min: float = 0.01
    kappa: float = 0.005
    sigma2_cap: float = 0.5
    fp_prob: float = 0.0
    fp_confidence: float = 0.7
    fp_ellipsoid_vol_m3: float = 25.0

    def __post_init__(self):
        if not 0 < self.sigma2_min <= self.sigma2_cap <= 0.5:
            raise ValueError("need 0 < sigma2_min <= sigma2_cap <= 0.5")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not 0 <= self.fp_prob < 1:
            raise ValueError("fp_prob must be in [0, 1)")
        if not 0 < self.fp_confidence <= 1:
            raise ValueError("fp_confidence must be in (0, 1]")


DEFAULT_NOISE = NoiseConfig()


@dataclass(frozen=True)
class SensingAction:
    """One sensing decision: the ordered set of grid cells it observes.

    Each visible cell contributes one one-hot measurement row.
    ``noise_var_planned`` is the variance an agent budgets for each cell when
    scoring the action (the distance-based empty-cell model, since the agent
    does not know where targets are).
    """

    agent_kind: str
    target_cell: int
    heading: str | None
    visible_cells: tuple[int, ...]
    distances_m: tuple[float, ...]
    noise_var_planned: tuple[float, ...]
    cells_arr: np.ndarray = field(repr=False, compare=False, default=None)
    planned_prec_arr: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(set(self.visible_cells)) != len(self.visible_cells):
            raise ValueError("visible cells must be distinct")
        cells = np.asarray(self.visible_cells, dtype=np.int64)
        prec = 1.0 / np.asarray(self.noise_var_planned)
        cells.setflags(write=False)
        prec.setflags(write=False)
        object.__setattr__(self, "cells_arr", cells)
        object.__setattr__(self, "planned_prec_arr", prec)

    @property
    def q(self) -> int:
        return len(self.visible_cells)


@dataclass(frozen=True)
class Observation:
    """Noisy readings for one executed sensing action."""

    visible_cells: tuple[int, ...]
    y: tuple[float, ...]
    noise_var: tuple[float, ...]

    @property
    def q(self) -> int:
        return len(self.visible_cells)

    def to_dict(self) -> dict:
        return {
            "visible_cells": list(self.visible_cells),
            "y": list(self.y),
            "noise_var": list(self.noise_var),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observation":
        return cls(
            visible_cells=tuple(int(c) for c in d["visible_cells"]),
            y=tuple(float(v) for v in d["y"]),
            noise_var=tuple(float(v) for v in d["noise_var"]),
        )


def negative_noise_variance(distance_m: float, cfg: NoiseConfig = DEFAULT_NOISE) -> float:
    """Empty-cell reading variance: affine in distance, capped."""
    if distance_m < 0:
        raise ValueError("distance must be nonnegative")
    return min(cfg.sigma2_cap, cfg.sigma2_min + cfg.kappa * distance_m)


def positive_noise_variance(
    ellipsoid_vol_m3: float,
    confidence: float,
    cfg: NoiseConfig = DEFAULT_NOISE,
) -> float:
    """Target-cell reading variance from detector confidence and location spread.

    ``min(cap, vol / (confidence * 1000))``, floored at ``sigma2_min``.
    """
    if not 0 < confidence <= 1:
        raise ValueError("confidence must be in (0, 1]")
    if ellipsoid_vol_m3 < 0:
        raise ValueError("ellipsoid volume must be nonnegative")
    raw = ellipsoid_vol_m3 / (confidence * 1000.0)
    return min(cfg.sigma2_cap, max(cfg.sigma2_min, raw))


def ugv_fov(region: SearchRegion, pose: Pose, cfg: NoiseConfig = DEFAULT_NOISE) -> SensingAction:
    """Ground-agent field of view: the two cells ahead along the heading.

    Cells off-grid or outside the search polygon are dropped, so the result
    may observe one cell or none; an empty action is an invalid candidate and
    is pruned by the planner.
    """
    row, col = region.unflatten(pose.cell)
    dr, dc = HEADING_STEPS[pose.heading]
    cells, dists = [], []
    for k in (1, 2):
        r, c = row + k * dr, col + k * dc
        if 0 <= r < region.rows and 0 <= c < region.cols and region.in_region[r, c]:
            cells.append(r * region.cols + c)
            dists.append(k * region.cell_size_m)
    return SensingAction(
        agent_kind="UGV",
        target_cell=pose.cell,
        heading=pose.heading,
        visible_cells=tuple(cells),
        distances_m=tuple(dists),
        noise_var_planned=tuple(negative_noise_variance(d, cfg) for d in dists),
    )


def _flight_cells(r0: int, c0: int, r1: int, c1: int) -> list[tuple[int, int]]:
    """Cells crossed by the segment between two cell centres.

    Boundary crossings are ordered by exact integer comparison of crossing
    parameters; a crossing that hits a cell corner steps both axes at once,
    so a perfect diagonal passes through corners rather than adjacent cells.
    """
    dr, dc = r1 - r0, c1 - c0
    nr, nc = abs(dr), abs(dc)
    sr = 1 if dr > 0 else -1
    sc = 1 if dc > 0 else -1
    cells = [(r0, c0)]
    r, c = r0, c0
    i = j = 0  # row/col boundaries crossed so far
    while i < nr or j < nc:
        # Next row crossing at t=(2i+1)/(2nr), next col at t=(2j+1)/(2nc);
        # compare as integers: (2i+1)*nc vs (2j+1)*nr.
        row_t = (2 * i + 1) * nc if i < nr else None
        col_t = (2 * j + 1) * nr if j < nc else None
        if col_t is None or (row_t is not None and row_t < col_t):
            r += sr
            i += 1
        elif row_t is None or col_t < row_t:
            c += sc
            j += 1
        else:  # corner crossing: step diagonally
            r += sr
            c += sc
            i += 1
            j += 1
        cells.append((r, c))
    return cells


def uav_fov(
    region: SearchRegion,
    from_cell: int,
    to_cell: int,
    cfg: NoiseConfig = DEFAULT_NOISE,
    height_m: float = DEFAULT_UAV_HEIGHT_M,
) -> SensingAction:
    """Air-agent sensing action: every cell under the straight flight line.

    Each overflown in-region cell contributes one reading taken from the
    fixed flight height; out-of-region cells on the line are discarded.
    """
    r0, c0 = region.unflatten(from_cell)
    r1, c1 = region.unflatten(to_cell)
    cells = []
    for r, c in _flight_cells(r0, c0, r1, c1):
        if region.in_region[r, c]:
            cells.append(r * region.cols + c)
    var = negative_noise_variance(height_m, cfg)
    return SensingAction(
        agent_kind="UAV",
        target_cell=to_cell,
        heading=None,
        visible_cells=tuple(cells),
        distances_m=(height_m,) * len(cells),
        noise_var_planned=(var,) * len(cells),
    )


def _positive_reading(
    distance_m: float, cfg: NoiseConfig, rng: np.random.Generator
) -> tuple[float, float]:
    vol = POSITIVE_VOL_BASE_M3 * (1.0 + distance_m / POSITIVE_VOL_DISTANCE_SCALE_M)
    lo, hi = POSITIVE_CONFIDENCE_RANGE
    confidence = rng.uniform(lo, hi)
    var = positive_noise_variance(vol, confidence, cfg)
    y = float(np.clip(1.0 - math.sqrt(var) * abs(rng.standard_normal()), 0.0, 1.0))
    return y, var


def _false_positive_reading(cfg: NoiseConfig, rng: np.random.Generator) -> tuple[float, float]:
    var = positive_noise_variance(cfg.fp_ellipsoid_vol_m3, cfg.fp_confidence, cfg)
    y = float(np.clip(1.0 - math.sqrt(var) * abs(rng.standard_normal()), 0.0, 1.0))
    return y, var


def synthesize_observation(
    truth: GroundTruth,
    action: SensingAction,
    cfg: NoiseConfig,
    rng: np.random.Generator,
) -> Observation:
    """Draw noisy readings for every cell the action observes.

    Empty cells read additive distance-based noise and, with probability
    ``fp_prob``, are replaced by a spurious detection drawn as if a target
    were present. The reported per-cell variance is the one actually used to
    generate the reading.
    """
    ys, variances = [], []
    for cell, dist in zip(action.visible_cells, action.distances_m):
        if truth.beta[cell] >= 0.5:
            y, var = _positive_reading(dist, cfg, rng)
        else:
            var = negative_noise_variance(dist, cfg)
            y = float(np.clip(math.sqrt(var) * abs(rng.standard_normal()), 0.0, 1.0))
            if cfg.fp_prob > 0 and rng.random() < cfg.fp_prob:
                y, var = _false_positive_reading(cfg, rng)
        ys.append(y)
        variances.append(var)
    return Observation(
        visible_cells=action.visible_cells, y=tuple(ys), noise_var=tuple(variances)
    )
