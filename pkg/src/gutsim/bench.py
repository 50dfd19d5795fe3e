"""Microbenchmarks for the fast posterior/selection path.

Two comparisons matter:

* the diagonal, incrementally-accumulated posterior versus a naive
  implementation that stacks raw measurements and inverts a dense
  grid-by-grid matrix per E-step. The naive path is run for a small, measured
  number of E-steps and extrapolated linearly over the E-steps a full
  first-waypoint selection would need (one per EM iteration plus one per
  candidate), since actually running thousands of dense inversions would take
  hours by construction.
* full candidate enumeration versus fractional subsampling in the
  waypoint-selection loop.

The dense E-step also double-checks the fast path numerically: both moments
are printed with their max absolute disagreement.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .grid import HEADINGS, Pose, build_region
from .planner import Candidate, RewardConfig, select_action
from .posterior import SblHyper, SufficientStats, ingest, run_em, sample_beta
from .sensing import DEFAULT_NOISE, Observation, ugv_fov


@dataclass
class BenchResult:
    n_cells: int
    n_observations: int
    n_candidates: int
    subsample_frac: float
    em_iterations: int
    fast_em_s: float
    fast_select_s: float
    fast_total_s: float
    subsampled_candidates: int
    subsample_select_s: float
    subsample_speedup: float
    naive_estep_s: float
    naive_esteps_measured: int
    naive_esteps_required: int
    naive_total_s_extrapolated: float
    naive_vs_fast_speedup: float
    estep_max_abs_diff: float

    def to_dict(self) -> dict:
        return asdict(self)

    def summary_lines(self) -> list[str]:
        return [
            f"grid cells                {self.n_cells}",
            f"accumulated observations  {self.n_observations}",
            f"candidates                {self.n_candidates}",
            f"EM iterations             {self.em_iterations}",
            f"fast posterior fit        {self.fast_em_s:.4f} s",
            f"fast waypoint selection   {self.fast_select_s:.4f} s  ({self.n_candidates} candidates)",
            f"fast total                {self.fast_total_s:.4f} s",
            f"subsampled selection      {self.subsample_select_s:.4f} s  "
            f"({self.subsampled_candidates} candidates, frac {self.subsample_frac})",
            f"subsample speedup         {self.subsample_speedup:.1f}x",
            f"naive dense E-step        {self.naive_estep_s:.2f} s  "
            f"(measured over {self.naive_esteps_measured})",
            f"naive selection (extrap.) {self.naive_total_s_extrapolated:.1f} s  "
            f"over {self.naive_esteps_required} dense E-steps",
            f"naive vs fast speedup     {self.naive_vs_fast_speedup:.0f}x",
            f"fast/dense max moment gap {self.estep_max_abs_diff:.2e}",
        ]


def _square_region(n_cells: int, cell_size: float = 30.0):
    side = int(round(math.sqrt(n_cells)))
    if side * side != n_cells:
        raise ValueError("bench grid must be square; pass a perfect-square cell count")
    extent = side * cell_size
    return build_region([(0, 0), (extent, 0), (extent, extent), (0, extent)], cell_size)


def _random_stats(n_cells: int, n_obs: int, rng) -> tuple[SufficientStats, list[Observation]]:
    stats = SufficientStats.empty(n_cells)
    raw = []
    for _ in range(n_obs):
        cells = rng.choice(n_cells, size=2, replace=False)
        obs = Observation(
            visible_cells=tuple(int(c) for c in cells),
            y=tuple(float(v) for v in rng.uniform(0, 1, 2)),
            noise_var=tuple(float(v) for v in rng.uniform(0.05, 0.5, 2)),
        )
        raw.append(obs)
        stats = ingest(stats, obs)
    return stats, raw


def _synthetic_candidates(region, n: int, rng) -> list[Candidate]:
    ground = region.ground_cells
    cands: list[Candidate] = []
    while len(cands) < n:
        cell = int(ground[rng.integers(len(ground))])
        heading = HEADINGS[rng.integers(4)]
        action = ugv_fov(region, Pose(cell, heading), DEFAULT_NOISE)
        if action.q:
            cands.append(Candidate(action=action, travel_cost=float(rng.uniform(0, 3000))))
    return cands


def _dense_e_step(gamma: np.ndarray, stats: SufficientStats) -> tuple[np.ndarray, np.ndarray]:
    """Reference E-step via full dense inversion; cubic in the cell count."""
    n = len(gamma)
    a = np.diag(1.0 / gamma)
    a[np.diag_indices(n)] += stats.precision_diag
    v = np.linalg.inv(a)
    mu = v @ stats.weighted_obs
    return mu, np.diag(v).copy()


def run_bench(
    n_cells: int = 10_000,
    n_observations: int = 500,
    n_candidates: int = 2_000,
    subsample_frac: float = 0.05,
    naive_esteps: int = 1,
    seed: int = 0,
) -> BenchResult:
    rng = np.random.default_rng(seed)
    region = _square_region(n_cells)
    stats, _ = _random_stats(region.n_cells, n_observations, rng)
    hyper = SblHyper()
    cfg = RewardConfig(subsample_frac=1.0)

    t0 = time.perf_counter()
    post = run_em(stats, hyper)
    t1 = time.perf_counter()
    draw = sample_beta(post, rng)
    candidates = _synthetic_candidates(region, n_candidates, rng)
    t2 = time.perf_counter()
    select_action(candidates, draw, stats, post.gamma, cfg)
    t3 = time.perf_counter()
    fast_em_s = t1 - t0
    fast_select_s = t3 - t2
    fast_total_s = fast_em_s + fast_select_s

    n_sub = max(1, math.ceil(subsample_frac * n_candidates))
    subset = candidates[:n_sub]
    t4 = time.perf_counter()
    select_action(subset, draw, stats, post.gamma, cfg)
    t5 = time.perf_counter()
    subsample_select_s = t5 - t4

    naive_times = []
    max_diff = 0.0
    for _ in range(max(1, naive_esteps)):
        t6 = time.perf_counter()
        mu_d, v_d = _dense_e_step(post.gamma, stats)
        t7 = time.perf_counter()
        naive_times.append(t7 - t6)
        max_diff = max(
            max_diff,
            float(np.max(np.abs(mu_d - post.mu))),
            float(np.max(np.abs(v_d - post.v_diag))),
        )
    naive_estep_s = sum(naive_times) / len(naive_times)
    # One dense E-step per EM iteration, then one per candidate evaluated.
    naive_esteps_required = post.n_iter + n_candidates
    naive_total = naive_estep_s * naive_esteps_required

    return BenchResult(
        n_cells=region.n_cells,
        n_observations=n_observations,
        n_candidates=n_candidates,
        subsample_frac=subsample_frac,
        em_iterations=post.n_iter,
        fast_em_s=fast_em_s,
        fast_select_s=fast_select_s,
        fast_total_s=fast_total_s,
        subsampled_candidates=n_sub,
        subsample_select_s=subsample_select_s,
        subsample_speedup=fast_select_s / subsample_select_s if subsample_select_s else float("inf"),
        naive_estep_s=naive_estep_s,
        naive_esteps_measured=max(1, naive_esteps),
        naive_esteps_required=naive_esteps_required,
        naive_total_s_extrapolated=naive_total,
        naive_vs_fast_speedup=naive_total / fast_total_s if fast_total_s else float("inf"),
        estep_max_abs_diff=max_diff,
    )
