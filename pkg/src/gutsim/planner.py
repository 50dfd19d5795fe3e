"""Candidate sensing-action enumeration, reward evaluation, and selection.

Two rewards are implemented over a posterior draw ``beta_tilde``:

* plain posterior-sampling reward: the negative squared distance between the
  draw and the estimate expected after hypothetically executing a candidate;
* the GUTS variant, which additionally subtracts ``lambda`` whenever the
  top halves (by value) of the draw's and the hypothetical estimate's
  above-threshold entries share no cell, penalizing actions that cannot
  confirm any currently-suspected target.

Because the posterior is diagonal, a candidate only perturbs the estimate at
the cells it observes, so ``select_action`` scores each candidate in O(cells
observed) after an O(grid) precomputation. That incremental path is
arithmetically identical to re-running the full one-step estimate per
candidate, which remains available as ``expected_next_estimate`` and is what
the test-suite oracles use.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .grid import HEADINGS, Pose, SearchRegion, shortest_paths
from .posterior import BetaSample, SufficientStats, e_step, ingest
from .sensing import (
    DEFAULT_NOISE,
    DEFAULT_UAV_HEIGHT_M,
    NoiseConfig,
    Observation,
    SensingAction,
    ugv_fov,
    uav_fov,
)

ALGORITHMS = ("GUTS", "NATS")


@dataclass(frozen=True)
class RewardConfig:
    """Reward shape and candidate-subsampling knobs."""

    lambda_: float = 0.01
    tau_sample: float = 0.1
    tau_estimate: float = 0.1
    subsample_frac: float = 1.0
    algorithm: str = "GUTS"
    mc_samples: int = 0

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ValueError("lambda must be nonnegative")
        if self.tau_sample <= 0 or self.tau_estimate <= 0:
            raise ValueError("thresholds must be positive")
        if not 0 < self.subsample_frac <= 1:
            raise ValueError("subsample_frac must be in (0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.mc_samples < 0:
            raise ValueError("mc_samples must be nonnegative")


@dataclass(slots=True)
class Candidate:
    """A reachable sensing action; ``reward`` is filled by evaluation."""

    action: SensingAction
    travel_cost: float
    reward: float | None = None


# Per-region cache of ground-agent fields of view. Regions are immutable and
# compared by identity, and weak keys let dead regions drop their tables.
_UGV_FOV_CACHE: "weakref.WeakKeyDictionary[SearchRegion, dict]" = weakref.WeakKeyDictionary()


def _ugv_fov_table(
    region: SearchRegion, noise: NoiseConfig
) -> dict[int, dict[str, SensingAction | None]]:
    per_region = _UGV_FOV_CACHE.get(region)
    if per_region is None:
        per_region = {}
        _UGV_FOV_CACHE[region] = per_region
    table = per_region.get(noise)
    if table is None:
        table = {}
        for cell in region.ground_cells:
            per_heading = {}
            for heading in HEADINGS:
                action = ugv_fov(region, Pose(int(cell), heading), noise)
                per_heading[heading] = action if action.q > 0 else None
            table[int(cell)] = per_heading
        per_region[noise] = table
    return table


def enumerate_candidates(
    region: SearchRegion,
    agent_kind: str,
    pose: Pose,
    cfg: RewardConfig,
    rng: np.random.Generator,
    noise: NoiseConfig = DEFAULT_NOISE,
    uav_height_m: float = DEFAULT_UAV_HEIGHT_M,
    dist_parent: tuple[np.ndarray, np.ndarray] | None = None,
) -> list[Candidate]:
    """All reachable sensing actions, optionally uniformly subsampled.

    Ground agents get every reachable in-region cell crossed with the four
    headings (empty fields of view dropped); air agents get a straight flight
    to every in-region cell. When ``subsample_frac < 1`` a uniform sample of
    ``ceil(frac * N)`` candidates (at least one) is drawn without
    replacement, deterministically for a fixed generator state. An empty
    result signals a trapped agent.
    """
    candidates: list[Candidate] = []
    if agent_kind == "UGV":
        dist, _ = dist_parent if dist_parent is not None else shortest_paths(region, pose.cell)
        table = _ugv_fov_table(region, noise)
        for cell in region.ground_cells:
            d = dist[cell]
            if not np.isfinite(d):
                continue
            for heading in HEADINGS:
                action = table[int(cell)][heading]
                if action is not None:
                    candidates.append(Candidate(action=action, travel_cost=float(d)))
    elif agent_kind == "UAV":
        for cell in region.in_region_cells:
            action = uav_fov(region, pose.cell, int(cell), noise, uav_height_m)
            if action.q > 0:
                candidates.append(
                    Candidate(
                        action=action,
                        travel_cost=region.center_distance_m(pose.cell, int(cell)),
                    )
                )
    else:
        raise ValueError(f"unknown agent kind {agent_kind!r}")

    if cfg.subsample_frac < 1.0 and candidates:
        keep = max(1, math.ceil(cfg.subsample_frac * len(candidates)))
        if keep < len(candidates):
            idx = np.sort(rng.choice(len(candidates), size=keep, replace=False))
            candidates = [candidates[i] for i in idx]
    return candidates


def hypothetical_observation(candidate: Candidate, beta_tilde: np.ndarray) -> Observation:
    """The noiseless reading the candidate would take if the draw were true."""
    cells = candidate.action.cells_arr
    y = np.clip(beta_tilde[cells], 0.0, 1.0)
    return Observation(
        visible_cells=candidate.action.visible_cells,
        y=tuple(float(v) for v in y),
        noise_var=candidate.action.noise_var_planned,
    )


def expected_next_estimate(
    stats: SufficientStats,
    gamma: np.ndarray,
    candidate: Candidate,
    beta_tilde: BetaSample | np.ndarray,
    mc_samples: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Posterior mean after hypothetically executing ``candidate``.

    The expected reading is the single noiseless value clip(draw, 0, 1): the
    one-step estimate is linear in the reading, so the mean reading yields
    the mean estimate. Set ``mc_samples > 0`` to average over that many
    symmetric-noise reading draws instead (sensitivity studies only). Prior
    variances stay frozen: one E-step, no inner EM.
    """
    beta = beta_tilde.beta_tilde if isinstance(beta_tilde, BetaSample) else beta_tilde
    base = hypothetical_observation(candidate, beta)
    if mc_samples <= 0:
        mu, _ = e_step(ingest(stats, base), gamma)
        return mu
    if rng is None:
        raise ValueError("mc_samples > 0 requires a generator")
    cells = candidate.action.cells_arr
    sigma = np.sqrt(np.asarray(base.noise_var))
    total = None
    for _ in range(mc_samples):
        noisy = np.clip(beta[cells] + sigma * rng.standard_normal(len(cells)), 0.0, 1.0)
        obs = Observation(base.visible_cells, tuple(float(v) for v in noisy), base.noise_var)
        mu, _ = e_step(ingest(stats, obs), gamma)
        total = mu if total is None else total + mu
    return total / mc_samples


def nats_reward(
    beta_tilde: BetaSample | np.ndarray,
    stats: SufficientStats,
    gamma: np.ndarray,
    candidate: Candidate,
    mc_samples: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Negative squared error between the draw and the one-step estimate."""
    beta = beta_tilde.beta_tilde if isinstance(beta_tilde, BetaSample) else beta_tilde
    mu_next = expected_next_estimate(stats, gamma, candidate, beta, mc_samples, rng)
    diff = beta - mu_next
    return -float(diff @ diff)


def _ceil_half(k: int) -> int:
    return -(-k // 2)


def top_cells(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest values; ties resolve to the lower index."""
    order = np.lexsort((np.arange(len(values)), -values))
    return order[:k]


def guts_indicator(
    beta_tilde: BetaSample | np.ndarray,
    mu_next: np.ndarray,
    cfg: RewardConfig,
) -> int:
    """1 when the draw's and estimate's leading cells are disjoint, else 0.

    The leading cells are the top ceil(k/2) entries by value among entries
    exceeding the respective nonzero threshold, k being the count of such
    entries. An empty set on either side counts as no match (returns 1), so
    the penalty binds while the estimate is still uninformative.
    """
    beta = beta_tilde.beta_tilde if isinstance(beta_tilde, BetaSample) else beta_tilde
    k_sample = int(np.count_nonzero(beta > cfg.tau_sample))
    k_estimate = int(np.count_nonzero(mu_next > cfg.tau_estimate))
    if k_sample == 0 or k_estimate == 0:
        return 1
    sample_top = top_cells(beta, _ceil_half(k_sample))
    estimate_top = top_cells(mu_next, _ceil_half(k_estimate))
    mask = np.zeros(len(beta), dtype=bool)
    mask[sample_top] = True
    return 0 if bool(mask[estimate_top].any()) else 1


def guts_reward(
    beta_tilde: BetaSample | np.ndarray,
    stats: SufficientStats,
    gamma: np.ndarray,
    candidate: Candidate,
    cfg: RewardConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Base reward minus ``lambda`` when the confirmation indicator fires."""
    beta = beta_tilde.beta_tilde if isinstance(beta_tilde, BetaSample) else beta_tilde
    mu_next = expected_next_estimate(stats, gamma, candidate, beta, cfg.mc_samples, rng)
    diff = beta - mu_next
    return -float(diff @ diff) - cfg.lambda_ * guts_indicator(beta, mu_next, cfg)


def select_action(
    candidates: list[Candidate],
    beta_tilde: BetaSample | np.ndarray,
    stats: SufficientStats,
    gamma: np.ndarray,
    cfg: RewardConfig,
    rng: np.random.Generator | None = None,
) -> Candidate:
    """Evaluate every candidate's reward and return the argmax.

    Ties break toward lower travel cost, then lower target cell index. The
    result is independent of candidate order. Every candidate's ``reward``
    field is filled.
    """
    if not candidates:
        raise ValueError("cannot select from an empty candidate set")
    beta = beta_tilde.beta_tilde if isinstance(beta_tilde, BetaSample) else beta_tilde

    if cfg.mc_samples > 0:
        best, best_key = None, None
        for cand in candidates:
            if cfg.algorithm == "GUTS":
                r = guts_reward(beta, stats, gamma, cand, cfg, rng)
            else:
                r = nats_reward(beta, stats, gamma, cand, cfg.mc_samples, rng)
            cand.reward = r
            key = (-r, cand.travel_cost, cand.action.target_cell)
            if best_key is None or key < best_key:
                best, best_key = cand, key
        return best

    mu, _ = e_step(stats, gamma)
    base_err = beta - mu
    base_sq = float(base_err @ base_err)
    use_guts = cfg.algorithm == "GUTS"

    if use_guts:
        k_sample = int(np.count_nonzero(beta > cfg.tau_sample))
        sample_mask = np.zeros(len(beta), dtype=bool)
        if k_sample > 0:
            sample_mask[top_cells(beta, _ceil_half(k_sample))] = True
        estimate_count_base = int(np.count_nonzero(mu > cfg.tau_estimate))
        buf = np.empty_like(mu)
        idx = np.arange(len(mu))

    best, best_key = None, None
    for cand in candidates:
        cells = cand.action.cells_arr
        y = np.clip(beta[cells], 0.0, 1.0)
        prec_add = cand.action.planned_prec_arr
        prec_new = stats.precision_diag[cells] + prec_add
        w_new = stats.weighted_obs[cells] + y * prec_add
        v_new = 1.0 / (1.0 / gamma[cells] + prec_new)
        mu_new = v_new * w_new
        d_old = base_err[cells]
        d_new = beta[cells] - mu_new
        r = -(base_sq + float(d_new @ d_new - d_old @ d_old))

        if use_guts:
            if k_sample == 0:
                indicator = 1
            else:
                k_estimate = (
                    estimate_count_base
                    - int(np.count_nonzero(mu[cells] > cfg.tau_estimate))
                    + int(np.count_nonzero(mu_new > cfg.tau_estimate))
                )
                if k_estimate == 0:
                    indicator = 1
                else:
                    np.copyto(buf, mu)
                    buf[cells] = mu_new
                    order = np.lexsort((idx, -buf))
                    indicator = 0 if bool(sample_mask[order[: _ceil_half(k_estimate)]].any()) else 1
            r -= cfg.lambda_ * indicator

        cand.reward = r
        key = (-r, cand.travel_cost, cand.action.target_cell)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best
