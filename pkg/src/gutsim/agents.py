"""Per-agent decision loop: posterior-sampling planners plus a coverage baseline.

Each agent owns a dataset of precision-weighted sufficient statistics built
from its own observations and whatever peer observations the bus delivered.
Remote observations are deduplicated by (origin, sequence) key, so the
dataset is correct even under at-least-once delivery.

COVERAGE agents never consult the posterior when deciding: they walk to the
nearest cell not yet covered. The episode harness still fits a posterior for
them after each decision, purely to score recoveries on the same rule as
everyone else; the two uses are instrumented separately
(``em_calls_decide`` vs ``em_calls_metrics``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comms import LOCATION, OBSERVATION, Message
from .grid import HEADINGS, HEADING_STEPS, GroundTruth, Path, Pose, SearchRegion, shortest_paths, traversal_path
from .planner import Candidate, RewardConfig, enumerate_candidates, select_action
from .posterior import Posterior, SblHyper, SufficientStats, ingest, run_em, sample_beta
from .sensing import (
    DEFAULT_UAV_HEIGHT_M,
    NoiseConfig,
    Observation,
    synthesize_observation,
    uav_fov,
    ugv_fov,
)

POLICIES = ("GUTS", "NATS", "COVERAGE")


@dataclass(frozen=True)
class TeamConfig:
    """Scenario-level knobs shared by every agent."""

    noise: NoiseConfig
    reward: RewardConfig
    hyper: SblHyper
    uav_height_m: float = DEFAULT_UAV_HEIGHT_M
    recovery_threshold: float = 0.85


@dataclass
class AgentState:
    agent_id: int
    kind: str
    policy: str
    pose: Pose
    stats: SufficientStats
    rng: np.random.Generator
    posterior: Posterior | None = None
    gamma_warm: np.ndarray | None = None
    alive: bool = True
    finished: bool = False
    visited: np.ndarray = None  # per-cell coverage bookkeeping
    seen_keys: set = field(default_factory=set)
    peer_locations: dict = field(default_factory=dict)
    obs_log: list = field(default_factory=list)
    next_seq: int = 0
    decisions: int = 0
    sim_time_s: float = 0.0
    em_calls_decide: int = 0
    em_calls_metrics: int = 0

    @classmethod
    def create(
        cls,
        agent_id: int,
        kind: str,
        policy: str,
        pose: Pose,
        n_cells: int,
        rng: np.random.Generator,
    ) -> "AgentState":
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        visited = np.zeros(n_cells, dtype=bool)
        visited[pose.cell] = True
        return cls(
            agent_id=agent_id,
            kind=kind,
            policy=policy,
            pose=pose,
            stats=SufficientStats.empty(n_cells),
            rng=rng,
            visited=visited,
        )


@dataclass
class Decision:
    """Outcome of one planning step."""

    candidate: Candidate | None
    path: Path | None = None  # ground travel route, source..waypoint
    wrap_around: bool = False
    trapped: bool = False


def _heading_of_move(region: SearchRegion, a: int, b: int, fallback: str) -> str:
    ra, ca = region.unflatten(a)
    rb, cb = region.unflatten(b)
    for heading, (dr, dc) in HEADING_STEPS.items():
        if (rb - ra, cb - ca) == (dr, dc):
            return heading
    return fallback


def _coverage_waypoint(
    state: AgentState, region: SearchRegion
) -> tuple[int | None, float, np.ndarray | None, bool]:
    """Nearest uncovered cell by travel cost; ties toward the lower index.

    Returns (cell, travel_cost, dist_parent, wrapped). With everything
    covered, falls back to the nearest cell other than the current one.
    """
    if state.kind == "UGV":
        dist, parent = shortest_paths(region, state.pose.cell)
        pool = region.ground_cells
        costs = dist[pool]
    else:
        pool = region.in_region_cells
        costs = np.array([region.center_distance_m(state.pose.cell, int(c)) for c in pool])
        dist = parent = None
    reachable = np.isfinite(costs)
    fresh = reachable & ~state.visited[pool]
    wrapped = False
    if not fresh.any():
        fresh = reachable & (pool != state.pose.cell)
        wrapped = True
        if not fresh.any():
            return None, 0.0, None, False
    sub = np.flatnonzero(fresh)
    best = sub[np.lexsort((pool[sub], costs[sub]))[0]]
    dp = (dist, parent) if dist is not None else None
    return int(pool[best]), float(costs[best]), dp, wrapped


def agent_decide(state: AgentState, region: SearchRegion, cfg: TeamConfig) -> Decision:
    """Plan the next sensing action under the agent's policy.

    A trapped agent (no feasible candidate at all) is reported rather than
    raising: the caller marks it failed and it emits nothing further.
    """
    if not state.alive or state.finished:
        raise RuntimeError("dead or finished agents do not decide")

    if state.policy == "COVERAGE":
        waypoint, cost, dist_parent, wrapped = _coverage_waypoint(state, region)
        if waypoint is None:
            return Decision(candidate=None, trapped=True)
        if state.kind == "UGV":
            path = traversal_path(region, state.pose.cell, waypoint, dist_parent)
            if len(path.cells) >= 2:
                heading = _heading_of_move(region, path.cells[-2], path.cells[-1], state.pose.heading)
            else:
                heading = state.pose.heading
            action = ugv_fov(region, Pose(waypoint, heading), cfg.noise)
            if action.q == 0:
                for heading in HEADINGS:
                    action = ugv_fov(region, Pose(waypoint, heading), cfg.noise)
                    if action.q > 0:
                        break
            if action.q == 0:
                return Decision(candidate=None, trapped=True)
            return Decision(
                candidate=Candidate(action=action, travel_cost=cost), path=path, wrap_around=wrapped
            )
        action = uav_fov(region, state.pose.cell, waypoint, cfg.noise, cfg.uav_height_m)
        return Decision(
            candidate=Candidate(action=action, travel_cost=cost), wrap_around=wrapped
        )

    # Posterior-sampling policies
    state.em_calls_decide += 1
    post = run_em(state.stats, cfg.hyper, gamma0=state.gamma_warm)
    state.gamma_warm = post.gamma
    state.posterior = post
    draw = sample_beta(post, state.rng)
    dist_parent = shortest_paths(region, state.pose.cell) if state.kind == "UGV" else None
    candidates = enumerate_candidates(
        region,
        state.kind,
        state.pose,
        cfg.reward,
        state.rng,
        noise=cfg.noise,
        uav_height_m=cfg.uav_height_m,
        dist_parent=dist_parent,
    )
    if not candidates:
        return Decision(candidate=None, trapped=True)
    best = select_action(candidates, draw, state.stats, post.gamma, cfg.reward, state.rng)
    path = None
    if state.kind == "UGV":
        path = traversal_path(region, state.pose.cell, best.action.target_cell, dist_parent)
    return Decision(candidate=best, path=path)


def _ingest_own(state: AgentState, obs: Observation) -> Message:
    seq = state.next_seq
    state.next_seq += 1
    state.seen_keys.add((state.agent_id, seq))
    state.stats = ingest(state.stats, obs)
    state.obs_log.append((seq, obs))
    state.visited[list(obs.visible_cells)] = True
    return Message(
        origin=state.agent_id,
        seq=seq,
        kind=OBSERVATION,
        payload=obs.to_dict(),
        send_epoch=-1,  # stamped by the orchestrator when routed
    )


def agent_observe(
    state: AgentState,
    region: SearchRegion,
    truth: GroundTruth,
    cfg: TeamConfig,
    decision: Decision,
    rng: np.random.Generator | None = None,
) -> tuple[list[Observation], list[Message]]:
    """Execute a decision's sensing: synthesize readings, ingest, build outbox.

    Ground agents also log and share readings taken while driving (the field
    of view at each intermediate path cell, facing the direction of motion);
    those never enter reward evaluation, they only enrich the dataset. Returns
    the observations made and the outbound messages (one location message
    plus one per observation). Dead agents observe and emit nothing.
    """
    if not state.alive:
        return [], []
    gen = rng if rng is not None else state.rng
    observations: list[Observation] = []
    messages: list[Message] = []
    action = decision.candidate.action

    if state.kind == "UGV" and decision.path is not None:
        cells = decision.path.cells
        for i in range(1, len(cells) - 1):
            heading = _heading_of_move(region, cells[i - 1], cells[i], state.pose.heading)
            fov = ugv_fov(region, Pose(cells[i], heading), cfg.noise)
            if fov.q:
                obs = synthesize_observation(truth, fov, cfg.noise, gen)
                observations.append(obs)
                messages.append(_ingest_own(state, obs))
        state.visited[list(cells)] = True

    if state.kind == "UGV":
        state.pose = Pose(action.target_cell, action.heading)
    else:
        flown = list(action.visible_cells)
        state.visited[flown] = True
        state.pose = Pose(action.target_cell, state.pose.heading)
    state.visited[state.pose.cell] = True

    if action.q:
        obs = synthesize_observation(truth, action, cfg.noise, gen)
        observations.append(obs)
        messages.append(_ingest_own(state, obs))

    seq = state.next_seq
    state.next_seq += 1
    messages.append(
        Message(
            origin=state.agent_id,
            seq=seq,
            kind=LOCATION,
            payload={"cell": state.pose.cell},
            send_epoch=-1,
        )
    )
    return observations, messages


def deliver_message(state: AgentState, msg: Message, epoch: int) -> bool:
    """Fold a delivered message into the agent; duplicate-safe.

    Returns True when the message changed state. Peer observations also count
    toward coverage bookkeeping, so a coverage agent treats cells a teammate
    reported on as already covered.
    """
    if not state.alive:
        return False
    if msg.kind == OBSERVATION:
        if msg.key in state.seen_keys:
            return False
        state.seen_keys.add(msg.key)
        obs = Observation.from_dict(msg.payload)
        state.stats = ingest(state.stats, obs)
        state.visited[list(obs.visible_cells)] = True
        return True
    if msg.kind == LOCATION:
        prev = state.peer_locations.get(msg.origin)
        if prev is None or prev[1] <= epoch:
            state.peer_locations[msg.origin] = (msg.payload["cell"], epoch)
        return True
    raise ValueError(f"unknown message kind {msg.kind!r}")


def recovered_cells(
    posterior: Posterior, truth: GroundTruth, threshold: float = 0.85
) -> frozenset[int]:
    """True-positive recoveries: target cells whose posterior mean clears the bar."""
    return frozenset(m for m in truth.ooi_cells if posterior.mu[m] >= threshold)
