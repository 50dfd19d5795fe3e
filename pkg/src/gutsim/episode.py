"""Episode orchestration: deterministic round-robin decision epochs.

Every live, unfinished agent takes exactly one decision per epoch, in agent-id
order. The asynchrony that matters is informational: agents accumulate
different simulated clocks (travel plus sensing dwell) and decide on different
partial datasets, while message delivery lags by the configured epoch latency.
Within one epoch no agent sees traffic sent during that epoch.

An episode is fully determined by (scenario, seed). Per-purpose random streams
are derived from the seed with fixed spawn keys: ground-truth placement uses
key (0,), agent i uses key (1, i), the message bus uses key (2,). Agent
streams therefore do not depend on team size, which keeps a no-comms
multi-agent run decision-identical to the matching solo runs.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .agents import AgentState, agent_decide, agent_observe, deliver_message, recovered_cells
from .comms import MessageBus, apply_failures
from .grid import Pose
from .posterior import run_em
from .scenario import (
    Scenario,
    ScenarioError,
    build_scenario_region,
    make_truth,
    team_config,
    validate_scenario,
)

_EPOCH_HARD_CAP = 100_000


@dataclass(frozen=True)
class DecisionRecord:
    agent: int
    epoch: int
    t_sim: float
    policy: str
    kind: str
    target_cell: int
    heading: str | None
    q: int
    reward: float | None
    travel_cost: float
    wrap_around: bool
    newly_recovered: tuple[int, ...]
    recovered_count: int
    recall: float

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "epoch": self.epoch,
            "t_sim": self.t_sim,
            "policy": self.policy,
            "kind": self.kind,
            "target_cell": self.target_cell,
            "heading": self.heading,
            "q": self.q,
            "reward": self.reward,
            "travel_cost": self.travel_cost,
            "wrap_around": self.wrap_around,
            "newly_recovered": list(self.newly_recovered),
            "recovered_count": self.recovered_count,
            "recall": self.recall,
        }


@dataclass
class EpisodeLog:
    scenario_name: str
    algorithm: str
    seed: int
    n_agents: int
    n_oois: int
    records: list[DecisionRecord]
    events: list[dict]
    termination: str
    recovered: tuple[int, ...]
    recall_defined: bool
    recall_final: float
    sim_time_final: float
    decisions_total: int
    decisions_per_agent: dict[int, int]
    em_calls_decide: dict[int, int]
    em_calls_metrics: dict[int, int]
    recovery_sensitivity: list[tuple[float, int]]
    posteriors: dict[int, dict] = field(default_factory=dict)
    message_trace: list[dict] | None = None

    @property
    def success(self) -> bool:
        """Vacuously true with no targets, else full recovery within budget."""
        return self.recall_final >= 1.0

    def agent_trace(self, agent_id: int) -> list[DecisionRecord]:
        return [r for r in self.records if r.agent == agent_id]

    def to_dict(self) -> dict:
        return {
            "scenario_name": self.scenario_name,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "n_agents": self.n_agents,
            "n_oois": self.n_oois,
            "records": [r.to_dict() for r in self.records],
            "events": self.events,
            "termination": self.termination,
            "recovered": list(self.recovered),
            "recall_defined": self.recall_defined,
            "recall_final": self.recall_final,
            "sim_time_final": self.sim_time_final,
            "decisions_total": self.decisions_total,
            "decisions_per_agent": {str(k): v for k, v in self.decisions_per_agent.items()},
            "em_calls_decide": {str(k): v for k, v in self.em_calls_decide.items()},
            "em_calls_metrics": {str(k): v for k, v in self.em_calls_metrics.items()},
            "recovery_sensitivity": [[t, n] for t, n in self.recovery_sensitivity],
            "posteriors": self.posteriors,
            "message_trace": self.message_trace,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def _agent_stream(seed: int, agent_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1, agent_id)))


def run_episode(scenario: Scenario, seed: int, algorithm: str | None = None) -> EpisodeLog:
    """Simulate one episode; raises ScenarioError before simulating if invalid.

    ``algorithm`` overrides every team member's policy, which is how sweeps
    compare planners on otherwise identical scenarios and seeds.
    """
    errors = validate_scenario(scenario)
    if errors:
        raise ScenarioError("invalid scenario:\n  " + "\n  ".join(errors))

    region = build_scenario_region(scenario)
    truth = make_truth(scenario, region, seed)
    cfg = team_config(scenario, algorithm)

    agents: dict[int, AgentState] = {}
    policies: dict[int, str] = {}
    for i, spec in enumerate(scenario.team):
        policy = algorithm if algorithm is not None else spec.policy
        policies[i] = policy
        cell = region.flatten(*spec.launch)
        stream = spec.rng_stream if spec.rng_stream is not None else i
        agents[i] = AgentState.create(
            agent_id=i,
            kind=spec.kind,
            policy=policy,
            pose=Pose(cell, spec.heading),
            n_cells=region.n_cells,
            rng=_agent_stream(seed, stream),
        )
    bus_seed = int(
        np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,))).integers(2**63)
    )
    comms_cfg = scenario.comms.to_config()
    bus = MessageBus(comms_cfg, list(agents), seed=bus_seed)

    n_oois = truth.n_oois
    thresholds = sorted(set(scenario.recovery.sensitivity) | {scenario.recovery.threshold})
    latched: dict[float, set[int]] = {t: set() for t in thresholds}
    recovered: set[int] = latched[scenario.recovery.threshold]

    records: list[DecisionRecord] = []
    events: list[dict] = []
    max_decisions = scenario.budget.max_decisions
    max_seconds = scenario.budget.max_sim_seconds
    termination = "budget"

    epoch = 0
    while epoch < _EPOCH_HARD_CAP:
        for agent_id in apply_failures(agents, epoch, comms_cfg):
            events.append({"epoch": epoch, "agent": agent_id, "event": "hardware_failure"})
        if not any(a.alive for a in agents.values()):
            termination = "all_dead"
            break
        active = [a for a in agents.values() if a.alive and not a.finished]
        if not active:
            termination = "budget"
            break

        for agent in active:
            if not agent.alive:
                continue  # failed earlier this epoch
            for msg in bus.collect(agent.agent_id, epoch):
                deliver_message(agent, msg, epoch)

            decision = agent_decide(agent, region, cfg)
            if decision.trapped:
                agent.alive = False
                events.append({"epoch": epoch, "agent": agent.agent_id, "event": "trapped"})
                continue

            cand = decision.candidate
            if agent.kind == "UGV":
                travel_m = decision.path.length_m if decision.path else 0.0
                speed = scenario.kinematics.ugv_speed_mps
            else:
                travel_m = region.center_distance_m(agent.pose.cell, cand.action.target_cell)
                speed = scenario.kinematics.uav_speed_mps
            agent.sim_time_s += travel_m / speed + scenario.kinematics.sense_dwell_s

            _, messages = agent_observe(agent, region, truth, cfg, decision)
            stamped = [replace(m, send_epoch=epoch) for m in messages]
            bus.route(stamped, epoch)

            agent.em_calls_metrics += 1
            post = run_em(agent.stats, cfg.hyper, gamma0=agent.gamma_warm)
            agent.gamma_warm = post.gamma
            agent.posterior = post
            newly: tuple[int, ...] = ()
            for thr in thresholds:
                found = recovered_cells(post, truth, thr) - latched[thr]
                if thr == scenario.recovery.threshold and found:
                    newly = tuple(sorted(found))
                latched[thr].update(found)

            agent.decisions += 1
            if max_decisions is not None and agent.decisions >= max_decisions:
                agent.finished = True
            if max_seconds is not None and agent.sim_time_s >= max_seconds:
                agent.finished = True

            records.append(
                DecisionRecord(
                    agent=agent.agent_id,
                    epoch=epoch,
                    t_sim=agent.sim_time_s,
                    policy=agent.policy,
                    kind=agent.kind,
                    target_cell=cand.action.target_cell,
                    heading=cand.action.heading,
                    q=cand.action.q,
                    reward=cand.reward,
                    travel_cost=cand.travel_cost,
                    wrap_around=decision.wrap_around,
                    newly_recovered=newly,
                    recovered_count=len(recovered),
                    recall=(len(recovered) / n_oois) if n_oois else 1.0,
                )
            )

        if n_oois and len(recovered) == n_oois:
            termination = "full_recovery"
            epoch += 1
            break
        epoch += 1

    label = algorithm if algorithm is not None else _team_label(policies)
    return EpisodeLog(
        scenario_name=scenario.name,
        algorithm=label,
        seed=seed,
        n_agents=len(agents),
        n_oois=n_oois,
        records=records,
        events=events,
        termination=termination,
        recovered=tuple(sorted(recovered)),
        recall_defined=n_oois > 0,
        recall_final=(len(recovered) / n_oois) if n_oois else 1.0,
        sim_time_final=max((a.sim_time_s for a in agents.values()), default=0.0),
        decisions_total=sum(a.decisions for a in agents.values()),
        decisions_per_agent={i: a.decisions for i, a in agents.items()},
        em_calls_decide={i: a.em_calls_decide for i, a in agents.items()},
        em_calls_metrics={i: a.em_calls_metrics for i, a in agents.items()},
        recovery_sensitivity=[(t, len(latched[t])) for t in thresholds],
        posteriors={
            i: {
                "mu": [float(v) for v in a.posterior.mu],
                "v": [float(v) for v in a.posterior.v_diag],
                "gamma": [float(v) for v in a.posterior.gamma],
            }
            for i, a in agents.items()
            if a.posterior is not None
        },
        message_trace=bus.trace if comms_cfg.record_trace else None,
    )


def _team_label(policies: dict[int, str]) -> str:
    unique = sorted(set(policies.values()))
    return unique[0] if len(unique) == 1 else "MIXED"


def _episode_task(args: tuple[dict, str | None, int]) -> EpisodeLog:
    scenario_dict, algorithm, seed = args
    from .scenario import scenario_from_dict

    return run_episode(scenario_from_dict(scenario_dict), seed, algorithm)


def run_many(
    scenario: Scenario,
    seeds: list[int],
    algorithms: list[str | None],
    jobs: int = 1,
) -> list[EpisodeLog]:
    """Run a (algorithm x seed) grid of episodes, optionally in parallel.

    Results come back sorted by (algorithm, seed) regardless of worker
    scheduling, so downstream artifacts are reproducible with any job count.
    """
    tasks = [
        (scenario.model_dump(by_alias=True, mode="json"), alg, seed)
        for alg in algorithms
        for seed in seeds
    ]
    if jobs <= 1 or len(tasks) <= 1:
        logs = [_episode_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            logs = list(pool.map(_episode_task, tasks))
    return sorted(logs, key=lambda lg: (lg.algorithm, lg.seed))
