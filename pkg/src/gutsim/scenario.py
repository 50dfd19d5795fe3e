"""Scenario file schema (versioned) and construction helpers.

A scenario is a YAML document validated against the pydantic models below.
Unknown keys are rejected so schema violations fail loudly. See the shipped
``scenarios/`` directory for working examples and the README for field-level
documentation.
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .agents import TeamConfig
from .comms import CommsConfig
from .grid import GridError, GroundTruth, SearchRegion, build_region, place_oois, truth_from_cells
from .planner import RewardConfig
from .posterior import SblHyper
from .sensing import NoiseConfig


class ScenarioError(ValueError):
    """Malformed or internally inconsistent scenario description."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class CostmapSpec(_Model):
    uniform: float = Field(default=1.0, ge=0)
    grid: Optional[list[list[float]]] = None
    impassable: list[tuple[int, int]] = Field(default_factory=list)


class RegionSpec(_Model):
    polygon: list[tuple[float, float]] = Field(min_length=3)
    cell_size_m: float = Field(default=30.0, gt=0)
    costmap: CostmapSpec = Field(default_factory=CostmapSpec)


class OoiSpec(_Model):
    count: Optional[int] = Field(default=None, ge=0)
    cells: Optional[list[tuple[int, int]]] = None
    seed: Optional[int] = Field(default=None, ge=0)
    passable_only: bool = True

    @model_validator(mode="after")
    def _one_of(self):
        if (self.count is None) == (self.cells is None):
            raise ValueError("give exactly one of oois.count or oois.cells")
        return self


class AgentSpec(_Model):
    kind: Literal["UGV", "UAV"]
    policy: Literal["GUTS", "NATS", "COVERAGE"] = "GUTS"
    launch: tuple[int, int]
    heading: Literal["N", "E", "S", "W"] = "N"
    # Random-stream key; defaults to the agent's position in the team list.
    # Pin it to reproduce one agent's decision stream in a reduced team.
    rng_stream: Optional[int] = Field(default=None, ge=0)


class NoiseSpec(_Model):
    sigma2_min: float = Field(default=0.01, gt=0)
    kappa: float = Field(default=0.005, ge=0)
    sigma2_cap: float = Field(default=0.5, gt=0, le=0.5)
    fp_prob: float = Field(default=0.0, ge=0, lt=1)
    fp_confidence: float = Field(default=0.7, gt=0, le=1)
    fp_ellipsoid_vol_m3: float = Field(default=25.0, ge=0)

    def to_config(self) -> NoiseConfig:
        return NoiseConfig(**self.model_dump())


class CommsSpec(_Model):
    p_deliver_obs: float = Field(default=1.0, ge=0, le=1)
    p_deliver_loc: float = Field(default=1.0, ge=0, le=1)
    latency_decisions: int = Field(default=0, ge=0)
    failure_schedule: list[tuple[int, int]] = Field(default_factory=list)
    duplicate_prob: float = Field(default=0.0, ge=0, le=1)
    record_trace: bool = False

    def to_config(self) -> CommsConfig:
        d = self.model_dump()
        d["failure_schedule"] = tuple(tuple(x) for x in d["failure_schedule"])
        return CommsConfig(**d)


class RewardSpec(_Model):
    lambda_: float = Field(default=0.01, ge=0, alias="lambda")
    tau_sample: float = Field(default=0.1, gt=0)
    tau_estimate: float = Field(default=0.1, gt=0)
    subsample_frac: float = Field(default=1.0, gt=0, le=1)
    mc_samples: int = Field(default=0, ge=0)

    def to_config(self, algorithm: str) -> RewardConfig:
        return RewardConfig(algorithm=algorithm, **self.model_dump())


class SblSpec(_Model):
    a: float = Field(default=0.1, gt=0)
    b: float = Field(default=1.0, gt=0)
    em_tol: float = Field(default=1e-4, gt=0)
    em_max_iter: int = Field(default=50, ge=1)

    def to_config(self) -> SblHyper:
        return SblHyper(**self.model_dump())


class BudgetSpec(_Model):
    max_decisions: Optional[int] = Field(default=None, ge=1)
    max_sim_seconds: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _at_least_one(self):
        if self.max_decisions is None and self.max_sim_seconds is None:
            raise ValueError("budget needs max_decisions and/or max_sim_seconds")
        return self


class KinematicsSpec(_Model):
    ugv_speed_mps: float = Field(default=2.0, gt=0)
    uav_speed_mps: float = Field(default=10.0, gt=0)
    uav_height_m: float = Field(default=80.0, gt=0)
    sense_dwell_s: float = Field(default=10.0, gt=0)


class RecoverySpec(_Model):
    threshold: float = Field(default=0.85, gt=0)
    sensitivity: list[float] = Field(default_factory=lambda: [0.7, 0.85, 0.95])


class Scenario(_Model):
    version: Literal[1] = 1
    name: str = "scenario"
    region: RegionSpec
    oois: OoiSpec
    team: list[AgentSpec] = Field(min_length=1)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    comms: CommsSpec = Field(default_factory=CommsSpec)
    reward: RewardSpec = Field(default_factory=RewardSpec)
    sbl: SblSpec = Field(default_factory=SblSpec)
    budget: BudgetSpec
    kinematics: KinematicsSpec = Field(default_factory=KinematicsSpec)
    recovery: RecoverySpec = Field(default_factory=RecoverySpec)
    seeds: list[int] = Field(default_factory=list)

    def n_oois(self) -> int:
        return self.oois.count if self.oois.count is not None else len(self.oois.cells)


def scenario_from_dict(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        lines = [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()]
        raise ScenarioError("invalid scenario:\n  " + "\n  ".join(lines)) from exc


def scenario_from_yaml(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a mapping")
    return scenario_from_dict(data)


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fp:
        return scenario_from_yaml(fp.read())


def scenario_to_yaml(sc: Scenario) -> str:
    return yaml.safe_dump(sc.model_dump(by_alias=True, mode="json"), sort_keys=False)


def build_scenario_region(sc: Scenario) -> SearchRegion:
    spec = sc.region
    if spec.costmap.grid is not None:
        cost = np.asarray(spec.costmap.grid, dtype=float)
    else:
        cost = spec.costmap.uniform
    try:
        region = build_region(spec.polygon, spec.cell_size_m, cost)
    except GridError as exc:
        raise ScenarioError(str(exc)) from exc
    if spec.costmap.impassable:
        cost_arr = np.array(region.traversal_cost)
        for row, col in spec.costmap.impassable:
            if not (0 <= row < region.rows and 0 <= col < region.cols):
                raise ScenarioError(f"impassable cell ({row}, {col}) outside grid")
            cost_arr[row, col] = np.inf
        cost_arr.setflags(write=False)
        region = SearchRegion(
            rows=region.rows,
            cols=region.cols,
            cell_size_m=region.cell_size_m,
            polygon=region.polygon,
            origin_xy=region.origin_xy,
            traversal_cost=cost_arr,
            in_region=region.in_region,
        )
    return region


def make_truth(sc: Scenario, region: SearchRegion, episode_seed: int) -> GroundTruth:
    """Ground truth for one episode: explicit cells, or seeded placement.

    With ``oois.seed`` unset the placement derives from the episode seed, so
    different episodes draw different layouts while algorithms sharing a seed
    see identical ones.
    """
    if sc.oois.cells is not None:
        return truth_from_cells(region, sc.oois.cells)
    seed_src = sc.oois.seed if sc.oois.seed is not None else episode_seed
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed_src, spawn_key=(0,)))
    return place_oois(region, sc.oois.count, rng, passable_only=sc.oois.passable_only)


def validate_scenario(sc: Scenario) -> list[str]:
    """Cross-field checks that need the built region; empty list means valid."""
    errors: list[str] = []
    try:
        region = build_scenario_region(sc)
    except ScenarioError as exc:
        return [str(exc)]
    for i, agent in enumerate(sc.team):
        row, col = agent.launch
        if not (0 <= row < region.rows and 0 <= col < region.cols):
            errors.append(f"team[{i}]: launch ({row}, {col}) outside the {region.rows}x{region.cols} grid")
            continue
        cell = region.flatten(row, col)
        if not region.is_in_region(cell):
            errors.append(f"team[{i}]: launch ({row}, {col}) outside the search polygon")
        if agent.kind == "UGV" and not region.is_passable(cell):
            errors.append(f"team[{i}]: ground launch ({row}, {col}) is impassable")
    if sc.oois.cells is not None:
        try:
            truth_from_cells(region, sc.oois.cells)
        except GridError as exc:
            errors.append(str(exc))
    else:
        pool = region.ground_cells if sc.oois.passable_only else region.in_region_cells
        if sc.oois.count > len(pool):
            errors.append(
                f"oois.count {sc.oois.count} exceeds the {len(pool)} placeable cells"
            )
    for agent_id, epoch in sc.comms.failure_schedule:
        if not 0 <= agent_id < len(sc.team):
            errors.append(f"failure_schedule names unknown agent {agent_id}")
        if epoch < 0:
            errors.append("failure_schedule epochs must be nonnegative")
    return errors


def team_config(sc: Scenario, algorithm: str | None = None) -> TeamConfig:
    """Collapse scenario sections into the per-agent config bundle.

    ``algorithm`` overrides every agent's policy-facing reward mode; coverage
    agents ignore it.
    """
    alg = algorithm if algorithm in ("GUTS", "NATS") else "GUTS"
    return TeamConfig(
        noise=sc.noise.to_config(),
        reward=sc.reward.to_config(alg),
        hyper=sc.sbl.to_config(),
        uav_height_m=sc.kinematics.uav_height_m,
        recovery_threshold=sc.recovery.threshold,
    )


def demo_scenario() -> Scenario:
    """Desk-scale default: 20x20 grid, a few impassable blobs, 5 targets, 2 UGVs."""
    blobs = [(r, c) for r in range(5, 8) for c in range(5, 8)]
    blobs += [(r, c) for r in range(12, 15) for c in range(13, 16)]
    return Scenario(
        name="demo",
        region=RegionSpec(
            polygon=[(0, 0), (600, 0), (600, 600), (0, 600)],
            cell_size_m=30.0,
            costmap=CostmapSpec(uniform=1.0, impassable=blobs),
        ),
        oois=OoiSpec(count=5),
        team=[
            AgentSpec(kind="UGV", policy="GUTS", launch=(0, 0), heading="E"),
            AgentSpec(kind="UGV", policy="GUTS", launch=(19, 19), heading="W"),
        ],
        budget=BudgetSpec(max_decisions=60),
        seeds=[0, 1, 2, 3, 4],
    )


def timed_two_ugv_scenario() -> Scenario:
    """The simulated comparison shape: 2 UGVs, 5 targets, 1000 s budget."""
    sc = demo_scenario()
    return sc.model_copy(
        update={
            "name": "two_ugv_1000s",
            "budget": BudgetSpec(max_sim_seconds=1000.0),
        }
    )
