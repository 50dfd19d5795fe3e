"""HTTP facade over the simulator: validate, run, sweep, and bench endpoints.

The service is stateless; every request carries its scenario (inline YAML
text or a parsed mapping) and the response carries all produced artifacts
(episode logs, metrics, results CSV), so clients own persistence. The CLI is
a thin client of this app, talking to it in-process by default.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, model_validator

from . import __version__
from .bench import run_bench
from .episode import run_many
from .metrics import compute_metrics, csv_text, rows_from_log, sensitivity_summary
from .scenario import Scenario, ScenarioError, scenario_from_dict, scenario_from_yaml, validate_scenario

app = FastAPI(
    title="gutsim",
    version=__version__,
    description="Multi-agent active-search simulation service.",
)


class ScenarioPayload(BaseModel):
    scenario: dict | None = None
    scenario_yaml: str | None = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.scenario is None) == (self.scenario_yaml is None):
            raise ValueError("provide exactly one of scenario or scenario_yaml")
        return self

    def parse(self) -> Scenario:
        if self.scenario is not None:
            return scenario_from_dict(self.scenario)
        return scenario_from_yaml(self.scenario_yaml)


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str]


class RunRequest(ScenarioPayload):
    seeds: list[int] | None = None
    algorithm: str | None = Field(default=None, pattern="^(GUTS|NATS|COVERAGE)$")
    subsample: float | None = Field(default=None, gt=0, le=1)
    jobs: int = Field(default=1, ge=1)
    include_logs: bool = True


class SweepRequest(RunRequest):
    algorithms: list[str] = Field(default=["GUTS", "NATS", "COVERAGE"], min_length=1)


class RunResponse(BaseModel):
    episodes: list[dict]
    metrics: dict
    sensitivity: dict
    csv: str


class BenchRequest(BaseModel):
    cells: int = Field(default=10_000, ge=4)
    observations: int = Field(default=500, ge=0)
    candidates: int = Field(default=2_000, ge=1)
    subsample: float = Field(default=0.05, gt=0, le=1)
    naive_esteps: int = Field(default=1, ge=1)
    seed: int = 0


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "service": "gutsim", "version": __version__}


def _parse_scenario(payload: ScenarioPayload) -> Scenario:
    try:
        return payload.parse()
    except ScenarioError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/scenario/validate", response_model=ValidateResponse)
def validate(payload: ScenarioPayload) -> ValidateResponse:
    try:
        scenario = payload.parse()
    except ScenarioError as exc:
        return ValidateResponse(valid=False, errors=[str(exc)])
    errors = validate_scenario(scenario)
    return ValidateResponse(valid=not errors, errors=errors)


def _execute(scenario: Scenario, seeds: list[int], algorithms: list[str | None], req: RunRequest) -> RunResponse:
    if req.subsample is not None:
        scenario = scenario.model_copy(
            update={"reward": scenario.reward.model_copy(update={"subsample_frac": req.subsample})}
        )
    errors = validate_scenario(scenario)
    if errors:
        raise HTTPException(status_code=400, detail="invalid scenario:\n" + "\n".join(errors))
    if not seeds:
        raise HTTPException(status_code=400, detail="no seeds given (request or scenario)")
    t0 = time.perf_counter()
    try:
        logs = run_many(scenario, seeds, algorithms, jobs=req.jobs)
    except ScenarioError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    wall = time.perf_counter() - t0
    report = compute_metrics(logs, wall_runtime_s=wall)
    rows = [row for log in logs for row in rows_from_log(log)]
    return RunResponse(
        episodes=[log.to_dict() for log in logs] if req.include_logs else [],
        metrics=report.to_dict(),
        sensitivity=sensitivity_summary(logs),
        csv=csv_text(rows),
    )


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    scenario = _parse_scenario(req)
    seeds = req.seeds if req.seeds else scenario.seeds
    return _execute(scenario, seeds, [req.algorithm], req)


@app.post("/sweep", response_model=RunResponse)
def sweep(req: SweepRequest) -> RunResponse:
    scenario = _parse_scenario(req)
    seeds = req.seeds if req.seeds else scenario.seeds
    return _execute(scenario, seeds, list(req.algorithms), req)


@app.post("/bench")
def bench(req: BenchRequest) -> dict:
    try:
        result = run_bench(
            n_cells=req.cells,
            n_observations=req.observations,
            n_candidates=req.candidates,
            subsample_frac=req.subsample,
            naive_esteps=req.naive_esteps,
            seed=req.seed,
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return result.to_dict()
