"""Episode metrics: recall curves, success rates, decisions-per-recovery.

The flat results CSV (one row per completed epoch) is the only contract with
the plotting frontend, and the aggregate report is computed purely from those
rows so re-ingesting the CSV reproduces it exactly. Floats are written with
``repr`` and therefore round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .episode import EpisodeLog

CSV_COLUMNS = ("algorithm", "seed", "decisions_per_agent", "recall", "simulated_time")


class MetricsError(ValueError):
    """Results table missing columns or malformed rows."""


class Row(NamedTuple):
    algorithm: str
    seed: int
    decisions_per_agent: float
    recall: float
    simulated_time: float


def rows_from_log(log: EpisodeLog) -> list[Row]:
    """One row per epoch: cumulative decisions per agent, recall, team clock."""
    rows: list[Row] = []
    clocks: dict[int, float] = {}
    decisions = 0
    current_epoch = None
    recall = 0.0
    sim_time = 0.0

    def flush():
        rows.append(Row(log.algorithm, log.seed, decisions / log.n_agents, recall, sim_time))

    for rec in log.records:
        if current_epoch is not None and rec.epoch != current_epoch:
            flush()
        current_epoch = rec.epoch
        decisions += 1
        clocks[rec.agent] = rec.t_sim
        sim_time = max(clocks.values())
        recall = rec.recall
    if current_epoch is not None:
        flush()
    return rows


def write_csv(rows: Iterable[Row], fp) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.algorithm,
                row.seed,
                repr(float(row.decisions_per_agent)),
                repr(float(row.recall)),
                repr(float(row.simulated_time)),
            ]
        )


def csv_text(rows: Iterable[Row]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def read_csv(fp) -> list[Row]:
    """Parse a results table, rejecting schema drift with an explicit diff."""
    reader = csv.reader(fp)
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise MetricsError("results table is empty: no header row") from None
    if header != CSV_COLUMNS:
        missing = [c for c in CSV_COLUMNS if c not in header]
        extra = [c for c in header if c not in CSV_COLUMNS]
        raise MetricsError(
            f"results table schema mismatch: expected columns {list(CSV_COLUMNS)}, "
            f"got {list(header)} (missing {missing}, unexpected {extra})"
        )
    rows = []
    for i, raw in enumerate(reader, start=2):
        if not raw:
            continue
        if len(raw) != len(CSV_COLUMNS):
            raise MetricsError(f"line {i}: expected {len(CSV_COLUMNS)} fields, got {len(raw)}")
        try:
            rows.append(Row(raw[0], int(raw[1]), float(raw[2]), float(raw[3]), float(raw[4])))
        except ValueError as exc:
            raise MetricsError(f"line {i}: {exc}") from exc
    return rows


@dataclass(frozen=True)
class AlgorithmMetrics:
    algorithm: str
    seeds: tuple[int, ...]
    success_rate: float
    mean_final_recall: float
    mean_t_over_c: float | None
    mean_curve: tuple[tuple[float, float], ...]
    per_seed_final: tuple[tuple[int, float, float], ...]  # (seed, decisions/agent, recall)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seeds": list(self.seeds),
            "success_rate": self.success_rate,
            "mean_final_recall": self.mean_final_recall,
            "mean_t_over_c": self.mean_t_over_c,
            "mean_curve": [[d, r] for d, r in self.mean_curve],
            "per_seed_final": [[s, d, r] for s, d, r in self.per_seed_final],
        }


@dataclass(frozen=True)
class MetricsReport:
    n_agents: int
    n_oois: int
    per_algorithm: tuple[AlgorithmMetrics, ...]
    wall_runtime_s: float = field(compare=False, default=0.0)

    def algorithm(self, name: str) -> AlgorithmMetrics:
        for m in self.per_algorithm:
            if m.algorithm == name:
                return m
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "n_oois": self.n_oois,
            "wall_runtime_s": self.wall_runtime_s,
            "per_algorithm": [m.to_dict() for m in self.per_algorithm],
        }


def _step_value(curve: list[tuple[float, float]], x: float) -> float:
    """Recall of a per-seed curve carried forward to decision count ``x``."""
    value = 0.0
    for d, r in curve:
        if d <= x:
            value = r
        else:
            break
    return value


def aggregate_rows(
    rows: list[Row],
    n_agents: int,
    n_oois: int,
    wall_runtime_s: float = 0.0,
) -> MetricsReport:
    """Aggregate per-epoch rows into per-algorithm summaries.

    Mean curves are step-function means over the union of decision counts
    seen across seeds; T/C uses total decisions over recoveries and averages
    over the seeds that recovered anything.
    """
    if not rows:
        raise MetricsError("cannot aggregate an empty results table")
    by_alg: dict[str, dict[int, list[tuple[float, float]]]] = {}
    for row in rows:
        by_alg.setdefault(row.algorithm, {}).setdefault(row.seed, []).append(
            (row.decisions_per_agent, row.recall)
        )
    summaries = []
    for alg in sorted(by_alg):
        curves = by_alg[alg]
        seeds = tuple(sorted(curves))
        grid = sorted({d for curve in curves.values() for d, _ in curve})
        mean_curve = tuple(
            (x, sum(_step_value(curves[s], x) for s in seeds) / len(seeds)) for x in grid
        )
        finals = []
        t_over_c = []
        successes = 0
        for s in seeds:
            d_final, r_final = curves[s][-1]
            finals.append((s, d_final, r_final))
            if r_final >= 1.0:
                successes += 1
            found = round(r_final * n_oois)
            if found > 0:
                t_over_c.append(d_final * n_agents / found)
        summaries.append(
            AlgorithmMetrics(
                algorithm=alg,
                seeds=seeds,
                success_rate=successes / len(seeds),
                mean_final_recall=sum(r for _, _, r in finals) / len(finals),
                mean_t_over_c=(sum(t_over_c) / len(t_over_c)) if t_over_c else None,
                mean_curve=mean_curve,
                per_seed_final=tuple(finals),
            )
        )
    return MetricsReport(
        n_agents=n_agents,
        n_oois=n_oois,
        per_algorithm=tuple(summaries),
        wall_runtime_s=wall_runtime_s,
    )


def compute_metrics(logs: list[EpisodeLog], wall_runtime_s: float = 0.0) -> MetricsReport:
    if not logs:
        raise MetricsError("no episode logs to aggregate")
    n_agents = logs[0].n_agents
    n_oois = logs[0].n_oois
    rows = [row for log in logs for row in rows_from_log(log)]
    return aggregate_rows(rows, n_agents, n_oois, wall_runtime_s)


def metrics_from_csv(fp, n_agents: int, n_oois: int) -> MetricsReport:
    return aggregate_rows(read_csv(fp), n_agents, n_oois)


def sensitivity_summary(logs: list[EpisodeLog]) -> dict:
    """Mean recovered-target counts per confirmation threshold, per algorithm."""
    acc: dict[str, dict[float, list[int]]] = {}
    for log in logs:
        per = acc.setdefault(log.algorithm, {})
        for thr, n in log.recovery_sensitivity:
            per.setdefault(thr, []).append(n)
    return {
        alg: {repr(thr): sum(v) / len(v) for thr, v in sorted(per.items())}
        for alg, per in sorted(acc.items())
    }
