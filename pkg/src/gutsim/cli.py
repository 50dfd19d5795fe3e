"""Command-line client for the simulation service.

By default commands talk to the FastAPI app in-process (no server needed);
pass ``--server http://host:port`` to target a running instance instead. The
client writes all returned artifacts — per-episode JSON logs, an aggregate
metrics report, and the flat results CSV consumed by the plotting frontend —
under the chosen output directory.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    # in-process: drive the ASGI app directly, no server required
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _parse_seeds(text: str) -> list[int]:
    """Comma-separated seeds, with ``a-b`` inclusive ranges, e.g. ``0-4,10``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _read_scenario(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise click.ClickException(f"scenario file not found: {path}")
    return p.read_text(encoding="utf-8")


def _post(client: httpx.Client, url: str, payload: dict) -> dict:
    resp = client.post(url, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise click.ClickException(f"{url} failed ({resp.status_code}): {detail}")
    return resp.json()


def _write_outputs(out_dir: str, body: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    episodes = out / "episodes"
    episodes.mkdir(exist_ok=True)
    for ep in body["episodes"]:
        name = f"{ep['algorithm']}_{ep['seed']}.json"
        (episodes / name).write_bytes(
            json.dumps(ep, sort_keys=True, separators=(",", ":")).encode()
        )
    (out / "metrics.json").write_text(
        json.dumps({"metrics": body["metrics"], "sensitivity": body["sensitivity"]}, indent=2)
    )
    (out / "results.csv").write_text(body["csv"])
    click.echo(f"wrote {len(body['episodes'])} episode logs, metrics.json, results.csv -> {out}")


def _echo_summary(body: dict) -> None:
    for alg in body["metrics"]["per_algorithm"]:
        t_over_c = alg["mean_t_over_c"]
        tc = f"{t_over_c:.2f}" if t_over_c is not None else "n/a"
        click.echo(
            f"  {alg['algorithm']:<9} success_rate={alg['success_rate']:.2f} "
            f"mean_final_recall={alg['mean_final_recall']:.3f} decisions_per_recovery={tc}"
        )


@click.group()
@click.option("--server", default=None, envvar="GUTSIM_SERVER", help="Remote service URL; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Multi-agent active-search simulation harness."""
    ctx.obj = {"server": server}


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=str)
@click.pass_context
def validate(ctx, scenario_path):
    """Check a scenario file against the schema; exit 0 when valid."""
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/scenario/validate", {"scenario_yaml": _read_scenario(scenario_path)})
    if body["valid"]:
        click.echo("scenario OK")
        return
    click.echo("scenario INVALID:", err=True)
    for err in body["errors"]:
        click.echo(f"  {err}", err=True)
    sys.exit(1)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=str)
@click.option("--seeds", default=None, help="Comma/range list, e.g. 0-9,20. Defaults to the scenario's seeds.")
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--algorithm", type=click.Choice(["GUTS", "NATS", "COVERAGE"]), default=None,
              help="Override every agent's policy.")
@click.option("--subsample", type=float, default=None, help="Candidate subsampling fraction in (0, 1].")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def run(ctx, scenario_path, seeds, out_dir, algorithm, subsample, jobs):
    """Run episodes of one scenario and persist logs, metrics, and CSV."""
    payload = {
        "scenario_yaml": _read_scenario(scenario_path),
        "seeds": _parse_seeds(seeds) if seeds else None,
        "algorithm": algorithm,
        "subsample": subsample,
        "jobs": jobs,
    }
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/run", payload)
    _write_outputs(out_dir, body)
    _echo_summary(body)


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=str)
@click.option("--seeds", default=None)
@click.option("--out", "out_dir", required=True, type=str)
@click.option("--algorithms", default="GUTS,NATS,COVERAGE", show_default=True)
@click.option("--subsample", type=float, default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def sweep(ctx, scenario_path, seeds, out_dir, algorithms, subsample, jobs):
    """Run an algorithm x seed comparison grid on one scenario."""
    algs = [a.strip() for a in algorithms.split(",") if a.strip()]
    payload = {
        "scenario_yaml": _read_scenario(scenario_path),
        "seeds": _parse_seeds(seeds) if seeds else None,
        "algorithms": algs,
        "subsample": subsample,
        "jobs": jobs,
    }
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/sweep", payload)
    _write_outputs(out_dir, body)
    _echo_summary(body)


@main.command()
@click.option("--cells", type=int, default=10_000, show_default=True, help="Grid size (perfect square).")
@click.option("--observations", type=int, default=500, show_default=True)
@click.option("--candidates", type=int, default=2_000, show_default=True)
@click.option("--subsample", type=float, default=0.05, show_default=True)
@click.option("--naive-esteps", type=int, default=1, show_default=True,
              help="Dense E-steps actually executed before extrapolating.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def bench(ctx, cells, observations, candidates, subsample, naive_esteps, seed):
    """Time the fast posterior/selection path against the naive dense one."""
    payload = {
        "cells": cells,
        "observations": observations,
        "candidates": candidates,
        "subsample": subsample,
        "naive_esteps": naive_esteps,
        "seed": seed,
    }
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/bench", payload)
    from .bench import BenchResult

    for line in BenchResult(**body).summary_lines():
        click.echo(line)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
