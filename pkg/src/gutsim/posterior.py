"""Sparse Bayesian posterior over the flattened occupancy vector.

Model: each cell m has an independent zero-mean Gaussian prior with variance
gamma_m; the gamma_m carry an inverse-gamma hyperprior IG(a, b) and are fit by
EM. Because every measurement row is one-hot and reading noise is independent
across cells, the posterior covariance is diagonal and the E-step reduces to
scalar updates:

    v_m  = 1 / (1/gamma_m + P_m)        P_m = sum of reading precisions at m
    mu_m = v_m * W_m                    W_m = sum of (reading / variance) at m

IMPORTANT CONVENTION: the measurement weight matrix in the Gaussian update is
the noise PRECISION (per-reading 1/sigma^2), not the raw variance. Feeding raw
variances would up-weight the noisiest readings. ``SufficientStats``
accumulates the precision-weighted aggregates additively, so datasets can be
merged in any order.

The M-step ``gamma_m = (v_m + mu_m^2 + 2b) / (1 + 2a)`` is applied only to
cells with at least one reading; never-observed cells keep the zero-statistics
fixed point ``2b / (1 + 2a)``, so an empty dataset leaves the prior untouched
and EM on it converges immediately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from .sensing import Observation


@dataclass(frozen=True)
class SblHyper:
    """Hyperparameters of the sparsity prior and EM stopping rule."""

    a: float = 0.1
    b: float = 1.0
    em_tol: float = 1e-4
    em_max_iter: int = 50

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("inverse-gamma parameters must be positive")
        if self.em_tol <= 0 or self.em_max_iter < 1:
            raise ValueError("need em_tol > 0 and em_max_iter >= 1")

    @property
    def gamma_init(self) -> float:
        """Zero-statistics fixed point of the M-step."""
        return 2.0 * self.b / (1.0 + 2.0 * self.a)


@dataclass(frozen=True)
class SufficientStats:
    """Additive precision-weighted aggregates of a measurement dataset.

    Immutable; ``ingest`` returns a new snapshot, so instances are safe to
    hand between agent loops.
    """

    precision_diag: np.ndarray
    weighted_obs: np.ndarray
    n_measurements: int

    @classmethod
    def empty(cls, n_cells: int) -> "SufficientStats":
        p = np.zeros(n_cells)
        w = np.zeros(n_cells)
        p.setflags(write=False)
        w.setflags(write=False)
        return cls(precision_diag=p, weighted_obs=w, n_measurements=0)

    @property
    def n_cells(self) -> int:
        return len(self.precision_diag)


def ingest(stats: SufficientStats, obs: Observation) -> SufficientStats:
    """Fold one observation into the aggregates; order-independent."""
    var = np.asarray(obs.noise_var)
    if np.any(var <= 0):
        raise ValueError("observation noise variances must be positive")
    cells = np.asarray(obs.visible_cells, dtype=np.int64)
    prec = stats.precision_diag.copy()
    weighted = stats.weighted_obs.copy()
    prec[cells] += 1.0 / var
    weighted[cells] += np.asarray(obs.y) / var
    prec.setflags(write=False)
    weighted.setflags(write=False)
    return SufficientStats(
        precision_diag=prec,
        weighted_obs=weighted,
        n_measurements=stats.n_measurements + obs.q,
    )


def e_step(stats: SufficientStats, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance diagonal for fixed prior variances.

    Exactly equals the dense-inversion computation because the stacked
    measurement matrix has one-hot rows and diagonal noise.
    """
    if np.any(gamma <= 0):
        raise ValueError("gamma must be positive elementwise")
    v = 1.0 / (1.0 / gamma + stats.precision_diag)
    mu = v * stats.weighted_obs
    return mu, v


def m_step(mu: np.ndarray, v_diag: np.ndarray, hyper: SblHyper) -> np.ndarray:
    """Per-cell prior-variance update; strictly positive since b > 0."""
    return (v_diag + mu * mu + 2.0 * hyper.b) / (1.0 + 2.0 * hyper.a)


@dataclass(frozen=True)
class Posterior:
    """EM output: posterior moments plus the fitted prior variances."""

    mu: np.ndarray
    v_diag: np.ndarray
    gamma: np.ndarray
    converged: bool
    n_iter: int
    em_deltas: tuple[float, ...]


@dataclass(frozen=True)
class BetaSample:
    """One draw from the (diagonal-covariance) posterior."""

    beta_tilde: np.ndarray


def run_em(
    stats: SufficientStats,
    hyper: SblHyper,
    gamma0: np.ndarray | None = None,
) -> Posterior:
    """Alternate E/M steps until the largest relative gamma change is small.

    ``gamma0`` warm-starts the prior variances (e.g. from the previous
    decision's fit); by default they start at the zero-statistics fixed
    point. Only observed cells are updated. Returns the last iterate with
    ``converged=False`` if the tolerance is not met within ``em_max_iter``.
    """
    n = stats.n_cells
    gamma = np.full(n, hyper.gamma_init) if gamma0 is None else np.array(gamma0, dtype=float)
    observed = stats.precision_diag > 0
    deltas: list[float] = []
    converged = False
    for _ in range(hyper.em_max_iter):
        mu, v = e_step(stats, gamma)
        new_gamma = gamma.copy()
        updated = m_step(mu, v, hyper)
        new_gamma[observed] = updated[observed]
        delta = float(np.max(np.abs(new_gamma - gamma) / gamma)) if n else 0.0
        deltas.append(delta)
        gamma = new_gamma
        if delta < hyper.em_tol:
            converged = True
            break
    mu, v = e_step(stats, gamma)
    for arr in (mu, v, gamma):
        arr.setflags(write=False)
    return Posterior(
        mu=mu,
        v_diag=v,
        gamma=gamma,
        converged=converged,
        n_iter=len(deltas),
        em_deltas=tuple(deltas),
    )


def sample_beta(post: Posterior, rng: np.random.Generator) -> BetaSample:
    """Independent per-cell Gaussian draw around the posterior mean."""
    z = rng.standard_normal(len(post.mu))
    beta = post.mu + np.sqrt(post.v_diag) * z
    beta.setflags(write=False)
    return BetaSample(beta_tilde=beta)


def export_posterior(post: Posterior, fp: IO[str]) -> None:
    """Write a per-cell (mu, v, gamma) snapshot as tab-separated text."""
    fp.write("cell\tmu\tv\tgamma\n")
    for m in range(len(post.mu)):
        fp.write(
            f"{m}\t{float(post.mu[m])!r}\t{float(post.v_diag[m])!r}\t{float(post.gamma[m])!r}\n"
        )
