"""Two-sample graph testing under vertex shuffling.

One graph of each pair is partly shuffled; OmniMatch (hard or k-NN soft
correction) realigns it before a Procrustes statistic is computed. Critical
values come from Monte-Carlo simulation of the null model.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .assign import omnimatch, soft_match
from .core import SeedSplit, apply_shuffle
from .models import (
    ModelConfig,
    perturb_latents,
    random_shuffle,
    sample_dirichlet_latents,
    sample_rdpg,
)
from .parallel import run_replicates
from .spectral import EmbeddingMatrix, as_array, procrustes


@dataclass(frozen=True)
class TestConfig:
    """Shuffled two-sample power study.

    ``v0`` vertices of the second graph are shuffled under the null; each
    ``v1`` in ``v1_grid`` and ``err`` in ``err_grid`` defines an alternative
    cell. ``method`` is ``"hard"`` or ``"soft"`` (k nearest neighbours).
    """

    __test__ = False  # not a pytest class

    n: int = 500
    d: int = 10
    v0: int = 120
    v1_grid: tuple = (120,)
    err_grid: tuple = (0.01,)
    alpha: float = 0.05
    n_mc: int = 200
    method: str = "hard"
    k: int = 5
    seed: int = 0
    concentration_len: int | None = None
    noise: str = "shift"

    def __post_init__(self):
        object.__setattr__(self, "v1_grid", tuple(int(v) for v in self.v1_grid))
        object.__setattr__(self, "err_grid", tuple(float(e) for e in self.err_grid))
        if self.concentration_len is None:
            object.__setattr__(self, "concentration_len", self.d + 2)
        if not 0 <= self.v0 <= self.n or any(not 0 <= v <= self.n for v in self.v1_grid):
            raise ValueError("shuffle counts must lie in [0, n]")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n_mc < 20:
            raise ValueError("n_mc must be at least 20")
        if self.method not in ("hard", "soft"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if any(e < 0 for e in self.err_grid):
            raise ValueError("err must be non-negative")
        if self.noise not in ("shift", "uniform"):
            raise ValueError(f"unknown noise mode {self.noise!r}")
        if self.n - max((self.v0,) + self.v1_grid) < self.d:
            raise ValueError("too few seeds for the embedding dimension")

    @property
    def method_label(self) -> str:
        return "hard" if self.method == "hard" else f"soft{self.k}"


@dataclass
class TestOutcome:
    __test__ = False

    statistic: float
    critical_value: float
    reject: bool
    null_sample: list


@dataclass
class PowerStudy:
    config: TestConfig
    null_sample: list
    critical_value: float
    cells: list = field(default_factory=list)
    alternative_samples: dict = field(default_factory=dict)

    def power(self, err: float, v1: int) -> float:
        for c in self.cells:
            if c["err"] == err and c["v1"] == v1:
                return c["power"]
        raise KeyError((err, v1))

    def rows(self) -> list[dict]:
        return [dict(c) for c in self.cells]

    def summary(self) -> dict:
        return {
            "config": asdict(self.config),
            "critical_value": self.critical_value,
            "cells": self.rows(),
        }


def test_statistic(x, y) -> float:
    """Procrustes distance ``min_W ||x - y W||_F``."""
    return procrustes(x, y).residual


test_statistic.__test__ = False


def corrected_embeddings(a, b, split: SeedSplit, d: int, method: str = "hard", k: int = 5):
    """Full-graph embeddings of ``a`` and ``b`` with ``b`` realigned to ``a``.

    Seed rows come from the joint seed embedding and unseeded rows from the
    OOS step. With ``method="hard"`` b's unseeded rows are reordered by the
    recovered assignment; with ``"soft"`` each is replaced by the mean of
    its ``k`` nearest candidates.
    """
    res = omnimatch([a, b], split, d=d, mode="pairwise")
    seed_a, seed_b = (as_array(e) for e in res.seed_embeddings)
    oos_a, oos_b = (as_array(e) for e in res.oos_embeddings)
    if split.u == 0:
        fixed = oos_b
    elif method == "hard":
        fixed = oos_b[res.permutation(0, 1).image]
    elif method == "soft":
        sm = soft_match(res.cost(0, 1), k)
        fixed = oos_b[sm.candidates].mean(axis=1)
    else:
        raise ValueError(f"unknown method {method!r}")
    flags = np.r_[np.ones(split.s, bool), np.zeros(split.u, bool)]
    x = EmbeddingMatrix(np.vstack([seed_a, oos_a]), graph_index=np.zeros(split.n), in_sample=flags)
    y = EmbeddingMatrix(np.vstack([seed_b, fixed]), graph_index=np.ones(split.n), in_sample=flags)
    return x, y


def critical_value(null_sample, alpha: float) -> float:
    """The ``ceil((1 - alpha) * n)``-th smallest null value."""
    vals = np.sort(np.asarray(null_sample, dtype=float))
    if vals.size == 0:
        raise ValueError("empty null sample")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rank = math.ceil((1 - alpha) * vals.size - 1e-9)
    return float(vals[max(rank, 1) - 1])


def decide(statistic: float, null_sample, alpha: float) -> TestOutcome:
    crit = critical_value(null_sample, alpha)
    return TestOutcome(float(statistic), crit, bool(statistic >= crit), list(null_sample))


def simulate_statistic(n: int, d: int, conc: int, err: float, v: int, method: str, k: int,
                       seed_seq, noise: str = "shift") -> float:
    """One replicate: draw the pair, shuffle ``v`` vertices of B, correct, score."""
    rng = np.random.default_rng(seed_seq)
    x = sample_dirichlet_latents(ModelConfig(n=n, d=d, m=2, concentration_len=conc), rng)
    y = perturb_latents(x, err, mode=noise, rng=rng) if noise == "uniform" else perturb_latents(x, err)
    a = sample_rdpg(x, rng)
    b = sample_rdpg(y, rng, clamp=True)
    split = SeedSplit.canonical(n, n - v)
    b = apply_shuffle(b, split, random_shuffle(v, rng))
    xe, ye = corrected_embeddings(a, b, split, d, method, k)
    return test_statistic(xe, ye)


def _streams(seed: int, tag: int, count: int):
    return np.random.SeedSequence([seed, tag]).spawn(count)


def run_power_study(cfg: TestConfig, threads: int | None = 1, keep_samples: bool = False) -> PowerStudy:
    """Monte-Carlo null calibration followed by power estimation per cell.

    Alternative replicates reuse the same random streams across cells, so
    cells differing only in ``err`` or ``v1`` are compared on matched seeds.
    """
    conc = cfg.concentration_len
    null_jobs = [(cfg.n, cfg.d, conc, 0.0, cfg.v0, cfg.method, cfg.k, ss, cfg.noise)
                 for ss in _streams(cfg.seed, 0, cfg.n_mc)]
    null = run_replicates(simulate_statistic, null_jobs, threads)
    crit = critical_value(null, cfg.alpha)
    study = PowerStudy(cfg, null, crit)
    alt_streams = _streams(cfg.seed, 1, cfg.n_mc)
    for err in cfg.err_grid:
        for v1 in cfg.v1_grid:
            jobs = [(cfg.n, cfg.d, conc, err, v1, cfg.method, cfg.k, ss, cfg.noise) for ss in alt_streams]
            stats = run_replicates(simulate_statistic, jobs, threads)
            power = float(np.mean(np.asarray(stats) >= crit))
            study.cells.append({
                "err": err, "v1": v1, "method": cfg.method_label, "power": power,
                "n_mc": cfg.n_mc, "seed": cfg.seed,
            })
            if keep_samples:
                study.alternative_samples[(err, v1)] = stats
    return study
