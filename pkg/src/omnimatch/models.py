"""Random dot product graph samplers and perturbations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Graph, PermutationMap

# slack for floating-point round-off in inner products
_IP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LatentPositions:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise ValueError("latent positions must be an n x d matrix")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def probabilities(self) -> np.ndarray:
        return self.values @ self.values.T

    def inner_product_range(self) -> tuple[float, float]:
        """Min and max of ``x_i . x_j`` over distinct pairs (the delta audit)."""
        p = self.probabilities()
        if self.n < 2:
            return (float("nan"), float("nan"))
        iu = np.triu_indices(self.n, 1)
        return float(p[iu].min()), float(p[iu].max())

    def is_valid(self) -> bool:
        lo, hi = self.inner_product_range()
        return self.n < 2 or (lo >= -_IP_TOL and hi <= 1 + _IP_TOL)


@dataclass(frozen=True)
class ModelConfig:
    n: int
    d: int
    m: int = 2
    concentration_len: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.concentration_len is None:
            object.__setattr__(self, "concentration_len", self.d + 1)
        if self.n < 1 or self.d < 1 or self.m < 1:
            raise ValueError("n, d and m must be positive")
        if self.concentration_len <= self.d:
            raise ValueError("Dirichlet length must exceed d")


def sample_dirichlet_latents(cfg: ModelConfig, rng: np.random.Generator) -> LatentPositions:
    """First ``d`` coordinates of ``n`` flat-Dirichlet draws."""
    draws = rng.dirichlet(np.ones(cfg.concentration_len), size=cfg.n)
    return LatentPositions(draws[:, : cfg.d])


def _as_latents(x) -> LatentPositions:
    return x if isinstance(x, LatentPositions) else LatentPositions(x)


def sample_from_probabilities(p: np.ndarray, rng: np.random.Generator) -> Graph:
    """Symmetric hollow Bernoulli graph with above-diagonal success probabilities ``p``."""
    n = p.shape[0]
    draws = rng.random((n, n)) < p
    upper = np.triu(draws, 1)
    return Graph((upper | upper.T).astype(float))


def sample_rdpg(x, rng: np.random.Generator, clamp: bool = False) -> Graph:
    """Sample one RDPG adjacency matrix given latent positions.

    With ``clamp`` the inner products are clipped into [0, 1] instead of
    being rejected (used for perturbed positions).
    """
    x = _as_latents(x)
    p = x.probabilities()
    if clamp:
        p = np.clip(p, 0.0, 1.0)
    elif x.n > 1:
        off = p[~np.eye(x.n, dtype=bool)]
        if off.min() < -_IP_TOL or off.max() > 1 + _IP_TOL:
            raise ValueError(
                f"inner products outside [0, 1]: range [{off.min():.4g}, {off.max():.4g}]"
            )
    return sample_from_probabilities(p, rng)


def sample_jrdpg(x, m: int, rng: np.random.Generator, clamp: bool = False) -> list[Graph]:
    """``m`` conditionally independent RDPG draws sharing ``x``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return [sample_rdpg(x, rng, clamp=clamp) for _ in range(m)]


def sample_weighted_rdpg(x, trials: int, rng: np.random.Generator) -> Graph:
    """Weighted RDPG: edge weight is a Binomial(trials, p_ij) count over ``trials``.

    Each weight has mean ``p_ij``; ``trials=1`` gives the Bernoulli model.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = _as_latents(x)
    p = np.clip(x.probabilities(), 0.0, 1.0)
    counts = np.triu(rng.binomial(trials, p), 1)
    return Graph((counts + counts.T) / float(trials))


def perturb_latents(x, err: float, rows=None, mode: str = "shift",
                    rng: np.random.Generator | None = None) -> LatentPositions:
    """Add noise of scale ``err`` to latent positions.

    ``mode="shift"`` adds the constant ``err`` to every coordinate;
    ``mode="uniform"`` adds i.i.d. Uniform(0, err) entries and needs ``rng``.
    ``rows`` restricts the perturbation to a subset of vertices.
    """
    if err < 0:
        raise ValueError("err must be non-negative")
    x = _as_latents(x)
    vals = np.array(x.values)
    idx = np.arange(x.n) if rows is None else np.asarray(rows, dtype=np.int64)
    if mode == "shift":
        vals[idx] += err
    elif mode == "uniform":
        if rng is None:
            raise ValueError("uniform noise needs a generator")
        vals[idx] += rng.uniform(0.0, err, size=(idx.size, x.d))
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    return LatentPositions(vals)


def random_shuffle(u: int, rng: np.random.Generator) -> PermutationMap:
    """Uniform random permutation of ``u`` elements."""
    if u < 0:
        raise ValueError("u must be non-negative")
    return PermutationMap(rng.permutation(u))


def replicate_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators for ``count`` Monte-Carlo replicates."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
