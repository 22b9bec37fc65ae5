"""Matching accuracy, graph-correlation measures, graph distances and
clustering evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Graph, PermutationMap, UndefinedResultError
from .spectral import as_array


@dataclass(frozen=True)
class CorrelationReport:
    rho_e: float
    rho_h: float

    @property
    def rho_t(self) -> float:
        return total_correlation(self.rho_e, self.rho_h)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(v) != 0) or np.any(v < 0):
            raise ValueError("distance matrix needs a zero diagonal and nonnegative entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def row_means(self) -> np.ndarray:
        """Mean distance from each graph to the others."""
        if self.size < 2:
            return np.zeros(self.size)
        return self.values.sum(axis=1) / (self.size - 1)


def matching_accuracy(found: PermutationMap, truth: PermutationMap) -> float:
    """Fraction of vertices sent to their true partner."""
    if found.size != truth.size:
        raise ValueError(f"size mismatch: {found.size} vs {truth.size}")
    if found.size == 0:
        return 1.0
    return float(np.mean(found.image == truth.image))


def soft_accuracy(found, truth: PermutationMap) -> float:
    """Fraction of vertices whose true partner is among their candidates."""
    cand = found.candidates
    if cand.shape[0] != truth.size:
        raise ValueError(f"size mismatch: {cand.shape[0]} vs {truth.size}")
    if truth.size == 0:
        return 1.0
    return float(np.mean(np.any(cand == truth.image[:, None], axis=1)))


def _pair(a, b):
    wa, wb = as_array(a), as_array(b)
    if wa.shape != wb.shape:
        raise ValueError(f"graph sizes differ: {wa.shape} vs {wb.shape}")
    return wa, wb


def _permuted(b: np.ndarray, p: PermutationMap) -> np.ndarray:
    # equals P B P^T with P[i, p(i)] = 1
    return b[np.ix_(p.image, p.image)]


def delta(a, b, p: PermutationMap) -> float:
    """Half the squared Frobenius norm of ``A P - P B``."""
    wa, wb = _pair(a, b)
    if p.size != wa.shape[0]:
        raise ValueError("permutation size does not match the graphs")
    return 0.5 * float(((wa - _permuted(wb, p)) ** 2).sum())


def alignment_strength_ratio(a, b, p: PermutationMap) -> float:
    """Disagreement under ``p`` relative to its average over all permutations."""
    wa, wb = _pair(a, b)
    n = wa.shape[0]
    if n < 2:
        raise UndefinedResultError("alignment strength needs at least two vertices")
    da, db = Graph(wa).density(), Graph(wb).density()
    denom = da * (1 - db) + db * (1 - da)
    if denom == 0:
        raise UndefinedResultError("both graphs are empty or both complete")
    return (delta(wa, wb, p) / (n * (n - 1) / 2)) / denom


def alignment_strength(a, b, p: PermutationMap) -> float:
    """One minus :func:`alignment_strength_ratio`; equals 1 for a perfect alignment."""
    return 1.0 - alignment_strength_ratio(a, b, p)


def edge_correlation(a, b) -> float:
    """Pearson correlation of the paired edge indicators over vertex pairs."""
    wa, wb = _pair(a, b)
    iu = np.triu_indices(wa.shape[0], 1)
    x, y = wa[iu], wb[iu]
    if x.size == 0 or x.std() == 0 or y.std() == 0:
        raise UndefinedResultError("edge indicators have zero variance")
    return float(np.corrcoef(x, y)[0, 1])


def heterogeneity_correlation(p) -> float:
    """``sigma^2 / (mu (1 - mu))`` over the above-diagonal edge probabilities."""
    p = as_array(p)
    iu = np.triu_indices(p.shape[0], 1)
    vals = p[iu]
    if vals.size == 0:
        raise UndefinedResultError("no vertex pairs")
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    mu = vals.mean()
    if mu <= 0 or mu >= 1:
        raise UndefinedResultError(f"mean edge probability is {mu}")
    if vals.min() == vals.max():
        return 0.0
    return float(((vals - mu) ** 2).mean() / (mu * (1 - mu)))


def total_correlation(rho_e: float, rho_h: float) -> float:
    return 1.0 - (1.0 - rho_e) * (1.0 - rho_h)


def correlation_report(a, b, p) -> CorrelationReport:
    return CorrelationReport(edge_correlation(a, b), heterogeneity_correlation(p))


def graph_distance(a, b, p: PermutationMap | None = None, s: int = 0, squared: bool = False) -> float:
    """``||A P - P B||_F`` with ``P = I_s + p`` acting on the unseeded block."""
    wa, wb = _pair(a, b)
    n = wa.shape[0]
    if p is None:
        full = PermutationMap.identity(n)
    else:
        if p.size + s != n:
            raise ValueError(f"matching of size {p.size} plus {s} seeds != {n} vertices")
        full = PermutationMap(np.concatenate([np.arange(s), s + p.image]))
    val = 2.0 * delta(wa, wb, full)
    return val if squared else float(np.sqrt(val))


def pairwise_distances(graphs, matchings=None, s: int = 0, squared: bool = False) -> DistanceMatrix:
    """Distances between aligned graphs.

    ``matchings[i][j]`` is a :class:`~omnimatch.assign.MatchResult` or
    :class:`PermutationMap` for the unseeded block (``None`` means identity).
    Only ``i < j`` is evaluated; the matrix is mirrored.
    """
    mats = [as_array(g) for g in graphs]
    m = len(mats)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            p = None
            if matchings is not None:
                p = matchings[i][j]
                p = getattr(p, "permutation", p)
            out[i, j] = out[j, i] = graph_distance(mats[i], mats[j], p, s, squared)
    return DistanceMatrix(out)


def complete_linkage_clusters(dist, k: int) -> np.ndarray:
    """Agglomerative complete-linkage clustering cut at exactly ``k`` clusters.

    Merge ties go to the pair of clusters whose smallest member indices are
    lexicographically smallest. Labels are 0-based, numbered by first member.
    """
    d = as_array(dist.values if isinstance(dist, DistanceMatrix) else dist)
    n = d.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"cluster count {k} outside 1..{n}")
    # clusters are keyed by their smallest member; inter-cluster distance matrix is updated in place
    active = list(range(n))
    members = {i: [i] for i in range(n)}
    link = np.array(d, dtype=float)
    np.fill_diagonal(link, np.inf)
    while len(active) > k:
        sub = link[np.ix_(active, active)]
        flat = int(np.argmin(sub))  # row-major: first minimum is the smallest index pair
        ai, bi = divmod(flat, len(active))
        a, b = active[ai], active[bi]
        if a > b:
            a, b = b, a
        merged = np.maximum(link[a], link[b])
        link[a, :] = merged
        link[:, a] = merged
        link[a, a] = np.inf
        link[b, :] = np.inf
        link[:, b] = np.inf
        members[a].extend(members.pop(b))
        active.remove(b)
    labels = np.empty(n, dtype=np.int64)
    for lab, key in enumerate(sorted(active)):
        labels[members[key]] = lab
    return labels


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index from the pair-counting contingency table."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must have equal length")
    n = a.size
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1)

    def pairs(x):
        return float((x * (x - 1) / 2).sum())

    index = pairs(table)
    sa, sb = pairs(table.sum(axis=1)), pairs(table.sum(axis=0))
    total = n * (n - 1) / 2
    expected = sa * sb / total
    best = (sa + sb) / 2
    if best == expected:
        # both partitions trivial in the same way (all singletons or one block)
        return 1.0 if sa == sb else 0.0
    return (index - expected) / (best - expected)
