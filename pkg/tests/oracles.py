"""Independent reference implementations used to derive expected values.

Each oracle is deliberately naive (exhaustive enumeration, textbook
formulas, or a third-party library) and shares no code with the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import norm


def brute_lap(c):
    """Minimum cost and the lexicographically first minimising permutation."""
    c = np.asarray(c, dtype=float)
    u = c.shape[0]
    best, arg = math.inf, None
    # itertools yields permutations in lexicographic order, so keep the first strict minimum
    for p in itertools.permutations(range(u)):
        cost = sum(c[i, p[i]] for i in range(u))
        if cost < best:
            best, arg = cost, p
    return best, tuple(arg)


def brute_mlap(costs, u, m):
    """Exhaustive multi-graph assignment minimum over ``(u!)^(m-1)`` tuples.

    ``costs[(i, j)]`` is the ``i``-to-``j`` cost matrix for ``i < j``.
    """
    perms = list(itertools.permutations(range(u)))
    best, arg = math.inf, None
    for tup in itertools.product(perms, repeat=m - 1):
        maps = [tuple(range(u))] + list(tup)
        total = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                total += sum(costs[(i, j)][maps[i][v], maps[j][v]] for v in range(u))
        if total < best:
            best, arg = total, tup
    return best, arg


def zhu_ghodsi(x):
    """Profile-likelihood elbow evaluated directly from Gaussian log densities."""
    x = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    p = x.size
    scores = []
    for q in range(1, p):
        a, b = x[:q], x[q:]
        ss = np.sum((a - a.mean()) ** 2) + np.sum((b - b.mean()) ** 2)
        sd = math.sqrt(ss / (p - 2))
        scores.append(norm.logpdf(a, a.mean(), sd).sum() + norm.logpdf(b, b.mean(), sd).sum())
    return int(np.argmax(scores)) + 1


def permute_graph(b, image):
    """``P B P^T`` for the permutation matrix with ``P[i, image[i]] = 1``."""
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    p = np.zeros((n, n))
    p[np.arange(n), image] = 1.0
    return p @ b @ p.T


def order_statistic(sample, alpha):
    """Smallest value whose empirical CDF reaches ``1 - alpha``."""
    return float(np.quantile(np.asarray(sample, dtype=float), 1 - alpha, method="inverted_cdf"))


def same_partition(a, b):
    """Whether two label vectors induce the same partition."""
    a, b = np.asarray(a), np.asarray(b)
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))
