"""Least-squares out-of-sample embedding of unseeded vertices."""

from __future__ import annotations

import numpy as np

from .core import DegenerateInputError, SeedSplit
from .spectral import EmbeddingMatrix, as_array

RANK_TOL = 1e-10


class OOSProjector:
    """Minimum-norm least-squares solver against a fixed seed embedding.

    The SVD of the design is computed once so many targets can be projected.
    """

    def __init__(self, seed_emb):
        x = as_array(seed_emb)
        if x.ndim != 2:
            raise ValueError("seed embedding must be a matrix")
        u, sv, vt = np.linalg.svd(x, full_matrices=False)
        if sv.size == 0 or sv[0] == 0 or sv[-1] <= RANK_TOL * sv[0]:
            smallest = sv[-1] if sv.size else 0.0
            raise DegenerateInputError(
                f"seed embedding is rank deficient: smallest singular value {smallest:.3e}"
                f" vs largest {sv[0] if sv.size else 0.0:.3e}"
            )
        self.s, self.d = x.shape
        self._u, self._sv, self._vt = u, sv, vt

    def project(self, b) -> np.ndarray:
        """Solve ``argmin_w ||b - X w||`` for a vector or for each row of a matrix."""
        b = np.asarray(b, dtype=float)
        single = b.ndim == 1
        bm = b.reshape(1, -1) if single else b
        if bm.shape[1] != self.s:
            raise ValueError(f"adjacency vector length {bm.shape[1]} != seed count {self.s}")
        w = ((bm @ self._u) / self._sv) @ self._vt
        return w[0] if single else w


def oos_embed(seed_emb, b) -> np.ndarray:
    """Least-squares position of one vertex from its adjacencies ``b`` to the seeds."""
    return OOSProjector(seed_emb).project(b)


def oos_embed_all(graphs, split: SeedSplit, seed_embs) -> list[EmbeddingMatrix]:
    """OOS positions of every unseeded vertex in every graph.

    Row ``v`` of the ``i``-th result is vertex ``split.unseeded_ids[v]`` of
    graph ``i``. Vertices with no weight to any seed embed at the origin;
    :func:`unidentifiable_rows` lists them.
    """
    seeds = np.asarray(split.seed_ids, dtype=np.int64)
    rest = np.asarray(split.unseeded_ids, dtype=np.int64)
    out = []
    for i, (g, emb) in enumerate(zip(graphs, seed_embs)):
        w = as_array(g)
        d = as_array(emb).shape[1]
        if rest.size == 0:
            vals = np.zeros((0, d))
        else:
            b = w[np.ix_(rest, seeds)]
            vals = OOSProjector(emb).project(b)
        out.append(EmbeddingMatrix(vals, graph_index=np.full(rest.size, i), in_sample=False))
    return out


def unidentifiable_rows(graph, split: SeedSplit) -> np.ndarray:
    """Unseeded positions (0-based within the unseeded block) with no seed adjacency."""
    w = as_array(graph)
    rest = np.asarray(split.unseeded_ids, dtype=np.int64)
    seeds = np.asarray(split.seed_ids, dtype=np.int64)
    if rest.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(~np.any(w[np.ix_(rest, seeds)] != 0, axis=1))
