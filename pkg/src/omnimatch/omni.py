"""Omnibus matrix construction and joint embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Graph
from .spectral import EmbeddingMatrix, ase, as_array


@dataclass(frozen=True, eq=False)
class OmnibusMatrix:
    values: np.ndarray
    m: int
    s: int

    def block(self, i: int, j: int) -> np.ndarray:
        s = self.s
        return self.values[i * s:(i + 1) * s, j * s:(j + 1) * s]


def build_omnibus(graphs) -> OmnibusMatrix:
    """Block matrix whose ``(i, j)`` block is ``(A_i + A_j) / 2``."""
    mats = [as_array(g) for g in graphs]
    if not mats:
        raise ValueError("need at least one graph")
    s = mats[0].shape[0]
    for k, a in enumerate(mats):
        if a.shape != (s, s):
            raise ValueError(f"graph {k} has shape {a.shape}, expected ({s}, {s})")
    m = len(mats)
    out = np.empty((m * s, m * s))
    for i in range(m):
        out[i * s:(i + 1) * s, i * s:(i + 1) * s] = mats[i]
        for j in range(i + 1, m):
            avg = (mats[i] + mats[j]) / 2
            out[i * s:(i + 1) * s, j * s:(j + 1) * s] = avg
            out[j * s:(j + 1) * s, i * s:(i + 1) * s] = avg
    return OmnibusMatrix(out, m, s)


def omni_embed(graphs, d: int) -> list[EmbeddingMatrix]:
    """Embed all graphs jointly; returns one ``s x d`` block per graph."""
    omni = build_omnibus(graphs)
    s = omni.s
    gi = np.repeat(np.arange(omni.m), s)
    joint = ase(omni.values, d, graph_index=gi).values
    return [EmbeddingMatrix(joint[i * s:(i + 1) * s], graph_index=np.full(s, i)) for i in range(omni.m)]
