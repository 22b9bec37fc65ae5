"""Cost matrices, exact linear assignment, k-NN soft matching and the
multi-graph OmniMatch pipeline."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .core import PermutationMap, SeedSplit, compose, induced_seed_subgraph
from .oos import oos_embed_all, unidentifiable_rows
from .omni import build_omnibus, omni_embed
from .spectral import EmbeddingMatrix, as_array, select_dimension


@dataclass(frozen=True, eq=False)
class CostMatrix:
    values: np.ndarray
    source_pair: tuple = (0, 1)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"cost matrix must be square, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("cost matrix has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def u(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MatchResult:
    """Hard matching of graph ``i``'s unseeded vertices onto graph ``j``'s."""

    permutation: PermutationMap
    total_cost: float
    method: str = "hard"
    source_pair: tuple = (0, 1)
    unidentifiable: tuple = ()


@dataclass(frozen=True, eq=False)
class SoftMatch:
    """Per source vertex, the ``k`` nearest targets (row ``v`` of ``candidates``)."""

    candidates: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return self.candidates.shape[1]

    @property
    def u(self) -> int:
        return self.candidates.shape[0]


def _costs(c) -> np.ndarray:
    if isinstance(c, CostMatrix):
        return c.values
    return CostMatrix(c).values


def cost_matrix(emb_i, emb_j, source_pair=(0, 1)) -> CostMatrix:
    """Euclidean distances between the rows of two OOS embeddings."""
    a, b = as_array(emb_i), as_array(emb_j)
    if a.shape != b.shape:
        raise ValueError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    if a.shape[0] == 0:
        return CostMatrix(np.zeros((0, 0)), source_pair)
    return CostMatrix(cdist(a, b), source_pair)


def _column_potentials(c: np.ndarray, col_of_row: np.ndarray) -> np.ndarray:
    """Column duals certifying optimality of ``col_of_row``.

    Bellman-Ford on columns with arc ``k -> j`` weighted by
    ``c[r_k, j] - c[r_k, k]``, ``r_k`` the row owning column ``k``.
    """
    u = c.shape[0]
    row_of_col = np.empty(u, dtype=np.int64)
    row_of_col[col_of_row] = np.arange(u)
    w = c[row_of_col] - c[row_of_col, np.arange(u)][:, None]
    pot = np.zeros(u)
    for _ in range(u + 1):
        nxt = np.minimum(pot, (pot[:, None] + w).min(axis=0))
        if not (nxt < pot).any():
            break
        pot = nxt
    return pot


def _has_cycle(arcs: np.ndarray) -> bool:
    """Whether the digraph with boolean adjacency ``arcs`` contains a cycle."""
    alive = np.flatnonzero(arcs.any(axis=1))
    sub = arcs[np.ix_(alive, alive)]
    while alive.size:
        keep = sub.any(axis=1)  # nodes with no outgoing arc cannot lie on a cycle
        if keep.all():
            return True
        alive = alive[keep]
        sub = sub[np.ix_(keep, keep)]
    return False


def _lexicographic_optimum(tight: np.ndarray, col_of_row: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching inside the ``tight`` edge set.

    ``col_of_row`` must already be a perfect matching of ``tight``. Rows are
    fixed in order, each to the smallest column that still admits a perfect
    matching of the remainder (found as an alternating cycle).
    """
    u = tight.shape[0]
    # another optimum exists iff the column digraph k -> j (row owning k is
    # tight at j) has a cycle, i.e. a strongly connected component of size > 1
    arcs = tight[np.argsort(col_of_row)].copy()
    np.fill_diagonal(arcs, False)
    if not _has_cycle(arcs):
        return col_of_row.copy()
    match = col_of_row.copy()
    owner = np.empty(u, dtype=np.int64)
    owner[match] = np.arange(u)
    fixed_row = np.zeros(u, dtype=bool)
    fixed_col = np.zeros(u, dtype=bool)
    rows, cols = np.nonzero(tight)
    adj = np.split(cols, np.searchsorted(rows, np.arange(1, u)))
    for r in range(u):
        target = match[r]
        for c in adj[r]:
            if c >= target:
                break
            if fixed_col[c]:
                continue
            start = owner[c]
            via = {start: (r, c)}
            queue = deque([start])
            end = -1
            while queue and end < 0:
                x = queue.popleft()
                for y in adj[x]:
                    if fixed_col[y] or y == c:
                        continue
                    if y == target:
                        end = x
                        break
                    nxt = owner[y]
                    if nxt not in via and nxt != r:
                        via[nxt] = (x, y)
                        queue.append(nxt)
            if end < 0:
                continue
            match[end] = target
            owner[target] = end
            x = end
            while x != r:
                prev, col = via[x]
                match[prev] = col
                owner[col] = prev
                x = prev
            break
        fixed_row[r] = True
        fixed_col[match[r]] = True
    return match


def solve_lap(c, source_pair=(0, 1)) -> MatchResult:
    """Exact minimum-cost assignment.

    Among all optimal permutations the lexicographically smallest one
    (compared row by row on the assigned column) is returned.
    """
    cm = c if isinstance(c, CostMatrix) else CostMatrix(c, source_pair)
    vals = cm.values
    u = cm.u
    if u == 0:
        return MatchResult(PermutationMap(np.zeros(0, dtype=np.int64)), 0.0, "hard", cm.source_pair)
    _, col_of_row = linear_sum_assignment(vals)
    pot = _column_potentials(vals, col_of_row)
    row_pot = vals[np.arange(u), col_of_row] - pot[col_of_row]
    reduced = vals - row_pot[:, None] - pot[None, :]
    tol = 1e-10 * max(1.0, float(np.abs(vals).max()))
    match = _lexicographic_optimum(reduced <= tol, col_of_row)
    total = float(vals[np.arange(u), match].sum())
    return MatchResult(PermutationMap(match), total, "hard", cm.source_pair)


def soft_match(c, k: int) -> SoftMatch:
    """The ``k`` cheapest targets per row, ties broken by lower column index."""
    vals = _costs(c)
    if k < 1:
        raise ValueError("k must be >= 1")
    u = vals.shape[0]
    k = min(k, u)
    order = np.argsort(vals, axis=1, kind="stable")[:, :k]
    return SoftMatch(order, np.take_along_axis(vals, order, axis=1))


def _penalised_lap(cost: CostMatrix, bad_rows, bad_cols) -> MatchResult:
    """LAP that pairs unidentifiable rows with unidentifiable columns first."""
    vals = cost.values
    if len(bad_rows) == 0 and len(bad_cols) == 0:
        return solve_lap(cost)
    flag_r = np.zeros(cost.u, dtype=bool)
    flag_c = np.zeros(cost.u, dtype=bool)
    flag_r[bad_rows] = True
    flag_c[bad_cols] = True
    big = (float(vals.max(initial=0.0)) + 1.0) * (cost.u + 1)
    res = solve_lap(CostMatrix(vals + big * (flag_r[:, None] != flag_c[None, :]), cost.source_pair))
    perm = res.permutation
    total = float(vals[np.arange(cost.u), perm.image].sum())
    return MatchResult(perm, total, "hard", cost.source_pair, tuple(int(v) for v in bad_rows))


@dataclass
class OmniMatchResult:
    """Everything produced by one OmniMatch run.

    ``matchings[i][j]`` maps graph ``i``'s unseeded vertices (in that graph's
    own unseeded order) onto graph ``j``'s.
    """

    matchings: list
    seed_embeddings: list
    oos_embeddings: list
    d: int
    mode: str
    anchor: int | None = None
    unidentifiable: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.matchings)

    def cost(self, i: int, j: int) -> CostMatrix:
        return cost_matrix(self.oos_embeddings[i], self.oos_embeddings[j], (i, j))

    def permutation(self, i: int, j: int) -> PermutationMap:
        return self.matchings[i][j].permutation


def omnibus_scree(graphs, split: SeedSplit) -> np.ndarray:
    """Eigenvalue magnitudes of the omnibus matrix of the seed subgraphs."""
    seeds = [induced_seed_subgraph(g, split) for g in graphs]
    vals = np.linalg.eigvalsh(build_omnibus(seeds).values)
    return np.sort(np.abs(vals))[::-1]


def omnimatch(graphs, split: SeedSplit, d="auto", mode: str = "pairwise",
              anchor: int | None = None, elbow: int = 1) -> OmniMatchResult:
    """Align the unseeded vertices of ``m >= 2`` graphs.

    Seed subgraphs are embedded jointly, unseeded vertices are placed by
    least squares against their own graph's seed block, and graphs are
    matched by linear assignment on OOS distances. ``mode="anchor"`` solves
    only ``i -> anchor`` problems and composes through the anchor (default:
    the last graph); ``mode="pairwise"`` solves every pair.
    """
    graphs = list(graphs)
    m = len(graphs)
    if m < 2:
        raise ValueError("omnimatch needs at least two graphs")
    for g in graphs:
        split.check(g)
    if mode not in ("pairwise", "anchor"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "anchor" and anchor is not None and not 0 <= int(anchor) < m:
        raise ValueError(f"anchor {anchor} outside 0..{m - 1}")
    if d == "auto" or d is None:
        d = select_dimension(omnibus_scree(graphs, split), max_d=split.s, elbow=elbow)
    d = int(d)
    if split.s < d:
        raise ValueError(f"seed count {split.s} is smaller than embedding dimension {d}")
    seeds = [induced_seed_subgraph(g, split) for g in graphs]
    seed_embs = omni_embed(seeds, d)
    oos = oos_embed_all(graphs, split, seed_embs)
    bad = [unidentifiable_rows(g, split) for g in graphs]
    base = OmniMatchResult([], seed_embs, oos, d, mode, None, bad)
    return rematch(base, mode, anchor)


def rematch(res: OmniMatchResult, mode: str = "pairwise", anchor: int | None = None) -> OmniMatchResult:
    """Redo the assignment step of ``res`` in another mode, reusing its embeddings."""
    if mode not in ("pairwise", "anchor"):
        raise ValueError(f"unknown mode {mode!r}")
    oos, bad = res.oos_embeddings, res.unidentifiable
    m = len(oos)
    u = as_array(oos[0]).shape[0]
    ident = PermutationMap.identity(u)
    mat = [[None] * m for _ in range(m)]
    for i in range(m):
        mat[i][i] = MatchResult(ident, 0.0, "hard", (i, i))

    def solve(i, j):
        return _penalised_lap(cost_matrix(oos[i], oos[j], (i, j)), bad[i], bad[j])

    def invert(r: MatchResult, i, j):
        return MatchResult(r.permutation.inverse(), r.total_cost, r.method, (i, j),
                           tuple(int(v) for v in bad[i]))

    if mode == "pairwise":
        anchor = None
        for i in range(m):
            for j in range(i + 1, m):
                mat[i][j] = solve(i, j)
                mat[j][i] = invert(mat[i][j], j, i)
    else:
        a = m - 1 if anchor is None else int(anchor)
        if not 0 <= a < m:
            raise ValueError(f"anchor {a} outside 0..{m - 1}")
        anchor = a
        for i in range(m):
            if i != a:
                mat[i][a] = solve(i, a)
                mat[a][i] = invert(mat[i][a], a, i)
        for i in range(m):
            for j in range(m):
                if i == j or a in (i, j):
                    continue
                perm = compose(mat[i][a].permutation, mat[a][j].permutation)
                c = cost_matrix(oos[i], oos[j]).values
                total = float(c[np.arange(u), perm.image].sum()) if u else 0.0
                mat[i][j] = MatchResult(perm, total, "anchor", (i, j), tuple(int(v) for v in bad[i]))
    return OmniMatchResult(mat, res.seed_embeddings, oos, res.d, mode, anchor, bad)


def mlap_cost(assignment, costs) -> float:
    """Multi-graph assignment cost of a tuple of permutations.

    ``assignment[k]`` sends graph-0 unseeded vertices to graph ``k + 1``;
    ``costs[i][j]`` (or ``costs[(i, j)]``) is the ``i``-to-``j`` cost matrix
    for ``i < j``. The total is summed over all graph pairs and vertices.
    """
    perms = [np.arange(assignment[0].size if assignment else 0)]
    for p in assignment:
        if p.size != perms[0].size:
            raise ValueError("assignment permutations differ in size")
        perms.append(p.image)
    m = len(perms)
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            c = costs[(i, j)] if isinstance(costs, dict) else costs[i][j]
            c = _costs(c)
            if c.shape[0] != perms[0].size:
                raise ValueError(f"cost matrix ({i}, {j}) has size {c.shape[0]}")
            total += float(c[perms[i], perms[j]].sum())
    return total
