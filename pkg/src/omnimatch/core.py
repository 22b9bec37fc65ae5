"""Graph and permutation primitives shared across the package."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DegenerateInputError(ValueError):
    """Input is well-formed but numerically degenerate (rank loss, zero norm)."""


class UndefinedResultError(ValueError):
    """Quantity is mathematically undefined for the given input."""


class NumericFailure(RuntimeError):
    """A numerical routine failed to converge."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, hollow, optionally weighted graph stored as a dense matrix.

    Construction validates symmetry and hollowness exactly; use
    :func:`symmetrize` first when the source data is only approximately
    symmetric.
    """

    weights: np.ndarray
    is_binary: bool = field(init=False)

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("adjacency contains non-finite entries")
        if not np.array_equal(w, w.T):
            raise ValueError("adjacency is not symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("adjacency is not hollow (nonzero diagonal)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "is_binary", bool(np.all((w == 0) | (w == 1))))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __repr__(self):
        kind = "binary" if self.is_binary else "weighted"
        return f"Graph(n={self.n}, {kind})"

    def density(self) -> float:
        """Fraction of vertex pairs carrying an edge (binary graphs)."""
        n = self.n
        if n < 2:
            return 0.0
        return float(np.count_nonzero(np.triu(self.weights, 1)) / (n * (n - 1) / 2))

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        w = np.zeros((n, n))
        for e in edges:
            i, j = e[0], e[1]
            wt = e[2] if len(e) > 2 else 1.0
            w[i, j] = w[j, i] = wt
        return cls(w)


def symmetrize(mat, zero_diagonal: bool = True) -> np.ndarray:
    """Return ``(mat + mat.T) / 2`` with the diagonal cleared."""
    mat = np.asarray(mat, dtype=float)
    out = (mat + mat.T) / 2
    if zero_diagonal:
        np.fill_diagonal(out, 0.0)
    return out


@dataclass(frozen=True, eq=False)
class PermutationMap:
    """Bijection on ``{0, ..., size-1}``; ``image[i]`` is where ``i`` is sent."""

    image: np.ndarray

    def __post_init__(self):
        img = np.array(self.image, dtype=np.int64, copy=True).reshape(-1)
        if not np.array_equal(np.sort(img), np.arange(img.size)):
            raise ValueError("image is not a bijection on 0..size-1")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    @property
    def size(self) -> int:
        return self.image.size

    @classmethod
    def identity(cls, size: int) -> "PermutationMap":
        return cls(np.arange(size))

    def inverse(self) -> "PermutationMap":
        inv = np.empty_like(self.image)
        inv[self.image] = np.arange(self.size)
        return PermutationMap(inv)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.image, np.arange(self.size)))

    def matrix(self) -> np.ndarray:
        """Permutation matrix ``P`` with ``P[i, image[i]] = 1``.

        With this convention ``(P @ B @ P.T)[i, j] == B[image[i], image[j]]``.
        """
        p = np.zeros((self.size, self.size))
        p[np.arange(self.size), self.image] = 1.0
        return p

    def __eq__(self, other):
        if not isinstance(other, PermutationMap):
            return NotImplemented
        return np.array_equal(self.image, other.image)

    def __hash__(self):
        return hash(self.image.tobytes())

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"PermutationMap({self.image.tolist()})"


def compose(p: PermutationMap, q: PermutationMap) -> PermutationMap:
    """Apply ``p`` then ``q``: ``image[i] = q.image[p.image[i]]``."""
    if p.size != q.size:
        raise ValueError(f"cannot compose permutations of sizes {p.size} and {q.size}")
    return PermutationMap(q.image[p.image])


@dataclass(frozen=True)
class SeedSplit:
    """Partition of the vertex set into seeds and unseeded vertices.

    In the canonical layout the seeds are ``0..s-1`` and the unseeded
    vertices ``s..n-1``; :meth:`canonical` builds that split.
    """

    seed_ids: tuple
    unseeded_ids: tuple

    def __post_init__(self):
        seeds = tuple(int(i) for i in self.seed_ids)
        rest = tuple(int(i) for i in self.unseeded_ids)
        if len(set(seeds)) != len(seeds) or len(set(rest)) != len(rest):
            raise ValueError("duplicate vertex ids in split")
        if set(seeds) & set(rest):
            raise ValueError("seed and unseeded sets overlap")
        allv = sorted(seeds + rest)
        if allv != list(range(len(allv))):
            raise ValueError("split does not cover 0..n-1")
        object.__setattr__(self, "seed_ids", seeds)
        object.__setattr__(self, "unseeded_ids", rest)

    @classmethod
    def canonical(cls, n: int, s: int) -> "SeedSplit":
        if not 0 <= s <= n:
            raise ValueError(f"seed count {s} outside [0, {n}]")
        return cls(tuple(range(s)), tuple(range(s, n)))

    @property
    def s(self) -> int:
        return len(self.seed_ids)

    @property
    def u(self) -> int:
        return len(self.unseeded_ids)

    @property
    def n(self) -> int:
        return self.s + self.u

    @property
    def is_canonical(self) -> bool:
        return self.seed_ids == tuple(range(self.s))

    def check(self, g: Graph) -> None:
        if self.n != g.n:
            raise ValueError(f"split covers {self.n} vertices but graph has {g.n}")


def canonicalize(g: Graph, seed_ids) -> tuple[Graph, SeedSplit, PermutationMap]:
    """Reorder ``g`` so the listed seeds occupy ``0..s-1`` in the given order.

    Returns the reordered graph, its canonical split and the reordering
    ``r`` with ``r.image[new] = old``.
    """
    seed_ids = [int(i) for i in seed_ids]
    seen = set(seed_ids)
    if len(seen) != len(seed_ids):
        raise ValueError("duplicate seed ids")
    if any(not 0 <= i < g.n for i in seed_ids):
        raise ValueError("seed id out of range")
    order = np.array(seed_ids + [v for v in range(g.n) if v not in seen], dtype=np.int64)
    reordered = Graph(g.weights[np.ix_(order, order)])
    return reordered, SeedSplit.canonical(g.n, len(seed_ids)), PermutationMap(order)


def _block_permutation(split: SeedSplit, q: PermutationMap) -> np.ndarray:
    # new position of each old vertex
    pos = np.arange(split.n)
    pos[split.s:] = split.s + q.image
    return pos


def apply_shuffle(g: Graph, split: SeedSplit, q: PermutationMap) -> Graph:
    """Permute the unseeded block of ``g`` by ``q``; seeds stay in place.

    Vertex ``s + i`` of ``g`` ends up at position ``s + q.image[i]``, i.e.
    the result is ``(I_s + Q) A (I_s + Q)^T`` with ``Q`` sending ``i`` to
    ``q.image[i]``.
    """
    split.check(g)
    if not split.is_canonical:
        raise ValueError("apply_shuffle expects the canonical seed layout")
    if q.size != split.u:
        raise ValueError(f"shuffle has size {q.size} but split has {split.u} unseeded vertices")
    pos = _block_permutation(split, q)
    src = np.empty_like(pos)
    src[pos] = np.arange(split.n)
    return Graph(g.weights[np.ix_(src, src)])


def induced_seed_subgraph(g: Graph, split: SeedSplit) -> Graph:
    """Subgraph on the seed vertices, in seed order."""
    split.check(g)
    idx = np.asarray(split.seed_ids, dtype=np.int64)
    return Graph(g.weights[np.ix_(idx, idx)])


# ---------------------------------------------------------------------------
# ingestion


def read_graph_csv(path) -> Graph:
    """Read a dense ``n x n`` comma-separated adjacency matrix."""
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(x) for x in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: cannot parse row ({exc})") from None
    if not rows:
        raise ValueError(f"{path}: empty matrix")
    n = len(rows)
    for lineno, r in enumerate(rows, 1):
        if len(r) != n:
            raise ValueError(f"{path}: row {lineno} has {len(r)} entries, expected {n}")
    w = np.array(rows)
    if not np.allclose(w, w.T, rtol=0, atol=1e-9):
        raise ValueError(f"{path}: matrix is not symmetric")
    return Graph(_clear_diagonal(symmetrize(w, zero_diagonal=False), path))


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read whitespace-separated ``i j [w]`` lines (0-based ids).

    The result is symmetrized; blank lines and ``#`` comments are skipped.
    """
    path = Path(path)
    edges = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'i j [w]', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
                wt = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r}") from None
            if i < 0 or j < 0:
                raise ValueError(f"{path}:{lineno}: negative vertex id")
            edges.append((i, j, wt))
    size = max((max(i, j) for i, j, _ in edges), default=-1) + 1
    if n is not None:
        if size > n:
            raise ValueError(f"{path}: vertex id {size - 1} exceeds n={n}")
        size = n
    w = np.zeros((size, size))
    for i, j, wt in edges:
        w[i, j] = wt
        w[j, i] = wt
    return Graph(_clear_diagonal(w, path))


def _clear_diagonal(w: np.ndarray, source) -> np.ndarray:
    if np.any(np.diag(w) != 0):
        warnings.warn(f"{source}: nonzero diagonal entries zeroed", stacklevel=3)
        w = w.copy()
        np.fill_diagonal(w, 0.0)
    return w


def read_graph(path) -> Graph:
    """Dispatch on content: comma-separated rows are a dense matrix, else an edge list."""
    path = Path(path)
    with path.open() as fh:
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                return read_graph_csv(path) if "," in line else read_edge_list(path)
    raise ValueError(f"{path}: no data")


def write_graph_csv(g: Graph, path) -> None:
    np.savetxt(path, g.weights, delimiter=",", fmt="%.17g")
