"""Symmetric eigendecomposition, adjacency spectral embedding, scree elbows
and orthogonal Procrustes alignment."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .core import Graph, NumericFailure

SYMMETRY_TOL = 1e-10
# dense matrices above this size use a single reduction plus partial tridiagonal solves
_PARTIAL_EIG_MIN_N = 1200


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Rows of latent-position estimates.

    ``graph_index[r]`` names the graph row ``r`` came from and
    ``in_sample[r]`` is False for out-of-sample rows.
    """

    values: np.ndarray
    graph_index: np.ndarray = None
    in_sample: np.ndarray = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"embedding must be a rows x d matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding has non-finite entries")
        gi = np.zeros(v.shape[0], dtype=np.int64) if self.graph_index is None else np.asarray(self.graph_index, dtype=np.int64)
        ins = np.ones(v.shape[0], dtype=bool) if self.in_sample is None else np.asarray(self.in_sample, dtype=bool)
        if ins.ndim == 0:
            ins = np.full(v.shape[0], bool(ins))
        if gi.shape != (v.shape[0],) or ins.shape != (v.shape[0],):
            raise ValueError("graph_index / in_sample length must equal the row count")
        for a in (v, gi, ins):
            a.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "graph_index", gi)
        object.__setattr__(self, "in_sample", ins)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"EmbeddingMatrix(rows={self.rows}, d={self.d})"


def as_array(x) -> np.ndarray:
    if isinstance(x, EmbeddingMatrix):
        return x.values
    if isinstance(x, Graph):
        return x.weights
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs ordered by non-increasing eigenvalue magnitude."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class ProcrustesRotation:
    w: np.ndarray
    residual: float


def _check_symmetric(mat) -> np.ndarray:
    mat = as_array(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
    if np.abs(mat - mat.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return mat


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _order_by_magnitude(vals, vecs):
    # stable sort on -|λ|; equal magnitudes keep the positive eigenvalue first
    order = np.lexsort((-vals, -np.abs(vals)))
    return vals[order], vecs[:, order]


def eig_symmetric(mat) -> Spectrum:
    """Full eigendecomposition of a real symmetric matrix.

    Eigenvalues are ordered by decreasing magnitude; each eigenvector is
    signed so that its largest-magnitude entry is positive.
    """
    mat = _check_symmetric(mat)
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigendecomposition did not converge: {exc}") from exc
    vals, vecs = _order_by_magnitude(vals, vecs)
    return Spectrum(vals, _fix_signs(vecs))


def _extreme_eigenpairs(mat: np.ndarray, k: int):
    """The ``k`` smallest and ``k`` largest eigenpairs from one tridiagonal reduction."""
    n = mat.shape[0]
    lwork = int(lapack.dsytrd_lwork(n, lower=1)[0])
    c, diag, off, tau, info = lapack.dsytrd(np.asfortranarray(mat), lower=1, lwork=lwork)
    if info != 0:
        raise NumericFailure(f"tridiagonal reduction failed (info={info})")
    try:
        lo_vals, lo_vecs = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
        hi_vals, hi_vecs = sla.eigh_tridiagonal(diag, off, select="i", select_range=(n - k, n - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"tridiagonal eigensolver failed: {exc}") from exc
    vals = np.concatenate([lo_vals, hi_vals])
    z = np.hstack([lo_vecs, hi_vecs])
    # back-transform by the Householder reflectors stored below the subdiagonal
    v = np.empty(n)
    for i in range(n - 2, -1, -1):
        if tau[i] == 0.0:
            continue
        m = n - i - 1
        v[0] = 1.0
        v[1:m] = c[i + 2:, i]
        block = z[i + 1:]
        block -= tau[i] * np.outer(v[:m], v[:m] @ block)
    return vals, z


def top_eigenpairs(mat, k: int) -> Spectrum:
    """The ``k`` eigenpairs of largest magnitude (sign-fixed)."""
    mat = _check_symmetric(mat)
    n = mat.shape[0]
    k = min(k, n)
    if n < _PARTIAL_EIG_MIN_N or 2 * k >= n:
        full = eig_symmetric(mat)
        return Spectrum(full.eigenvalues[:k], full.eigenvectors[:, :k])
    vals, vecs = _extreme_eigenpairs(mat, k)
    vals, vecs = _order_by_magnitude(vals, vecs)
    return Spectrum(vals[:k], _fix_signs(vecs[:, :k]))


def ase(mat, d: int, graph_index=None) -> EmbeddingMatrix:
    """Adjacency spectral embedding ``U |S|^{1/2}`` from the ``d`` largest |eigenvalues|.

    Since ``mat`` is symmetric, ``|mat|`` shares its eigenvectors and has
    eigenvalues ``|λ|``; the square root of ``mat.T @ mat`` is never formed.
    """
    mat = as_array(mat)
    n = mat.shape[0]
    if d < 1:
        raise ValueError("embedding dimension must be >= 1")
    if d > n:
        raise ValueError(f"embedding dimension {d} exceeds matrix size {n}")
    spec = top_eigenpairs(mat, min(d + 1, n))
    mags = np.abs(spec.eigenvalues)
    if mags[0] == 0:
        warnings.warn("zero spectrum: embedding is identically zero", stacklevel=2)
    elif d < n and abs(mags[d - 1] - mags[d]) <= 1e-12 * max(1.0, mags[0]):
        warnings.warn(
            f"eigenvalue magnitudes {d} and {d + 1} coincide; embedding subspace is arbitrary",
            stacklevel=2,
        )
    x = spec.eigenvectors[:, :d] * np.sqrt(mags[:d])
    return EmbeddingMatrix(x, graph_index=graph_index)


def _profile_loglik(x: np.ndarray, q: int) -> float:
    """Zhu-Ghodsi profile log-likelihood of splitting sorted ``x`` after ``q`` items."""
    p = x.size
    a, b = x[:q], x[q:]
    ss = ((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()
    var = ss / (p - 2) if p > 2 else 0.0
    if var <= 0:
        return np.inf
    return float(-0.5 * p * np.log(2 * np.pi * var) - ss / (2 * var))


def _first_elbow(x: np.ndarray) -> int:
    p = x.size
    if p <= 2:
        return 1
    ll = np.array([_profile_loglik(x, q) for q in range(1, p)])
    return int(np.argmax(ll)) + 1


def select_dimension(eigenvalues, max_d: int | None = None, elbow: int = 1) -> int:
    """Embedding dimension from the profile-likelihood elbow of a scree.

    Magnitudes are used and sorted in decreasing order. ``elbow`` selects the
    first, second, ... elbow (each found on the tail left by the previous
    one). The result is capped at ``max_d`` and is at least 1.
    """
    x = np.sort(np.abs(np.asarray(eigenvalues, dtype=float).ravel()))[::-1]
    if x.size == 0:
        raise ValueError("empty scree")
    if elbow < 1:
        raise ValueError("elbow index must be >= 1")
    if x.size == 1 or x.max() == x.min():
        warnings.warn("scree has no elbow; using dimension 1", stacklevel=2)
        return 1
    dim = 0
    tail = x
    for _ in range(elbow):
        if tail.size < 2:
            break
        if tail.max() == tail.min():
            break
        q = _first_elbow(tail)
        dim += q
        tail = tail[q:]
    dim = max(dim, 1)
    if max_d is not None:
        dim = min(dim, max_d)
    return dim


def procrustes(x, y) -> ProcrustesRotation:
    """Orthogonal ``w`` minimising ``||x - y @ w||_F``.

    ``w`` is the polar factor of ``y.T @ x``.
    """
    x, y = as_array(x), as_array(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    u, _, vt = np.linalg.svd(y.T @ x)
    w = u @ vt
    return ProcrustesRotation(w, float(np.linalg.norm(x - y @ w)))


def two_to_infinity(a) -> float:
    """Maximum Euclidean row norm."""
    a = as_array(a)
    return float(np.sqrt((a ** 2).sum(axis=1)).max(initial=0.0))
