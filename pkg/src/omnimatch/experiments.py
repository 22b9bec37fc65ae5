"""Simulation and data studies behind the command-line subcommands.

Each study takes plain parameters plus a seed, runs its replicates through
:func:`omnimatch.parallel.run_replicates` with per-replicate random streams,
and returns rows ready for CSV output.
"""

from __future__ import annotations

import numpy as np

from .assign import omnimatch, rematch, soft_match
from .core import Graph, PermutationMap, SeedSplit, apply_shuffle, canonicalize, compose
from .metrics import (
    DistanceMatrix,
    adjusted_rand_index,
    complete_linkage_clusters,
    matching_accuracy,
    pairwise_distances,
    soft_accuracy,
)
from .models import (
    LatentPositions,
    ModelConfig,
    perturb_latents,
    random_shuffle,
    sample_dirichlet_latents,
    sample_jrdpg,
    sample_rdpg,
    sample_weighted_rdpg,
)
from .parallel import run_replicates
from .spectral import as_array, procrustes


def _streams(seed, tag, count):
    return np.random.SeedSequence([seed, tag]).spawn(count)


def _shuffle_all(graphs, split, rng, first_fixed=False):
    """Shuffle every graph's unseeded block independently.

    Returns the observed graphs and the shuffles (identity for graph 0 when
    ``first_fixed``).
    """
    out, shuffles = [], []
    for idx, g in enumerate(graphs):
        q = PermutationMap.identity(split.u) if (first_fixed and idx == 0) else random_shuffle(split.u, rng)
        out.append(apply_shuffle(g, split, q))
        shuffles.append(q)
    return out, shuffles


def true_matching(q_i: PermutationMap, q_j: PermutationMap) -> PermutationMap:
    """Correct map from graph ``i``'s shuffled positions to graph ``j``'s."""
    return compose(q_i.inverse(), q_j)


def _accuracies(res, shuffles, k_grid, methods):
    """Mean hard / soft accuracy over the pairs ``(0, j)``."""
    m = len(shuffles)
    hard, soft = [], {k: [] for k in k_grid}
    for j in range(1, m):
        truth = true_matching(shuffles[0], shuffles[j])
        if "hard" in methods:
            hard.append(matching_accuracy(res.permutation(0, j), truth))
        if "soft" in methods and k_grid:
            cost = res.cost(0, j)
            for k in k_grid:
                soft[k].append(soft_accuracy(soft_match(cost, k), truth) if truth.size else 1.0)
    out = {}
    if "hard" in methods:
        out[("hard", 0)] = float(np.mean(hard))
    if "soft" in methods:
        for k in k_grid:
            out[("soft", k)] = float(np.mean(soft[k]))
    return out


def _match_model_replicate(n, d, u, m, conc, k_grid, methods, mode, seed_seq):
    rng = np.random.default_rng(seed_seq)
    x = sample_dirichlet_latents(ModelConfig(n=n, d=d, m=m, concentration_len=conc), rng)
    graphs = sample_jrdpg(x, m, rng)
    split = SeedSplit.canonical(n, n - u)
    observed, shuffles = _shuffle_all(graphs, split, rng, first_fixed=True)
    res = omnimatch(observed, split, d=d, mode=mode)
    return _accuracies(res, shuffles, k_grid, methods)


def _aggregate(rows_by_rep, base):
    keys = rows_by_rep[0].keys() if rows_by_rep else []
    out = []
    for key in keys:
        vals = np.array([r[key] for r in rows_by_rep])
        method, k = key
        row = dict(base)
        row.update({
            "method": method, "k": k, "accuracy": float(vals.mean()),
            "sd": float(vals.std(ddof=1)) if vals.size > 1 else 0.0, "n_mc": int(vals.size),
        })
        out.append(row)
    return out


def match_model_study(n, d_grid, u_grid, k_grid, n_mc, seed, m=2, conc_offset=1,
                      methods=("hard", "soft"), mode="pairwise", threads=1) -> list[dict]:
    """Matching accuracy on JRDPG data over a (d, u) grid."""
    rows = []
    for ci, d in enumerate(d_grid):
        for cj, u in enumerate(u_grid):
            if n - u < d:
                raise ValueError(f"u={u} leaves fewer than d={d} seeds")
            streams = _streams(seed, 1000 * ci + cj, n_mc)
            jobs = [(n, d, u, m, d + conc_offset, tuple(k_grid), tuple(methods), mode, ss) for ss in streams]
            reps = run_replicates(_match_model_replicate, jobs, threads)
            rows.extend(_aggregate(reps, {"n": n, "d": d, "u": u, "s": n - u}))
    return rows


def seed_growth_study(s_grid, u, d, n_mc, seed, m=2, conc_offset=1, threads=1) -> list[dict]:
    """Hard accuracy and perfect-matching rate as the seed count grows.

    Replicate ``r`` uses the same random stream at every ``s``, so the cells
    are compared on paired seeds.
    """
    streams = _streams(seed, 0, n_mc)
    rows = []
    for s in s_grid:
        n = s + u
        jobs = [(n, d, u, m, d + conc_offset, (), ("hard",), "pairwise", ss) for ss in streams]
        acc = np.array([r[("hard", 0)] for r in run_replicates(_match_model_replicate, jobs, threads)])
        rows.append({"s": int(s), "u": int(u), "d": int(d), "accuracy": float(acc.mean()),
                     "perfect_rate": float(np.mean(acc == 1.0)), "n_mc": int(n_mc)})
    return rows


def _match_aligned_replicate(weights, d, u, k_grid, methods, mode, seed_seq):
    rng = np.random.default_rng(seed_seq)
    graphs = [Graph(w) for w in weights]
    n = graphs[0].n
    unseeded = rng.choice(n, size=u, replace=False)
    seeds = np.setdiff1d(np.arange(n), unseeded)
    canon = [canonicalize(g, seeds)[0] for g in graphs]
    split = SeedSplit.canonical(n, n - u)
    observed, shuffles = _shuffle_all(canon, split, rng, first_fixed=True)
    res = omnimatch(observed, split, d=d, mode=mode)
    return _accuracies(res, shuffles, k_grid, methods)


def match_aligned_study(graphs, d_grid, u_grid, k_grid, n_mc, seed, methods=("hard", "soft"),
                        mode="pairwise", threads=1) -> list[dict]:
    """Accuracy on vertex-aligned input graphs with ``u`` random vertices shuffled."""
    n = graphs[0].n
    weights = [g.weights for g in graphs]
    rows = []
    for ci, d in enumerate(d_grid):
        for cj, u in enumerate(u_grid):
            if n - u < (d if d != "auto" else 1):
                raise ValueError(f"u={u} leaves fewer than d={d} seeds")
            streams = _streams(seed, 1000 * ci + cj, n_mc)
            jobs = [(weights, d, u, tuple(k_grid), tuple(methods), mode, ss) for ss in streams]
            reps = run_replicates(_match_aligned_replicate, jobs, threads)
            rows.extend(_aggregate(reps, {"n": n, "d": d, "u": u, "s": n - u}))
    return rows


def match_graphs(graphs, seed_ids, d="auto", mode="pairwise", anchor=None, k_grid=()):
    """Match user graphs given a seed list; rows list every recovered pair.

    Vertex ids in the output are the original ids of the input files.
    """
    canon = [canonicalize(g, seed_ids) for g in graphs]
    split = canon[0][1]
    order = canon[0][2].image
    res = omnimatch([c[0] for c in canon], split, d=d, mode=mode, anchor=anchor)
    rows = []
    m = len(graphs)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            mr = res.matchings[i][j]
            for v, w in enumerate(mr.permutation.image):
                rows.append({
                    "graph_i": i, "graph_j": j, "method": "hard", "rank": 1,
                    "vertex_i": int(order[split.s + v]), "vertex_j": int(order[split.s + w]),
                    "unidentifiable": int(v in mr.unidentifiable),
                })
            for k in k_grid:
                sm = soft_match(res.cost(i, j), k)
                for v in range(split.u):
                    for r, w in enumerate(sm.candidates[v]):
                        rows.append({
                            "graph_i": i, "graph_j": j, "method": f"soft{k}", "rank": r + 1,
                            "vertex_i": int(order[split.s + v]), "vertex_j": int(order[split.s + w]),
                            "unidentifiable": 0,
                        })
    return res, rows


# ---------------------------------------------------------------------------
# multi-graph distances and anomaly detection


def align_and_measure(observed, split, d, mode, anchor=None) -> DistanceMatrix:
    """Distances among observed graphs after OmniMatch (``mode="none"``: identity)."""
    return align_and_measure_modes(observed, split, d, (mode,), anchor)[mode]


def align_and_measure_modes(observed, split, d, modes, anchor=None) -> dict:
    """:func:`align_and_measure` for several modes sharing one embedding."""
    out, res = {}, None
    for mode in modes:
        if mode == "none":
            out[mode] = pairwise_distances(observed, None, s=split.s)
            continue
        res = omnimatch(observed, split, d=d, mode=mode, anchor=anchor) if res is None \
            else rematch(res, mode, anchor)
        out[mode] = pairwise_distances(observed, res.matchings, s=split.s)
    return out


def _multimatch_replicate(n, d, conc, m, u, n_perturbed, err, perturbed, modes, anchor, seed_seq):
    rng = np.random.default_rng(seed_seq)
    x = sample_dirichlet_latents(ModelConfig(n=n, d=d, m=m, concentration_len=conc), rng)
    rows = rng.choice(n, size=n_perturbed, replace=False)
    y = perturb_latents(x, err, rows=rows)
    graphs = [sample_rdpg(y if i == perturbed else x, rng, clamp=True) for i in range(m)]
    split = SeedSplit.canonical(n, n - u)
    observed, _ = _shuffle_all(graphs, split, rng)
    dists = align_and_measure_modes(observed, split, d, modes, anchor)
    return {mode: dists[mode].values for mode in modes}


def multimatch_model_study(m, n, d, u_grid, n_perturbed, err, n_mc, seed, perturbed=None,
                           modes=("anchor", "pairwise"), anchor=None, conc_offset=2, threads=1):
    """Pairwise-distance anomaly study on ``m`` JRDPG graphs, one of them perturbed.

    Returns ``(mean_distances, detections)``: ``mean_distances[(u, mode)]`` is
    the replicate-averaged matrix and ``detections[(u, mode)]`` the list of
    per-replicate flags "perturbed graph has the largest row mean".
    """
    if perturbed is None:
        perturbed = int(np.random.default_rng(np.random.SeedSequence([seed, 99])).integers(m))
    means, detections, maxima = {}, {}, {}
    for cj, u in enumerate(u_grid):
        streams = _streams(seed, cj, n_mc)
        jobs = [(n, d, d + conc_offset, m, u, n_perturbed, err, perturbed, tuple(modes), anchor, ss)
                for ss in streams]
        reps = run_replicates(_multimatch_replicate, jobs, threads)
        for mode in modes:
            mats = [r[mode] for r in reps]
            means[(u, mode)] = DistanceMatrix(np.mean(mats, axis=0))
            detections[(u, mode)] = [
                bool(np.argmax(DistanceMatrix(mat).row_means()) == perturbed) for mat in mats
            ]
    return perturbed, means, detections


def anomaly_ranking(dist: DistanceMatrix) -> list[tuple[int, float, int]]:
    """``(graph, row_mean, rank)`` sorted by decreasing row mean (rank 1 = most anomalous)."""
    rm = dist.row_means()
    order = np.argsort(-rm, kind="stable")
    return [(int(g), float(rm[g]), r + 1) for r, g in enumerate(order)]


# ---------------------------------------------------------------------------
# out-of-sample error decay


def _oos_error_replicate(s, u, m, d, conc, seed_seq):
    rng = np.random.default_rng(seed_seq)
    n = s + u
    x = sample_dirichlet_latents(ModelConfig(n=n, d=d, m=m, concentration_len=conc), rng)
    graphs = sample_jrdpg(x, m, rng)
    split = SeedSplit.canonical(n, s)
    res = omnimatch(graphs, split, d=d)
    truth = x.values
    est = np.vstack([as_array(e) for e in res.seed_embeddings])
    w = procrustes(est, np.tile(truth[:s], (m, 1))).w
    errs = [np.linalg.norm(as_array(o) - truth[s:] @ w, axis=1).max() for o in res.oos_embeddings]
    return float(max(errs))


def oos_error_study(s_grid, u, m, d, n_mc, seed, conc_offset=1, threads=1) -> list[dict]:
    """Mean over replicates of the maximum OOS row error ``||w_v - W^T X_v||``.

    ``W`` aligns the joint seed embedding to the true seed latent positions.
    The slope is that of a least-squares line through ``(log s, log error)``.
    """
    rows = []
    for cj, s in enumerate(s_grid):
        jobs = [(s, u, m, d, d + conc_offset, ss) for ss in _streams(seed, cj, n_mc)]
        vals = np.array(run_replicates(_oos_error_replicate, jobs, threads))
        rows.append({"s": int(s), "mean_max_error": float(vals.mean()),
                     "sd": float(vals.std(ddof=1)) if vals.size > 1 else 0.0, "n_mc": int(n_mc)})
    return rows


def log_log_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ---------------------------------------------------------------------------
# clustering


def subject_latents(subjects, n, d, conc, mix, rng) -> list[LatentPositions]:
    """Per-subject latent positions ``(1 - mix) X_common + mix X_subject``.

    The Dirichlet-projected support is convex, so every mixture is a valid
    set of RDPG latent positions.
    """
    cfg = ModelConfig(n=n, d=d, concentration_len=conc)
    common = sample_dirichlet_latents(cfg, rng).values
    return [LatentPositions((1 - mix) * common + mix * sample_dirichlet_latents(cfg, rng).values)
            for _ in range(subjects)]


def _cluster_on_graphs(graphs, labels, u, d, methods, n_clusters, anchor, rng):
    n = graphs[0].n
    unseeded = rng.choice(n, size=u, replace=False)
    seeds = np.setdiff1d(np.arange(n), unseeded)
    canon = [canonicalize(g, seeds)[0] for g in graphs]
    split = SeedSplit.canonical(n, n - u)
    observed, _ = _shuffle_all(canon, split, rng)
    modes = [{"omni": "none"}.get(method, method) for method in methods]
    dists = align_and_measure_modes(observed, split, d, modes, anchor)
    out = {}
    for method, mode in zip(methods, modes):
        pred = complete_linkage_clusters(dists[mode], n_clusters)
        out[method] = adjusted_rand_index(labels, pred)
    return out


def _cluster_surrogate_replicate(subjects, scans, n, d, conc, mix, u, methods, anchor, trials, seed_seq):
    rng = np.random.default_rng(seed_seq)
    latents = subject_latents(subjects, n, d, conc, mix, rng)
    graphs, labels = [], []
    for sub, x in enumerate(latents):
        if trials == 1:
            graphs.extend(sample_jrdpg(x, scans, rng))
        else:
            graphs.extend(sample_weighted_rdpg(x, trials, rng) for _ in range(scans))
        labels.extend([sub] * scans)
    return _cluster_on_graphs(graphs, np.array(labels), u, d, methods, subjects, anchor, rng)


def _cluster_data_replicate(weights, labels, u, d, methods, n_clusters, anchor, seed_seq):
    rng = np.random.default_rng(seed_seq)
    graphs = [Graph(w) for w in weights]
    return _cluster_on_graphs(graphs, labels, u, d, methods, n_clusters, anchor, rng)


def _summarise_ari(reps, u, methods):
    rows = []
    for method in methods:
        vals = np.array([r[method] for r in reps])
        rows.append({
            "u": u, "method": method, "mean_ari": float(vals.mean()),
            "sd": float(vals.std(ddof=1)) if vals.size > 1 else 0.0, "n_mc": int(vals.size),
        })
    return rows


def cluster_surrogate_study(subjects, scans, n, d, mix, u_grid, n_mc, seed,
                            methods=("omni", "anchor", "pairwise"), anchor=None, conc_offset=1,
                            trials=1, threads=1) -> list[dict]:
    """Mean ARI of complete-linkage clusters vs subject labels on synthetic subjects.

    Each subject has its own latent positions and contributes ``scans``
    draws; ``trials > 1`` makes the draws weighted (binomial counts).
    """
    rows = []
    for cj, u in enumerate(u_grid):
        jobs = [(subjects, scans, n, d, d + conc_offset, mix, u, tuple(methods), anchor, trials, ss)
                for ss in _streams(seed, cj, n_mc)]
        rows.extend(_summarise_ari(run_replicates(_cluster_surrogate_replicate, jobs, threads), u, methods))
    return rows


def cluster_data_study(graphs, labels, u_grid, d, n_mc, seed, n_clusters=None,
                       methods=("omni", "anchor", "pairwise"), anchor=None, threads=1) -> list[dict]:
    labels = np.asarray(labels)
    n_clusters = n_clusters or len(np.unique(labels))
    weights = [g.weights for g in graphs]
    rows = []
    for cj, u in enumerate(u_grid):
        jobs = [(weights, labels, u, d, tuple(methods), n_clusters, anchor, ss)
                for ss in _streams(seed, cj, n_mc)]
        rows.extend(_summarise_ari(run_replicates(_cluster_data_replicate, jobs, threads), u, methods))
    return rows


# ---------------------------------------------------------------------------
# embedding ingestion


def cosine_graph(emb, threshold: float | None = None) -> Graph:
    """Cosine-similarity graph of the rows of ``emb`` (diagonal cleared).

    With ``threshold`` similarities below it are set to zero.
    """
    emb = np.asarray(emb, dtype=float)
    norms = np.linalg.norm(emb, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"zero-norm rows (cosine undefined): {zero[:10].tolist()}")
    unit = emb / norms[:, None]
    sim = unit @ unit.T
    sim = (sim + sim.T) / 2
    np.fill_diagonal(sim, 0.0)
    if threshold is not None:
        sim[sim < threshold] = 0.0
    return Graph(sim)
