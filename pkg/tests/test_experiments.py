import numpy as np
import pytest

from omnimatch.core import Graph, PermutationMap
from omnimatch.experiments import (
    anomaly_ranking,
    cluster_data_study,
    cluster_surrogate_study,
    cosine_graph,
    log_log_slope,
    match_aligned_study,
    match_graphs,
    match_model_study,
    multimatch_model_study,
    oos_error_study,
    seed_growth_study,
    subject_latents,
    true_matching,
)
from omnimatch.metrics import DistanceMatrix
from omnimatch.models import ModelConfig, sample_dirichlet_latents, sample_jrdpg


def test_true_matching_convention():
    qi, qj = PermutationMap([1, 2, 0]), PermutationMap([2, 0, 1])
    t = true_matching(qi, qj)
    # original vertex v sits at qi(v) in graph i and at qj(v) in graph j
    for v in range(3):
        assert t.image[qi.image[v]] == qj.image[v]


def test_match_model_study_row_accounting():
    rows = match_model_study(200, [2, 3, 4], [20], [1, 3, 5, 10], n_mc=2, seed=0)
    soft = [r for r in rows if r["method"] == "soft"]
    hard = [r for r in rows if r["method"] == "hard"]
    assert len(soft) == 12 and len(hard) == 3
    assert all(0 <= r["accuracy"] <= 1 for r in rows)
    assert all(r["s"] == 180 for r in rows)


def test_match_model_study_zero_shuffle():
    rows = match_model_study(100, [2], [0], [1, 3], n_mc=2, seed=1)
    assert all(r["accuracy"] == 1.0 for r in rows)


def test_match_model_study_soft_accuracy_grows_with_k():
    rows = match_model_study(300, [2], [60], [1, 5, 10], n_mc=3, seed=2)
    soft = {r["k"]: r["accuracy"] for r in rows if r["method"] == "soft"}
    assert soft[1] <= soft[5] <= soft[10]


def test_match_model_study_rejects_too_few_seeds():
    with pytest.raises(ValueError):
        match_model_study(10, [5], [8], [1], n_mc=1, seed=0)


def test_match_graphs_reports_original_ids():
    rng = np.random.default_rng(3)
    x = sample_dirichlet_latents(ModelConfig(n=60, d=2), rng)
    a, _ = sample_jrdpg(x, 2, rng)
    seeds = list(range(10, 60))
    res, rows = match_graphs([a, a], seeds, d=2, k_grid=(2,))
    hard = [r for r in rows if r["method"] == "hard" and r["graph_i"] == 0]
    assert sorted(r["vertex_i"] for r in hard) == list(range(10))
    assert all(r["vertex_i"] == r["vertex_j"] for r in hard)
    assert sum(r["method"] == "soft2" for r in rows) == 2 * 2 * 10


def test_identical_cosine_graphs_match_perfectly():
    rng = np.random.default_rng(4)
    emb = rng.normal(size=(80, 6))
    g1, g2 = cosine_graph(emb), cosine_graph(emb.copy())
    assert g1 == g2
    rows = match_aligned_study([g1, g2], [1, 3], [10, 40], [], n_mc=3, seed=0, methods=("hard",))
    assert all(r["accuracy"] == 1.0 for r in rows)


def test_cosine_graph_examples():
    g = cosine_graph(np.eye(3))
    assert not g.weights.any()
    g = cosine_graph(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 2.0]]))
    assert g.weights[0, 1] == pytest.approx(1.0) and g.weights[0, 0] == 0
    g = cosine_graph(np.array([[1.0, 0.0], [-1.0, 0.1], [0.5, 0.5]]), threshold=0.0)
    assert np.all(g.weights >= 0)
    with pytest.raises(ValueError, match="zero-norm"):
        cosine_graph(np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_multimatch_study_shapes():
    perturbed, means, det = multimatch_model_study(4, 120, 2, [20], 20, 0.1, 2, 0, modes=("anchor", "pairwise", "none"))
    assert 0 <= perturbed < 4
    for key in [(20, "anchor"), (20, "pairwise"), (20, "none")]:
        d = means[key]
        assert isinstance(d, DistanceMatrix) and d.size == 4
        assert np.array_equal(d.values, d.values.T) and np.all(np.diag(d.values) == 0)
        assert len(det[key]) == 2


def test_anomaly_ranking_orders_by_row_mean():
    d = DistanceMatrix(np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 4.0], [5.0, 4.0, 0.0]]))
    ranks = anomaly_ranking(d)
    assert [r[0] for r in ranks] == [2, 0, 1]
    assert [r[2] for r in ranks] == [1, 2, 3]


def test_subject_latents_are_valid_mixtures():
    lat = subject_latents(3, 30, 2, 3, 0.4, np.random.default_rng(0))
    assert len(lat) == 3 and all(x.is_valid() for x in lat)


def test_cluster_surrogate_easy_case():
    rows = cluster_surrogate_study(3, 4, 40, 2, 1.0, [0], n_mc=2, seed=0, trials=200)
    assert {r["method"] for r in rows} == {"omni", "anchor", "pairwise"}
    for r in rows:
        assert r["mean_ari"] == pytest.approx(1.0)


def test_cluster_data_singletons():
    rng = np.random.default_rng(5)
    x = sample_dirichlet_latents(ModelConfig(n=30, d=2), rng)
    graphs = sample_jrdpg(x, 4, rng)
    rows = cluster_data_study(graphs, [0, 0, 1, 1], [5], 2, n_mc=2, seed=0, n_clusters=4)
    assert len(rows) == 3
    assert all(r["mean_ari"] == 0.0 for r in rows)


def test_seed_growth_and_oos_studies_shapes():
    rows = seed_growth_study([60, 120], 5, 2, n_mc=2, seed=0)
    assert [r["s"] for r in rows] == [60, 120]
    assert all(0 <= r["perfect_rate"] <= r["accuracy"] or r["perfect_rate"] <= 1 for r in rows)
    rows = oos_error_study([50, 100], 5, 2, 2, n_mc=2, seed=0)
    assert all(r["mean_max_error"] > 0 for r in rows)


def test_log_log_slope():
    s = np.array([250.0, 500.0, 1000.0])
    assert log_log_slope(s, 3 * s ** -0.5) == pytest.approx(-0.5)
