import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from omnimatch.cli import main
from omnimatch.core import Graph, write_graph_csv
from omnimatch.models import ModelConfig, sample_dirichlet_latents, sample_jrdpg

SMALL = {
    "match": {"n": 80, "d_grid": [2], "u_grid": [10], "k_grid": [1, 3], "n_mc": 2},
    "multimatch": {"m": 3, "n": 60, "d": 2, "u_grid": [10], "n_perturbed": 10, "err": 0.1, "n_mc": 2},
    "power": {"n": 60, "d": 2, "v0": 10, "v1_grid": [10], "err_grid": [0.05], "n_mc": 20},
    "cluster": {"subjects": 2, "scans": 3, "n": 30, "d": 2, "u_grid": [5], "n_mc": 2, "trials": 5},
}


def schema():
    text = resources.files("omnimatch").joinpath("schemas/run_summary.schema.json").read_text()
    return json.loads(text)


def run(tmp_path, command, config=None, extra=(), out="out"):
    args = [command, "--out-dir", str(tmp_path / out), "--no-timestamp", "--threads", "1", "--seed", "7"]
    if config is not None:
        path = tmp_path / f"{command}_{out}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    code = main(args + list(extra))
    return code, tmp_path / out


def outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.fixture
def graph_files(tmp_path):
    rng = np.random.default_rng(0)
    x = sample_dirichlet_latents(ModelConfig(n=40, d=2), rng)
    paths = []
    for i, g in enumerate(sample_jrdpg(x, 4, rng)):
        p = tmp_path / f"g{i}.csv"
        write_graph_csv(g, p)
        paths.append(str(p))
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("\n".join(str(v) for v in range(5, 40)) + "\n")
    return paths, str(seeds)


@pytest.mark.parametrize("command", sorted(SMALL))
def test_simulation_commands_are_deterministic_and_valid(tmp_path, command):
    code, a = run(tmp_path, command, SMALL[command], out="a")
    assert code == 0
    code, b = run(tmp_path, command, SMALL[command], out="b")
    assert outputs(a) == outputs(b)
    summary = json.loads((a / f"{command}_summary.json").read_text())
    jsonschema.validate(summary, schema())
    assert "generated_at" not in summary
    assert summary["config"]["seed"] == 7
    for name in summary["outputs"]:
        assert (a / name).is_file()


def test_config_round_trip(tmp_path):
    code, a = run(tmp_path, "match", SMALL["match"], out="a")
    assert code == 0
    code = main(["match", "--config", str(a / "match_config.json"), "--out-dir", str(tmp_path / "b"),
                 "--no-timestamp", "--threads", "1"])
    assert code == 0
    assert (a / "match_accuracy.csv").read_bytes() == (tmp_path / "b" / "match_accuracy.csv").read_bytes()


def test_timestamp_present_by_default(tmp_path):
    main(["power", "--out-dir", str(tmp_path), "--threads", "1", "--config", str(_write(tmp_path, SMALL["power"]))])
    assert "generated_at" in json.loads((tmp_path / "power_summary.json").read_text())


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "power", {"n": 60, "colour": "red"})
    assert exc.value.code == 2
    assert "colour" in capsys.readouterr().err


def test_invalid_values_are_usage_errors(tmp_path):
    for command, cfg in [("power", {"alpha": 1.5}), ("match", {"mode": "greedy"}),
                         ("cluster", {"mix": 2.0}), ("multimatch", {"modes": []})]:
        with pytest.raises(SystemExit) as exc:
            run(tmp_path, command, cfg)
        assert exc.value.code == 2


def test_match_real_data_needs_seed_list(tmp_path, graph_files, capsys):
    paths, _ = graph_files
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "match", {"d": 2}, extra=["--graphs", *paths[:2]])
    assert exc.value.code == 2
    assert "--seeds" in capsys.readouterr().err


def test_match_real_data_pairs(tmp_path, graph_files):
    paths, seeds = graph_files
    code, out = run(tmp_path, "match", {"d": 2, "k_grid": [2]}, extra=["--graphs", *paths[:3], "--seeds", seeds])
    assert code == 0
    lines = (out / "match_pairs.csv").read_text().splitlines()
    assert lines[0] == "graph_i,graph_j,method,rank,vertex_i,vertex_j,unidentifiable"
    # 3 ordered pairs per direction x 5 unseeded: hard plus 2 soft ranks each
    assert len(lines) - 1 == 6 * 5 * 3


def test_match_row_count_simulation(tmp_path):
    code, out = run(tmp_path, "match", SMALL["match"])
    rows = (out / "match_accuracy.csv").read_text().splitlines()[1:]
    assert len(rows) == 1 + 2


def test_multimatch_real_data_records_anchor(tmp_path, graph_files):
    paths, seeds = graph_files
    code, out = run(tmp_path, "multimatch", {"d": 2}, extra=["--graphs", *paths, "--seeds", seeds, "--anchor", "1"])
    assert code == 0
    summary = json.loads((out / "multimatch_summary.json").read_text())
    assert summary["results"]["anchor"] == 1
    mat = np.loadtxt(out / "distances_anchor_u5.csv", delimiter=",", skiprows=1)[:, 1:]
    assert mat.shape == (4, 4) and np.allclose(mat, mat.T) and np.all(np.diag(mat) == 0)


def test_multimatch_default_anchor_is_last(tmp_path):
    code, out = run(tmp_path, "multimatch", SMALL["multimatch"])
    summary = json.loads((out / "multimatch_summary.json").read_text())
    assert summary["results"]["anchor"] == 2
    assert 0 <= summary["results"]["perturbed_graph"] < 3


def test_power_echoes_alpha(tmp_path):
    cfg = dict(SMALL["power"], alpha=0.1, methods=["hard"])
    code, out = run(tmp_path, "power", cfg)
    summary = json.loads((out / "power_summary.json").read_text())
    assert summary["results"]["alpha"] == 0.1
    assert set(summary["results"]["critical_values"]) == {"hard"}


def test_power_external_results_merged(tmp_path):
    ext = tmp_path / "ext.csv"
    ext.write_text("err,v1,method,power\n0.05,10,other,0.4\n")
    cfg = dict(SMALL["power"], methods=["hard"], external_results=str(ext))
    code, out = run(tmp_path, "power", cfg)
    assert "other" in (out / "power.csv").read_text()


def test_cluster_on_files(tmp_path, graph_files):
    paths, _ = graph_files
    labels = tmp_path / "labels.txt"
    labels.write_text("a\na\nb\nb\n")
    code, out = run(tmp_path, "cluster", {"d": 2, "u_grid": [5], "n_mc": 2},
                    extra=["--graphs", *paths, "--labels", str(labels)])
    assert code == 0
    assert len((out / "cluster_ari.csv").read_text().splitlines()) == 1 + 3


def test_ingest_embeddings(tmp_path):
    rng = np.random.default_rng(1)
    inputs = []
    for i in range(2):
        p = tmp_path / f"e{i}.csv"
        np.savetxt(p, rng.normal(size=(12, 4)), delimiter=",")
        inputs.append(str(p))
    code, out = run(tmp_path, "ingest-embeddings", None, extra=["--inputs", *inputs])
    assert code == 0
    g = np.loadtxt(out / "graph_0.csv", delimiter=",")
    assert g.shape == (12, 12) and np.allclose(g, g.T) and np.all(np.diag(g) == 0)
    summary = json.loads((out / "ingest_embeddings_summary.json").read_text())
    jsonschema.validate(summary, schema())
    assert summary["results"]["n"] == 12


def test_ingest_ragged_rows_rejected(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "ingest-embeddings", None, extra=["--inputs", str(p)])
    assert exc.value.code == 2
    assert "ragged" in capsys.readouterr().err


def test_graphs_of_different_sizes_rejected(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_graph_csv(Graph(np.zeros((3, 3))), a)
    write_graph_csv(Graph(np.zeros((4, 4))), b)
    with pytest.raises(SystemExit):
        run(tmp_path, "match", None, extra=["--graphs", str(a), str(b), "--seeds", str(a)])
