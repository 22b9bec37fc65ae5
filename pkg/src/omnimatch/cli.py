"""Command-line experiment harness.

Every subcommand reads an optional JSON config (unknown keys are errors),
applies the global flags, writes long-format CSV tables plus a JSON run
summary into ``--out-dir``, and echoes the effective configuration so the
run can be repeated with ``--config <out-dir>/<command>_config.json``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import __version__
from .core import Graph, canonicalize, read_graph, write_graph_csv
from .experiments import (
    anomaly_ranking,
    cluster_data_study,
    cluster_surrogate_study,
    cosine_graph,
    match_aligned_study,
    match_graphs,
    match_model_study,
    multimatch_model_study,
    align_and_measure_modes,
)
from .parallel import default_threads
from .testing import TestConfig, run_power_study

log = logging.getLogger("omnimatch")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configs


@dataclasses.dataclass
class MatchConfig:
    graphs: list = dataclasses.field(default_factory=list)
    seeds: Union[str, list, None] = None
    aligned: bool = False
    n: int = 500
    m: int = 2
    d: Union[int, str] = "auto"
    d_grid: list = dataclasses.field(default_factory=lambda: [2])
    u_grid: list = dataclasses.field(default_factory=lambda: [20])
    k_grid: list = dataclasses.field(default_factory=lambda: [1, 3, 5, 10])
    methods: list = dataclasses.field(default_factory=lambda: ["hard", "soft"])
    mode: str = "pairwise"
    anchor: Optional[int] = None
    n_mc: int = 50
    conc_offset: int = 1
    log1p: bool = False
    seed: int = 0

    def validate(self):
        _check_methods(self.methods, {"hard", "soft"})
        _check_mode(self.mode)
        _positive("n_mc", self.n_mc)
        _check_d(self.d)
        if not self.graphs:
            _positive("n", self.n)
            if self.m < 2:
                raise UsageError("m must be >= 2")
            for d in self.d_grid:
                _positive("d_grid entry", d)
            for u in self.u_grid:
                if not 0 <= u < self.n:
                    raise UsageError(f"u={u} outside [0, n)")
        elif len(self.graphs) < 2:
            raise UsageError("match needs at least two graph files")
        for k in self.k_grid:
            _positive("k_grid entry", k)
        if self.conc_offset < 1:
            raise UsageError("conc_offset must be >= 1")


@dataclasses.dataclass
class MultimatchConfig:
    graphs: list = dataclasses.field(default_factory=list)
    seeds: Union[str, list, None] = None
    m: int = 10
    n: int = 500
    d: Union[int, str] = 10
    u_grid: list = dataclasses.field(default_factory=lambda: [120])
    n_perturbed: int = 80
    err: float = 0.05
    perturbed: Optional[int] = None
    modes: list = dataclasses.field(default_factory=lambda: ["anchor", "pairwise"])
    anchor: Optional[int] = None
    n_mc: int = 20
    conc_offset: int = 2
    squared: bool = False
    log1p: bool = False
    seed: int = 0

    def validate(self):
        _check_methods(self.modes, {"anchor", "pairwise", "none"}, key="modes")
        _check_d(self.d)
        _positive("n_mc", self.n_mc)
        if not self.graphs:
            if self.m < 2:
                raise UsageError("m must be >= 2")
            if self.d == "auto":
                raise UsageError("simulation mode needs an integer d")
            if not 0 <= self.n_perturbed <= self.n:
                raise UsageError("n_perturbed outside [0, n]")
            if self.err < 0:
                raise UsageError("err must be non-negative")
            if self.perturbed is not None and not 0 <= self.perturbed < self.m:
                raise UsageError("perturbed graph index outside 0..m-1")
            for u in self.u_grid:
                if not 0 <= u <= self.n - self.d:
                    raise UsageError(f"u={u} leaves fewer than d seeds")
        elif len(self.graphs) < 2:
            raise UsageError("multimatch needs at least two graph files")
        if self.anchor is not None and not 0 <= self.anchor < max(self.m, len(self.graphs)):
            raise UsageError("anchor index out of range")


@dataclasses.dataclass
class PowerConfig:
    n: int = 500
    d: int = 10
    v0: int = 120
    v1_grid: list = dataclasses.field(default_factory=lambda: list(range(20, 121, 10)))
    err_grid: list = dataclasses.field(default_factory=lambda: [0.01, 0.011, 0.012])
    methods: list = dataclasses.field(default_factory=lambda: ["hard", "soft"])
    k: int = 5
    alpha: float = 0.05
    n_mc: int = 50
    noise: str = "shift"
    external_results: Optional[str] = None
    seed: int = 0

    def validate(self):
        _check_methods(self.methods, {"hard", "soft"})
        if self.external_results is not None and not Path(self.external_results).is_file():
            raise UsageError(f"external_results file not found: {self.external_results}")
        for method in self.methods:
            try:
                self.test_config(method)
            except ValueError as exc:
                raise UsageError(str(exc)) from None

    def test_config(self, method) -> TestConfig:
        return TestConfig(n=self.n, d=self.d, v0=self.v0, v1_grid=tuple(self.v1_grid),
                          err_grid=tuple(self.err_grid), alpha=self.alpha, n_mc=self.n_mc,
                          method=method, k=self.k, seed=self.seed, noise=self.noise)


@dataclasses.dataclass
class ClusterConfig:
    graphs: list = dataclasses.field(default_factory=list)
    labels: Optional[str] = None
    subjects: int = 10
    scans: int = 10
    n: int = 70
    d: Union[int, str] = 3
    mix: float = 0.5
    trials: int = 20
    u_grid: list = dataclasses.field(default_factory=lambda: [20, 50])
    n_clusters: Optional[int] = None
    methods: list = dataclasses.field(default_factory=lambda: ["omni", "anchor", "pairwise"])
    anchor: Optional[int] = None
    n_mc: int = 50
    conc_offset: int = 1
    log1p: bool = False
    seed: int = 0

    def validate(self):
        _check_methods(self.methods, {"omni", "anchor", "pairwise"})
        _check_d(self.d)
        _positive("n_mc", self.n_mc)
        if self.graphs:
            if self.labels is None:
                raise UsageError("cluster on graph files needs a label sidecar (--labels)")
        else:
            _positive("subjects", self.subjects)
            _positive("scans", self.scans)
            if not 0 <= self.mix <= 1:
                raise UsageError("mix must lie in [0, 1]")
            _positive("trials", self.trials)
            if self.d == "auto":
                raise UsageError("surrogate mode needs an integer d")
            for u in self.u_grid:
                if not 0 <= u <= self.n - self.d:
                    raise UsageError(f"u={u} leaves fewer than d seeds")
        count = len(self.graphs) or self.subjects * self.scans
        if self.n_clusters is not None and not 1 <= self.n_clusters <= count:
            raise UsageError("n_clusters outside 1..number of graphs")


@dataclasses.dataclass
class IngestConfig:
    inputs: list = dataclasses.field(default_factory=list)
    threshold: Optional[float] = None
    seed: int = 0

    def validate(self):
        if len(self.inputs) < 1:
            raise UsageError("ingest-embeddings needs at least one embedding file (--inputs)")


def _positive(name, value):
    if not isinstance(value, int) or value < 1:
        raise UsageError(f"{name} must be a positive integer, got {value!r}")


def _check_d(d):
    if d != "auto" and (not isinstance(d, int) or d < 1):
        raise UsageError(f"d must be a positive integer or 'auto', got {d!r}")


def _check_mode(mode):
    if mode not in ("pairwise", "anchor"):
        raise UsageError(f"mode must be 'pairwise' or 'anchor', got {mode!r}")


def _check_methods(methods, allowed, key="methods"):
    bad = [x for x in methods if x not in allowed]
    if bad or not methods:
        raise UsageError(f"{key} must be a non-empty subset of {sorted(allowed)}, got {methods!r}")


CONFIGS = {
    "match": MatchConfig,
    "multimatch": MultimatchConfig,
    "power": PowerConfig,
    "cluster": ClusterConfig,
    "ingest-embeddings": IngestConfig,
}


def load_config(command: str, path=None, overrides=None):
    cls = CONFIGS[command]
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"{path}: config must be a JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    cfg = cls(**data)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# io helpers


def write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: _fmt(r.get(c, "")) for c in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_matrix_csv(path: Path, mat: np.ndarray) -> None:
    m = mat.shape[0]
    rows = [dict({"graph": i}, **{f"g{j}": float(mat[i, j]) for j in range(m)}) for i in range(m)]
    write_csv(path, rows, ["graph"] + [f"g{j}" for j in range(m)])


def _load_graphs(paths, log1p=False) -> list[Graph]:
    graphs = []
    for p in paths:
        try:
            g = read_graph(p)
        except OSError as exc:
            raise UsageError(f"cannot read graph {p}: {exc}") from None
        if log1p:
            g = Graph(np.log1p(g.weights))
        graphs.append(g)
    sizes = {g.n for g in graphs}
    if len(sizes) > 1:
        raise UsageError(f"input graphs have different vertex counts: {sorted(sizes)}")
    return graphs


def _load_ids(spec, flag) -> list[int]:
    if spec is None:
        raise UsageError(f"a seed list is required for real data ({flag})")
    if isinstance(spec, list):
        return [int(x) for x in spec]
    path = Path(spec)
    try:
        tokens = path.read_text().split()
    except OSError as exc:
        raise UsageError(f"cannot read seed list {path}: {exc}") from None
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise UsageError(f"{path}: seed ids must be integers") from None


def _load_labels(path) -> list[str]:
    try:
        return [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise UsageError(f"cannot read labels {path}: {exc}") from None


def read_embedding_csv(path) -> np.ndarray:
    path = Path(path)
    rows = []
    width = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(x) for x in line.split(",")]
            except ValueError:
                raise UsageError(f"{path}:{lineno}: non-numeric entry") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise UsageError(f"{path}:{lineno}: ragged row ({len(row)} values, expected {width})")
            rows.append(row)
    if not rows:
        raise UsageError(f"{path}: no rows")
    return np.array(rows)


# ---------------------------------------------------------------------------
# commands; each returns (outputs, results) after writing its tables


def cmd_match(cfg: MatchConfig, out: Path, threads: int):
    if cfg.graphs and not cfg.aligned:
        graphs = _load_graphs(cfg.graphs, cfg.log1p)
        seeds = _load_ids(cfg.seeds, "--seeds or config key 'seeds'")
        res, rows = match_graphs(graphs, seeds, d=cfg.d, mode=cfg.mode, anchor=cfg.anchor,
                                 k_grid=cfg.k_grid if "soft" in cfg.methods else ())
        path = out / "match_pairs.csv"
        write_csv(path, rows, ["graph_i", "graph_j", "method", "rank", "vertex_i", "vertex_j", "unidentifiable"])
        return [path.name], {"d": res.d, "pairs": len(rows)}
    k_grid = cfg.k_grid if "soft" in cfg.methods else []
    if cfg.graphs:
        graphs = _load_graphs(cfg.graphs, cfg.log1p)
        d_grid = cfg.d_grid if cfg.d == "auto" else [cfg.d]
        rows = match_aligned_study(graphs, d_grid, cfg.u_grid, k_grid, cfg.n_mc, cfg.seed,
                                   cfg.methods, cfg.mode, threads)
    else:
        rows = match_model_study(cfg.n, cfg.d_grid, cfg.u_grid, k_grid, cfg.n_mc, cfg.seed, cfg.m,
                                 cfg.conc_offset, cfg.methods, cfg.mode, threads)
    path = out / "match_accuracy.csv"
    write_csv(path, rows, ["n", "d", "u", "s", "method", "k", "accuracy", "sd", "n_mc"])
    return [path.name], {"cells": len(rows)}


def cmd_multimatch(cfg: MultimatchConfig, out: Path, threads: int):
    outputs = []
    rank_rows = []
    results = {"anchor": cfg.anchor if cfg.anchor is not None else None}
    if cfg.graphs:
        graphs = _load_graphs(cfg.graphs, cfg.log1p)
        seeds = _load_ids(cfg.seeds, "--seeds or config key 'seeds'")
        canon = [canonicalize(g, seeds) for g in graphs]
        split = canon[0][1]
        observed = [c[0] for c in canon]
        anchor = cfg.anchor if cfg.anchor is not None else len(graphs) - 1
        results["anchor"] = anchor if "anchor" in cfg.modes else None
        dists = align_and_measure_modes(observed, split, cfg.d, cfg.modes, anchor)
        means = {(split.u, mode): dists[mode] for mode in cfg.modes}
        detections = {}
    else:
        perturbed, means, detections = multimatch_model_study(
            cfg.m, cfg.n, cfg.d, cfg.u_grid, cfg.n_perturbed, cfg.err, cfg.n_mc, cfg.seed,
            cfg.perturbed, cfg.modes, cfg.anchor, cfg.conc_offset, threads)
        results["perturbed_graph"] = perturbed
        results["anchor"] = (cfg.m - 1 if cfg.anchor is None else cfg.anchor) if "anchor" in cfg.modes else None
    for (u, mode), dist in means.items():
        mat = dist.values ** 2 if cfg.squared else dist.values
        path = out / f"distances_{mode}_u{u}.csv"
        write_matrix_csv(path, mat)
        outputs.append(path.name)
        for g, mean, rank in anomaly_ranking(dist):
            rank_rows.append({"u": u, "mode": mode, "graph": g, "row_mean": mean, "rank": rank})
    path = out / "anomaly_ranking.csv"
    write_csv(path, rank_rows, ["u", "mode", "graph", "row_mean", "rank"])
    outputs.append(path.name)
    if detections:
        results["detection_rate"] = {f"{mode}_u{u}": float(np.mean(v)) for (u, mode), v in detections.items()}
    return outputs, results


def _read_external(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    need = {"err", "v1", "method", "power"}
    if rows and not need <= set(rows[0]):
        raise UsageError(f"{path}: external results need columns {sorted(need)}")
    return [{"err": float(r["err"]), "v1": int(r["v1"]), "method": r["method"],
             "power": float(r["power"]), "n_mc": r.get("n_mc", ""), "seed": r.get("seed", "")} for r in rows]


def cmd_power(cfg: PowerConfig, out: Path, threads: int):
    rows, crit = [], {}
    for method in cfg.methods:
        study = run_power_study(cfg.test_config(method), threads=threads)
        rows.extend(study.rows())
        crit[study.config.method_label] = study.critical_value
    if cfg.external_results:
        rows.extend(_read_external(cfg.external_results))
    path = out / "power.csv"
    write_csv(path, rows, ["err", "v1", "method", "power", "n_mc", "seed"])
    return [path.name], {"alpha": cfg.alpha, "critical_values": crit, "cells": len(rows)}


def cmd_cluster(cfg: ClusterConfig, out: Path, threads: int):
    if cfg.graphs:
        graphs = _load_graphs(cfg.graphs, cfg.log1p)
        labels = _load_labels(cfg.labels)
        if len(labels) != len(graphs):
            raise UsageError(f"{len(labels)} labels for {len(graphs)} graphs")
        rows = cluster_data_study(graphs, labels, cfg.u_grid, cfg.d, cfg.n_mc, cfg.seed,
                                  cfg.n_clusters, cfg.methods, cfg.anchor, threads)
    else:
        rows = cluster_surrogate_study(cfg.subjects, cfg.scans, cfg.n, cfg.d, cfg.mix, cfg.u_grid,
                                       cfg.n_mc, cfg.seed, cfg.methods, cfg.anchor, cfg.conc_offset,
                                       cfg.trials, threads)
    path = out / "cluster_ari.csv"
    write_csv(path, rows, ["u", "method", "mean_ari", "sd", "n_mc"])
    table = {}
    for r in rows:
        table.setdefault(str(r["u"]), {})[r["method"]] = r["mean_ari"]
    return [path.name], {"mean_ari": table}


def cmd_ingest_embeddings(cfg: IngestConfig, out: Path, threads: int):
    embs = [read_embedding_csv(p) for p in cfg.inputs]
    counts = {e.shape[0] for e in embs}
    if len(counts) > 1:
        raise UsageError(f"embedding files have different row counts: {sorted(counts)}")
    outputs, degenerate = [], []
    for i, (p, e) in enumerate(zip(cfg.inputs, embs)):
        try:
            g = cosine_graph(e, cfg.threshold)
        except ValueError as exc:
            raise UsageError(f"{p}: {exc}") from None
        if not np.any(g.weights):
            log.warning("%s: similarity graph has no nonzero weights", p)
            degenerate.append(i)
        path = out / f"graph_{i}.csv"
        write_graph_csv(g, path)
        outputs.append(path.name)
    return outputs, {"graphs": len(embs), "n": counts.pop(), "degenerate": degenerate}


COMMANDS = {
    "match": cmd_match,
    "multimatch": cmd_multimatch,
    "power": cmd_power,
    "cluster": cmd_cluster,
    "ingest-embeddings": cmd_ingest_embeddings,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config document")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: all cores; 1 is bit-reproducible)")
    common.add_argument("--out-dir", default=".", help="directory for CSV/JSON outputs")
    common.add_argument("--no-timestamp", action="store_true", help="omit the run timestamp")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="omnimatch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("match", parents=[common], help="pairwise / multi-graph matching accuracy")
    p.add_argument("--graphs", nargs="+")
    p.add_argument("--seeds", help="file of seed vertex ids")
    p = sub.add_parser("multimatch", parents=[common], help="pairwise distances and anomaly ranking")
    p.add_argument("--graphs", nargs="+")
    p.add_argument("--seeds", help="file of seed vertex ids")
    p.add_argument("--anchor", type=int)
    sub.add_parser("power", parents=[common], help="shuffled two-sample test power study")
    p = sub.add_parser("cluster", parents=[common], help="hierarchical clustering ARI study")
    p.add_argument("--graphs", nargs="+")
    p.add_argument("--labels", help="label sidecar, one token per graph")
    p = sub.add_parser("ingest-embeddings", parents=[common], help="cosine graphs from embedding CSVs")
    p.add_argument("--inputs", nargs="+")
    p.add_argument("--threshold", type=float)
    return parser


def summary_path(out: Path, command: str) -> Path:
    return out / f"{command.replace('-', '_')}_summary.json"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k, None) for k in ("graphs", "seeds", "labels", "inputs", "threshold", "anchor")}
    overrides["seed"] = args.seed
    try:
        cfg = load_config(args.command, args.config, overrides)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        threads = default_threads() if args.threads is None else max(1, args.threads)
        outputs, results = COMMANDS[args.command](cfg, out, threads)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError) as exc:
        print(f"omnimatch {args.command}: error: {exc}", file=sys.stderr)
        return 1
    effective = dataclasses.asdict(cfg)
    stem = args.command.replace("-", "_")
    cfg_path = out / f"{stem}_config.json"
    cfg_path.write_text(json.dumps(effective, indent=2, sort_keys=True) + "\n")
    summary = {
        "command": args.command,
        "version": __version__,
        "config": effective,
        "outputs": outputs + [cfg_path.name],
        "results": results,
    }
    if not args.no_timestamp:
        summary["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    summary_path(out, args.command).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", ", ".join(summary["outputs"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
