"""Command line entry point: generate, fit, evaluate, interpret, benchmark."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import KMeansConfig, kmeans
from .dataset import ColumnSpec, load_csv, save_csv
from .em import SticcConfig, fit
from .interpret import betweenness, edge_rows, extract_graph
from .metrics import delaunay, evaluate as evaluate_metrics, knn_adjacency
from .model import ClusterModel
from .synthgen import LayoutError, default_layout, generate, layout_to_json, load_layout

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 2, 3

log = logging.getLogger("sticc")


class UsageError(Exception):
    pass


def write_manifest(out_dir: Path, command: str, config: dict, seed, inputs, outputs, started: float):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - started, 3),
        "version": __version__,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


def write_labels(path: Path, ids, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for i, lab in zip(ids, labels):
            w.writerow([int(i), int(lab)])


def read_labels(path) -> tuple[np.ndarray, np.ndarray]:
    ids, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise UsageError(f"{path}: expected header id,label")
        for row_idx, row in enumerate(reader):
            try:
                ids.append(int(row["id"]))
                labels.append(int(row["label"]))
            except (TypeError, ValueError):
                raise UsageError(f"{path}: row {row_idx}: non-integer id or label") from None
    return np.array(ids, dtype=np.int64), np.array(labels, dtype=np.int64)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


# -- generate ----------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.perf_counter()
    try:
        regions = load_layout(args.layout) if args.layout else default_layout()
    except LayoutError as exc:
        raise UsageError(f"{args.layout}: {exc}") from None
    ds, truth = generate(regions, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out / "points.csv")
    write_labels(out / "truth.csv", ds.ids, truth)
    (out / "layout.json").write_text(layout_to_json(regions) + "\n", encoding="utf-8")
    write_manifest(out, "generate", {"layout": args.layout or "default"}, args.seed,
                   [args.layout] if args.layout else [],
                   [out / "points.csv", out / "truth.csv", out / "layout.json"], started)
    print(f"wrote {ds.count} points to {out / 'points.csv'}")
    return EXIT_OK


# -- fit ---------------------------------------------------------------------

def cmd_fit(args) -> int:
    started = time.perf_counter()
    ds = load_csv(args.input, ColumnSpec(attrs=tuple(args.attrs) if args.attrs else None))
    cfg = SticcConfig(K=args.k, R=args.radius, beta=args.beta, lam=args.lam, max_em_iter=args.max_iter,
                      seed=args.seed, init=args.init, standardize=not args.raw)
    res = fit(ds, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_labels(out / "labels.csv", ds.ids, res.labels)
    models = [m.to_json(k) for k, m in enumerate(res.models)]
    (out / "models.json").write_text(json.dumps(models) + "\n", encoding="utf-8")
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "objective", "likelihood", "penalty", "sparsity"])
        for r in res.trace:
            w.writerow([r.iteration, repr(r.objective), repr(r.likelihood), repr(r.penalty), repr(r.sparsity)])
    config = asdict(cfg)
    config["attr_center"] = res.attr_center.tolist()
    config["attr_scale"] = res.attr_scale.tolist()
    config["converged"] = res.converged
    config["iterations"] = res.iterations
    write_manifest(out, "fit", config, args.seed, [args.input],
                   [out / "labels.csv", out / "models.json", out / "trace.csv"], started)
    print(f"fit: {res.iterations} iterations, converged={res.converged}, "
          f"objective={res.objective_trace[-1]:.6f}")
    if not res.converged:
        print("warning: EM did not converge within --max-iter; wrote the last iterate", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# -- evaluate ----------------------------------------------------------------

def _aligned(ids_ref, ids_other, values, what):
    if len(ids_ref) != len(ids_other):
        raise UsageError(f"{what} has {len(ids_other)} rows, expected {len(ids_ref)}")
    pos = {int(i): k for k, i in enumerate(ids_other)}
    try:
        return values[[pos[int(i)] for i in ids_ref]]
    except KeyError as exc:
        raise UsageError(f"{what} is missing id {exc.args[0]}") from None


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    ds = load_csv(args.points)
    pid, pred = read_labels(args.labels)
    tid, truth = read_labels(args.truth)
    pred = _aligned(ds.ids, pid, pred, "labels")
    truth = _aligned(ds.ids, tid, truth, "truth")
    adj = delaunay(ds) if args.adjacency == "delaunay" else knn_adjacency(ds, args.knn_k)
    K = int(max(truth.max(), pred.max())) + 1
    report = evaluate_metrics(truth, pred, adj, K).to_json()
    text = json.dumps(report, indent=1)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
        write_manifest(out.parent, "evaluate", {"adjacency": args.adjacency, "knn_k": args.knn_k}, None,
                       [args.labels, args.truth, args.points], [out], started)
    print(text)
    return EXIT_OK


# -- interpret ---------------------------------------------------------------

def cmd_interpret(args) -> int:
    started = time.perf_counter()
    with open(args.models, encoding="utf-8") as fh:
        models = [ClusterModel.from_json(m) for m in json.load(fh)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    central = {}
    outputs = []
    for k, m in enumerate(models):
        g = extract_graph(m.precision, args.threshold)
        central[str(k)] = {str(a): float(v) for a, v in enumerate(betweenness(g))}
        path = out / f"edges_cluster{k}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_u", "node_v", "weight"])
            for u, v, wt in edge_rows(g):
                w.writerow([u, v, repr(wt)])
        outputs.append(path)
    (out / "centrality.json").write_text(json.dumps(central, indent=1) + "\n", encoding="utf-8")
    outputs.append(out / "centrality.json")
    write_manifest(out, "interpret", {"threshold": args.threshold}, None, [args.models], outputs, started)
    print(json.dumps(central, indent=1))
    return EXIT_OK


# -- benchmark ---------------------------------------------------------------

def run_sticc(seed: int, R: int, beta: float, lam: float, K: int = 7, layout=None) -> dict:
    ds, truth = generate(layout or default_layout(), seed=seed)
    res = fit(ds, SticcConfig(K=K, R=R, beta=beta, lam=lam, seed=seed))
    rep = evaluate_metrics(truth, res.labels, delaunay(ds), K)
    return {"ari": rep.ari, "macro_f1": rep.macro_f1, "join_count": rep.join_count_ratio}


def run_kmeans(seed: int, coord_weight: float, K: int = 7, layout=None) -> dict:
    ds, truth = generate(layout or default_layout(), seed=seed)
    labels = kmeans(ds, KMeansConfig(K=K, seed=seed, coord_weight=coord_weight))
    rep = evaluate_metrics(truth, labels, delaunay(ds), K)
    return {"ari": rep.ari, "macro_f1": rep.macro_f1, "join_count": rep.join_count_ratio}


def _medians(results: list[dict]) -> dict:
    return {k: statistics.median(r[k] for r in results) for k in ("ari", "macro_f1", "join_count")}


def benchmark(seeds, lam: float = 0.1, jobs: int = 1, layout=None) -> list[dict]:
    """Grid: R = 1..4 at beta = 3, then beta in {0, 1, 3, 5} at the best R,
    plus K-Means and spatial K-Means; medians over ``seeds``."""
    seeds = list(seeds)
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    mapper = pool.map if pool else map

    def sticc_row(R, beta):
        res = list(mapper(run_sticc, seeds, [R] * len(seeds), [beta] * len(seeds), [lam] * len(seeds),
                          [7] * len(seeds), [layout] * len(seeds)))
        return {"method": "STICC", "R": R, "beta": beta, **_medians(res)}

    try:
        rows = [sticc_row(R, 3.0) for R in (1, 2, 3, 4)]
        best_R = max(rows, key=lambda r: (r["ari"], -r["R"]))["R"]
        for beta in (0.0, 1.0, 5.0):
            rows.append(sticc_row(best_R, beta))
        for name, cw in (("KMeans", 0.0), ("SpatialKMeans", 1.0)):
            res = list(mapper(run_kmeans, seeds, [cw] * len(seeds), [7] * len(seeds), [layout] * len(seeds)))
            rows.append({"method": name, "R": "", "beta": "", **_medians(res)})
    finally:
        if pool:
            pool.shutdown()
    return rows


def cmd_benchmark(args) -> int:
    started = time.perf_counter()
    seeds = args.seed_list if args.seed_list else list(range(args.seeds))
    layout = load_layout(args.layout) if args.layout else None
    rows = benchmark(seeds, args.lam, args.jobs, layout)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "benchmark.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "R", "beta", "ARI", "macroF1", "joinCount"])
        for r in rows:
            w.writerow([r["method"], r["R"], r["beta"], f"{r['ari']:.6f}", f"{r['macro_f1']:.6f}",
                        f"{r['join_count']:.6f}"])
    write_manifest(out, "benchmark", {"lam": args.lam, "layout": args.layout or "default"}, seeds,
                   [args.layout] if args.layout else [], [out / "benchmark.csv"], started)
    print((out / "benchmark.csv").read_text(encoding="utf-8"), end="")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sticc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write the synthetic benchmark dataset")
    g.add_argument("--layout", help="layout JSON (default: built-in ten-region layout)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="data")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="cluster a points CSV")
    f.add_argument("input")
    f.add_argument("--k", type=_positive_int, required=True, help="number of clusters K")
    f.add_argument("--radius", type=_positive_int, default=3, help="subregion size R")
    f.add_argument("--beta", type=_nonneg_float, default=3.0, help="spatial consistency penalty")
    f.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.1, help="sparsity weight")
    f.add_argument("--max-iter", type=_positive_int, default=100)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--init", choices=("kmeans", "random"), default="kmeans")
    f.add_argument("--attrs", nargs="+", help="attribute columns (default: all but id,x,y)")
    f.add_argument("--raw", action="store_true", help="do not standardize attributes")
    f.add_argument("--out", default="fit_out")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evaluate", help="ARI, macro-F1 and join count ratio")
    e.add_argument("--labels", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--points", required=True)
    e.add_argument("--adjacency", choices=("delaunay", "knn"), default="delaunay")
    e.add_argument("--knn-k", type=_positive_int, default=4)
    e.add_argument("--out", help="write metrics JSON here")
    e.set_defaults(func=cmd_evaluate)

    i = sub.add_parser("interpret", help="MRF edges and attribute betweenness per cluster")
    i.add_argument("--models", required=True)
    i.add_argument("--threshold", type=_nonneg_float, default=1e-5)
    i.add_argument("--out", default="interpret_out")
    i.set_defaults(func=cmd_interpret)

    b = sub.add_parser("benchmark", help="STICC grid and K-Means baselines on the synthetic data")
    b.add_argument("--seeds", type=_positive_int, default=5, help="use seeds 0..n-1")
    b.add_argument("--seed-list", type=int, nargs="+")
    b.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.1)
    b.add_argument("--layout")
    b.add_argument("--jobs", type=_positive_int, default=1)
    b.add_argument("--out", default="benchmark_out")
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"sticc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
