"""Command-line entry point: fit trees, run benchmark comparisons, export MIO.

Exit codes: 0 success, 1 data/compute error, 2 usage error. All randomness
flows from --seed; repeated invocations with identical flags and inputs
produce byte-identical tree and report artifacts (wall-clock timing is
printed to stdout only, never written into artifacts).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .baselines import kmeans, score_truth, two_step_tree
from .dataset import SHAPES, LabeledDataset, generate_synthetic, load_csv
from .errors import ICOTError
from .metrics import CRITERIA, Assignment, evaluate_assignment
from .oracle import build_mio_model, export_lp
from .search import SearchConfig, fit
from .tree import assign_all, decision_paths, serialize

REPORT_SCHEMA = "icot-report/1"
METHODS = ("icot", "kmeans", "two_step", "truth")


def _add_data_flags(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--input", metavar="CSV", help="input table (CSV or whitespace-delimited)")
    group.add_argument("--generate", choices=SHAPES, help="generate a synthetic dataset")
    parser.add_argument("--n", type=int, default=400, help="rows for --generate (default 400)")
    parser.add_argument("--label-col", help="ground-truth label column name")
    parser.add_argument("--seed", type=int, default=42)


def _add_fit_flags(parser):
    parser.add_argument("--criterion", choices=CRITERIA, default="silhouette")
    parser.add_argument("--max-depth", type=int, default=4)
    parser.add_argument("--min-bucket", type=int, default=2)
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--out-tree", metavar="PATH")
    parser.add_argument("--out-report", metavar="PATH")


def _load(args):
    """Returns (Dataset, truth labels or None)."""
    if args.generate:
        labeled = generate_synthetic(args.generate, args.n, args.seed)
        return labeled.data, labeled.truth
    loaded = load_csv(args.input, label_col=args.label_col)
    if isinstance(loaded, LabeledDataset):
        return loaded.data, loaded.truth
    return loaded, None


def _config(args):
    return SearchConfig(
        criterion=args.criterion,
        max_depth=args.max_depth,
        min_bucket=args.min_bucket,
        restarts=args.restarts,
        seed=args.seed,
    )


def _config_echo(args):
    return {
        "criterion": args.criterion,
        "max_depth": args.max_depth,
        "min_bucket": args.min_bucket,
        "restarts": args.restarts,
        "seed": args.seed,
        "input": args.input,
        "generate": args.generate,
        "n": args.n if args.generate else None,
        "label_col": args.label_col,
    }


def _both_scores(distances, labels):
    assignment = Assignment(labels)
    return {
        c: evaluate_assignment(c, distances, assignment).value for c in CRITERIA
    }


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _dump_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def cmd_fit(args):
    dataset, _ = _load(args)
    started = time.perf_counter()
    tree, score, trace = fit(dataset, _config(args))
    elapsed = time.perf_counter() - started
    labels = assign_all(tree, dataset).cluster_of
    print(f"objective ({args.criterion}): {score.value:.6f}")
    print(f"leaves: {tree.n_leaves}  (restart {trace.winner} won)")
    for line in decision_paths(tree):
        print(line)
    print(f"wall clock: {elapsed:.2f}s")
    doc = serialize(tree)
    if args.out_tree:
        _write(args.out_tree, doc)
    if args.out_report:
        report = {
            "schema": REPORT_SCHEMA,
            "command": "fit",
            "config": _config_echo(args),
            "objective": score.value,
            "scores": _both_scores(dataset.distances, labels),
            "cluster_sizes": [leaf.size for leaf in tree.leaves()],
            "tree": json.loads(doc),
        }
        _write(args.out_report, _dump_report(report))
    return 0


def cmd_benchmark(args):
    dataset, truth = _load(args)
    methods = args.methods or list(METHODS)
    if "truth" in methods and truth is None and args.methods is None:
        methods = [m for m in methods if m != "truth"]

    results = {}
    trees = {}
    need_kmeans = bool({"kmeans", "two_step"} & set(methods))
    if "icot" in methods:
        per_criterion = {}
        tree = None
        for criterion in CRITERIA:
            cfg = SearchConfig(
                criterion=criterion,
                max_depth=args.max_depth,
                min_bucket=args.min_bucket,
                restarts=args.restarts,
                seed=args.seed,
            )
            tree_c, score_c, _ = fit(dataset, cfg)
            labels = assign_all(tree_c, dataset).cluster_of
            per_criterion[criterion] = evaluate_assignment(
                criterion, dataset.distances, Assignment(labels)
            ).value
            if criterion == args.criterion:
                tree = tree_c
        results["icot"] = per_criterion
        trees["icot"] = tree

    km = None
    if need_kmeans:
        if truth is not None:
            k = len(np.unique(truth))
        elif "icot" in trees and trees["icot"] is not None:
            k = trees["icot"].n_leaves
        else:
            k = 2
        km = kmeans(dataset, k=k, seed=args.seed)
    if "kmeans" in methods:
        results["kmeans"] = _both_scores(dataset.distances, km.labels.cluster_of)
    if "two_step" in methods:
        cfg = _config(args)
        tree2, _ = two_step_tree(dataset, km.labels, cfg)
        labels2 = assign_all(tree2, dataset).cluster_of
        results["two_step"] = _both_scores(dataset.distances, labels2)
        trees["two_step"] = tree2
    if "truth" in methods:
        if truth is None:
            print("error: truth scoring requested but no labels available", file=sys.stderr)
            return 1
        results["truth"] = _both_scores(dataset.distances, truth)

    # human-readable table; ties for best all get a star
    order = [m for m in METHODS if m in results]
    print(f"{'method':<10}" + "".join(f"{c:>14}" for c in CRITERIA))
    best = {
        c: max(results[m][c] for m in order) for c in CRITERIA
    }
    for m in order:
        cells = []
        for c in CRITERIA:
            star = "*" if results[m][c] == best[c] else " "
            cells.append(f"{results[m][c]:>13.4f}{star}")
        print(f"{m:<10}" + "".join(cells))

    if args.out_tree and "icot" in trees:
        _write(args.out_tree, serialize(trees["icot"]))
    if args.out_report:
        report = {
            "schema": REPORT_SCHEMA,
            "command": "benchmark",
            "config": _config_echo(args),
            "methods": results,
            "best": best,
        }
        if "icot" in trees:
            report["tree"] = json.loads(serialize(trees["icot"]))
            report["cluster_sizes"] = [
                leaf.size for leaf in trees["icot"].leaves()
            ]
        _write(args.out_report, _dump_report(report))
    return 0


MIO_EXPORT_MAX_ROWS = 1000


def _instance_rows(args):
    if args.generate:
        return args.n
    with open(args.input, "r", encoding="utf-8") as fh:
        return sum(1 for line in fh if line.strip()) - 1  # minus header


def cmd_export_mio(args):
    rows = _instance_rows(args)
    if rows > MIO_EXPORT_MAX_ROWS:
        print(
            f"error: instance has {rows} rows; the MIO export guard is "
            f"n <= {MIO_EXPORT_MAX_ROWS}",
            file=sys.stderr,
        )
        return 1
    dataset, _ = _load(args)
    model = build_mio_model(
        dataset, depth=args.depth, min_bucket=args.min_bucket, big_M=args.big_m
    )
    export_lp(model, args.out)
    print(
        f"wrote {args.out}: {len(model.variables)} variables, "
        f"{len(model.linear_constraints)} linear rows, "
        f"{len(model.nonlinear)} nonlinear side rows"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="icot",
        description="Interpretable tree clustering: fit, benchmark, export the MIO.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a clustering tree")
    _add_data_flags(p_fit)
    _add_fit_flags(p_fit)
    p_fit.set_defaults(handler=cmd_fit)

    p_bench = sub.add_parser("benchmark", help="compare methods on one dataset")
    _add_data_flags(p_bench)
    _add_fit_flags(p_bench)
    p_bench.add_argument(
        "--methods",
        nargs="+",
        choices=METHODS,
        default=None,
        help="subset of methods (default: all applicable)",
    )
    p_bench.set_defaults(handler=cmd_benchmark)

    p_mio = sub.add_parser("export-mio", help="export the MIO as an LP file")
    _add_data_flags(p_mio)
    p_mio.add_argument("--depth", type=int, required=True)
    p_mio.add_argument("--min-bucket", type=int, default=2)
    p_mio.add_argument("--big-m", type=float, default=None)
    p_mio.add_argument("--out", required=True, metavar="PATH")
    p_mio.set_defaults(handler=cmd_export_mio)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ICOTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
