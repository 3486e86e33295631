"""Command-line entry point.

Subcommands: ingest, split, featurize, predict, ablate, synth, check.
Exit codes: 0 success, 1 input error, 2 numeric failure, 3 bridge failure.

Numeric libraries are imported inside the command handlers so that the
--threads setting lands in the environment before they load.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for numeric failures
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ratios(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    return tuple(float(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphtab",
                     description="Graph-to-table featurization for node "
                                 "property prediction.")
    parser.add_argument("--threads", type=int, default=1,
                        help="thread budget for numeric libraries (default 1, "
                             "which keeps outputs bitwise reproducible)")
    parser.add_argument("--config", help="JSON file mirroring the flags of the "
                                         "chosen subcommand; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="validate raw files and "
                       "persist the canonical dataset layout")
    p.add_argument("--edges", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="generate a train/val/test split")
    p.add_argument("--data", required=True)
    p.add_argument("--ratios", type=_ratios, default=(0.1, 0.1, 0.8))
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("featurize", help="compute feature blocks and write "
                       "the augmented table")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-nfa", action="store_true")
    p.add_argument("--no-sf", action="store_true")
    p.add_argument("--no-pearl", action="store_true")
    p.add_argument("--pca-threshold", type=int, default=128)
    p.add_argument("--pca-dims", type=int, default=64)
    p.add_argument("--pearl-m", type=int, default=8)
    p.add_argument("--eig-k", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pearl-weight-seed", type=int, default=None,
                   help="override the shipped shared weight seed")
    p.add_argument("--pearl-weights-in", help="load serialized PEARL weights")
    p.add_argument("--pearl-weights-out", help="save the PEARL weights used")
    p.add_argument("--pearl-train", action="store_true",
                   help="adapt PEARL weights on the train labels first")
    p.add_argument("--pearl-lr", type=float, default=0.01)
    p.add_argument("--pearl-steps", type=int, default=100)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("predict", help="run a predictor on an augmented table "
                       "and report the task metric")
    _predict_args(p)
    p.add_argument("--table", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="run the five-variant feature ablation")
    _predict_args(p)
    p.add_argument("--pca-threshold", type=int, default=128)
    p.add_argument("--pca-dims", type=int, default=64)
    p.add_argument("--pearl-m", type=int, default=8)
    p.add_argument("--eig-k", type=int, default=8)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="generate a synthetic two-block SBM dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--p-in", type=float, default=0.02)
    p.add_argument("--p-out", type=float, default=0.002)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("check", help="run the equivariance property suite")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    return parser


def _predict_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--predictor", choices=("knn", "linear", "bridge"),
                   default="knn")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--label-shuffle", type=int, default=0,
                   help="average the classifier over this many class "
                        "relabelings (0 = off)")
    p.add_argument("--include-val", action="store_true",
                   help="append validation rows to the train context")
    p.add_argument("--n-seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bridge-dir", help="bridge watch directory")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--json", dest="json_out", help="also write the report as JSON")


# ---------------------------------------------------------------------------
# command handlers


def cmd_ingest(args) -> int:
    from .data import dataset_stats, load_dataset, save_dataset

    dataset = load_dataset(args.edges, args.features, args.meta)
    save_dataset(dataset, args.out)
    stats = dataset_stats(dataset)
    print(f"n_nodes: {stats.n_nodes}")
    print(f"n_edges: {stats.n_edges}")
    print(f"n_features: {stats.n_features}")
    print(f"mean_degree: {stats.mean_degree:.10g}")
    if stats.edge_homophily is not None:
        print(f"edge_homophily: {stats.edge_homophily:.10g}")
    print(f"written: {args.out}")
    return 0


def cmd_split(args) -> int:
    from .data import load_dataset_dir, make_split, save_split

    dataset = load_dataset_dir(args.data)
    split = make_split(dataset, args.ratios, args.stratified, args.seed)
    save_split(split, args.out)
    print(f"train: {split.train.size}  val: {split.val.size}  "
          f"test: {split.test.size}  seed: {split.seed}")
    return 0


def _compute_blocks(dataset, split, args):
    from .nfa import compute_nfa
    from .pearl import (DEFAULT_WEIGHT_SEED, PearlConfig, init_weights,
                        load_weights, pearl_encode, save_weights, train_pearl)
    from .structural import StructuralConfig, structural_features

    nfa = None if args.no_nfa else compute_nfa(dataset.graph, dataset.features)
    sf = None
    if not args.no_sf:
        sf = structural_features(
            dataset.graph, StructuralConfig(n_eigenvectors=args.eig_k))
    enc = None
    seeds = {"seed": args.seed, "draw_seed": args.seed}
    if not args.no_pearl:
        weight_seed = (args.pearl_weight_seed if args.pearl_weight_seed is not None
                       else DEFAULT_WEIGHT_SEED)
        cfg = PearlConfig(m_draws=args.pearl_m, weight_seed=weight_seed,
                          draw_seed=args.seed)
        weights = (load_weights(args.pearl_weights_in)
                   if args.pearl_weights_in else init_weights(cfg))
        if args.pearl_train:
            task = dataset.task
            weights, _ = train_pearl(
                dataset.graph, cfg, task.targets, split.train, task.task_kind,
                task.n_classes, weights, lr=args.pearl_lr, steps=args.pearl_steps)
        if args.pearl_weights_out:
            save_weights(weights, args.pearl_weights_out)
        enc = pearl_encode(dataset.graph, cfg, weights)
        seeds["weight_seed"] = weight_seed
    return nfa, sf, enc, seeds


def cmd_featurize(args) -> int:
    from .assemble import AssembleOptions, assemble_features, save_table
    from .data import load_dataset_dir, load_split

    dataset = load_dataset_dir(args.data)
    split = load_split(args.split)
    split.check_range(dataset.graph.n_nodes)
    nfa, sf, enc, seeds = _compute_blocks(dataset, split, args)
    opts = AssembleOptions(args.pca_threshold, args.pca_dims)
    table = assemble_features(dataset, nfa, sf, enc, split, opts)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_table(table, out / "augmented.csv", out / "augmented.meta.json",
               opts, seeds)
    widths = {}
    for b in table.blocks:
        widths[b] = widths.get(b, 0) + 1
    print("blocks: " + "  ".join(f"{b}={w}" for b, w in widths.items()))
    print(f"written: {out / 'augmented.csv'} ({table.matrix.shape[0]} rows x "
          f"{table.width} columns)")
    return 0


def _make_predictor(args):
    from .predictors import bridge_predict, knn_predict, linear_train_predict

    if args.predictor == "knn":
        return lambda req: knn_predict(req, args.k)
    if args.predictor == "linear":
        return lambda req: linear_train_predict(req, args.l2, args.lr, args.epochs)
    from .errors import BridgeError

    if not args.bridge_dir:
        raise BridgeError("--bridge-dir is required for the bridge predictor")
    return lambda req: bridge_predict(req, args.bridge_dir, args.timeout)


def _evaluate_table(matrix, dataset, split, args):
    """Metric per repetition seed; deterministic predictors have zero std."""
    import numpy as np

    from .metrics import evaluate
    from .predictors import PredictRequest, label_shuffle_wrap

    task = dataset.task
    train_idx = split.train
    if args.include_val:
        train_idx = np.sort(np.concatenate([split.train, split.val]))
    req = PredictRequest(matrix[train_idx], task.targets[train_idx],
                         matrix[split.test], task.task_kind, task.n_classes)
    inner = _make_predictor(args)
    values = []
    for rep in range(args.n_seeds):
        seed = args.seed + rep
        if args.label_shuffle > 0 and task.is_classification:
            pred = label_shuffle_wrap(inner, req, args.label_shuffle, seed)
        else:
            pred = inner(req)
        out = pred.probs if task.is_classification else pred.values
        values.append(evaluate(task.task_kind, out, task.targets[split.test]).value)
    return float(np.mean(values)), float(np.std(values)), len(values)


def cmd_predict(args) -> int:
    from .assemble import load_table
    from .data import load_dataset_dir, load_split
    from .errors import InputDataError
    from .metrics import METRIC_BY_TASK

    dataset = load_dataset_dir(args.data)
    split = load_split(args.split)
    split.check_range(dataset.graph.n_nodes)
    table = load_table(args.table)
    if table.matrix.shape[0] != dataset.graph.n_nodes:
        raise InputDataError("augmented table row count != n_nodes")

    mean, std, reps = _evaluate_table(table.matrix, dataset, split, args)
    metric = METRIC_BY_TASK[dataset.task.task_kind]
    print(f"predictor: {args.predictor}")
    print(f"metric: {metric}")
    print(f"seeds: {reps}")
    print(f"mean: {mean:.6f}")
    print(f"std: {std:.6f}")
    if args.json_out:
        doc = {"predictor": args.predictor, "metric": metric,
               "seeds": reps, "mean": mean, "std": std}
        Path(args.json_out).write_text(json.dumps(doc, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


ABLATION_VARIANTS = (
    ("full", {"nfa": True, "sf": True, "pearl": True}),
    ("w/o NFA", {"nfa": False, "sf": True, "pearl": True}),
    ("w/o SF & PEARL", {"nfa": True, "sf": False, "pearl": False}),
    ("w/o SF", {"nfa": True, "sf": False, "pearl": True}),
    ("w/o PEARL", {"nfa": True, "sf": True, "pearl": False}),
)


def cmd_ablate(args) -> int:
    from .assemble import AssembleOptions, assemble_features
    from .data import load_dataset_dir, load_split
    from .metrics import METRIC_BY_TASK
    from .nfa import compute_nfa
    from .pearl import PearlConfig, pearl_encode
    from .structural import StructuralConfig, structural_features

    dataset = load_dataset_dir(args.data)
    split = load_split(args.split)
    split.check_range(dataset.graph.n_nodes)

    nfa = compute_nfa(dataset.graph, dataset.features)
    sf = structural_features(dataset.graph,
                             StructuralConfig(n_eigenvectors=args.eig_k))
    enc = pearl_encode(dataset.graph,
                       PearlConfig(m_draws=args.pearl_m, draw_seed=args.seed))
    opts = AssembleOptions(args.pca_threshold, args.pca_dims)

    metric = METRIC_BY_TASK[dataset.task.task_kind]
    rows = []
    for label, use in ABLATION_VARIANTS:
        table = assemble_features(dataset,
                                  nfa if use["nfa"] else None,
                                  sf if use["sf"] else None,
                                  enc if use["pearl"] else None,
                                  split, opts)
        mean, std, _ = _evaluate_table(table.matrix, dataset, split, args)
        rows.append((label, mean, std))

    label_w = max(len(label) for label, _, _ in rows)
    print(f"{'variant':<{label_w}}  {metric + ' mean':>20}  {'std':>10}")
    for label, mean, std in rows:
        print(f"{label:<{label_w}}  {mean:>20.6f}  {std:>10.6f}")
    if args.json_out:
        doc = {"metric": metric, "variants": [
            {"variant": label, "mean": mean, "std": std}
            for label, mean, std in rows]}
        Path(args.json_out).write_text(json.dumps(doc, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


def cmd_synth(args) -> int:
    from .data import dataset_stats, save_dataset
    from .synth import make_sbm_dataset

    dataset = make_sbm_dataset(args.n, args.features, args.p_in, args.p_out,
                               args.seed)
    save_dataset(dataset, args.out)
    stats = dataset_stats(dataset)
    print(f"n_nodes: {stats.n_nodes}  n_edges: {stats.n_edges}  "
          f"mean_degree: {stats.mean_degree:.4g}  "
          f"edge_homophily: {stats.edge_homophily:.4g}")
    print(f"written: {args.out}")
    return 0


def cmd_check(args) -> int:
    from .data import load_dataset_dir
    from .equivariance import (check_feature_permutation, check_label_permutation,
                               check_node_permutation)

    dataset = load_dataset_dir(args.data)
    reports = [check_node_permutation(dataset, args.seed),
               check_feature_permutation(dataset, args.seed)]
    task = dataset.task
    if task.is_classification and task.n_classes <= 4:
        reports.append(check_label_permutation(dataset, args.seed))
    else:
        print("note: label permutation check skipped "
              "(needs a classification task with at most 4 classes)")
    ok = True
    for report in reports:
        print(report.render())
        print()
        ok = ok and report.passed
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def _flag_given(argv, dest: str) -> bool:
    flag = "--" + dest.replace("_", "-")
    return any(a == flag or a.startswith(flag + "=") for a in argv)


def _merge_config(args, argv) -> None:
    from .errors import InputDataError

    if not getattr(args, "config", None):
        return
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputDataError(f"cannot read config {args.config}: {exc}")
    if not isinstance(doc, dict):
        raise InputDataError("config must be a JSON object of flag values")
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise InputDataError(f"unknown config key {key!r} for "
                                 f"subcommand {args.command!r}")
        if not _flag_given(argv, dest):
            setattr(args, dest, value)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    for var in _THREAD_VARS:
        os.environ[var] = str(args.threads)

    from .errors import (BridgeError, ConvergenceError, InputDataError,
                         NumericError)

    try:
        _merge_config(args, argv)
        return args.func(args)
    except (InputDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, NumericError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except BridgeError as exc:
        print(f"bridge failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
