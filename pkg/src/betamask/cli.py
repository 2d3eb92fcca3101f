"""Command-line pipeline: generate, train, explain, evaluate, compare.

Stages hand off through files only, so every intermediate artifact can be
inspected or swapped. Each run writes a manifest recording flags, input
checksums, outputs, and wall-clock timings; rerunning with the same flags
and seed reproduces every artifact byte for byte (timings live only in
the manifest).

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import datagen, gnn, io, metrics, presets
from ._kernels import backend_name
from .explainers import (BaselineConfig, ExplainerConfig, fit, fit_baseline,
                         random_mask_baseline)
from .explainers.beta_mask import ecdf, rank_by_probability
from .graphs import TASK_GRAPH, TASK_NODE, EdgeMask

METHODS = ("beta", "gnnx", "random")


def _default_seed() -> int:
    return int(os.environ.get("BETAMASK_SEED", "0"))


def _timed(timings: dict, stage: str):
    class _Timer:
        def __enter__(self):
            self.start = time.perf_counter()

        def __exit__(self, *exc):
            timings[stage] = round(time.perf_counter() - self.start, 6)
            return False

    return _Timer()


def _write_run_manifest(path, subcommand: str, flags: dict, seed, inputs: dict,
                        outputs, timings: dict) -> None:
    io.write_json(path, {
        "kind": "run",
        "subcommand": subcommand,
        "flags": flags,
        "seed": seed,
        "kernel_backend": backend_name(),
        "input_checksums": inputs,
        "outputs": sorted(str(p) for p in outputs),
        "timings_s": timings,
    })


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args, parser) -> int:
    overrides = {}
    if args.config:
        overrides.update(io.read_json(args.config))
    if args.preset.startswith("sg-"):
        if args.motifs is not None:
            overrides["num_motifs"] = args.motifs
    else:
        if args.genes is not None:
            overrides["num_genes"] = args.genes
        if args.cells is not None:
            overrides["cells_per_class"] = args.cells
    config = presets.dataset_config(args.preset, seed=args.seed, **overrides)

    timings = {}
    with _timed(timings, "generate"):
        if args.preset.startswith("sg-"):
            dataset = datagen.generate_motif_dataset(config, preset=args.preset)
        else:
            dataset = datagen.generate_expression_dataset(config, preset=args.preset)
    with _timed(timings, "write"):
        manifest = datagen.save_dataset(dataset, args.out)
    out = Path(args.out)
    _write_run_manifest(out / "run_manifest.json", "generate",
                        _flag_dict(args), args.seed, {},
                        [out / name for name in manifest["files"]], timings)
    print(f"wrote {args.preset} dataset to {args.out} "
          f"({dataset.graph.node_count} nodes, {dataset.graph.num_edges} edges)")
    return 0


# ---------------------------------------------------------------------------
# train


def _layer_dims(dataset, hidden):
    feature_dim = 1 if dataset.task_kind == TASK_GRAPH else dataset.features.shape[1]
    return (feature_dim, *hidden, dataset.labels.num_classes)


def cmd_train(args, parser) -> int:
    data_dir = Path(args.data)
    if not (data_dir / "manifest.json").is_file():
        parser.error(f"no dataset manifest under {args.data}")
    dataset = datagen.load_dataset(data_dir)
    defaults = presets.TRAIN_DEFAULTS.get(dataset.preset, {})
    lr = args.lr if args.lr is not None else defaults.get("learning_rate", 0.01)
    wd = args.weight_decay if args.weight_decay is not None else defaults.get("weight_decay", 0.0)
    epochs = args.epochs if args.epochs is not None else defaults.get("epochs", 200)
    seed = args.seed if args.seed is not None else defaults.get("seed", _default_seed())

    hidden = tuple(int(h) for h in args.hidden.split(",") if h)
    gnn_config = gnn.GnnConfig(_layer_dims(dataset, hidden), dataset.task_kind)
    train_config = gnn.TrainConfig(learning_rate=lr, weight_decay=wd, epochs=epochs, seed=seed)

    timings = {}
    with _timed(timings, "train"):
        result = gnn.train(train_config, gnn_config, dataset.graph,
                           dataset.model_features(), dataset.labels.labels)
    with _timed(timings, "write"):
        gnn.save_model(result.model, args.out)
    _write_run_manifest(Path(str(args.out) + ".run.json"), "train",
                        _flag_dict(args), seed,
                        {"dataset": io.sha256_file(data_dir / "manifest.json")},
                        [args.out], timings)
    print(f"train accuracy {result.train_accuracy:.4f}  "
          f"test accuracy {result.test_accuracy:.4f}  ({epochs} epochs)")
    return 0


# ---------------------------------------------------------------------------
# explain


def _write_mask_csv(path, graph, prob, rank, alpha=None, beta=None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_index", "src", "dst", "alpha", "beta", "prob", "rank"])
        for i, (s, t) in enumerate(graph.edges):
            a = io.format_float(alpha[i]) if alpha is not None else ""
            b = io.format_float(beta[i]) if beta is not None else ""
            writer.writerow([i, s, t, a, b, io.format_float(prob[i]), int(rank[i])])


def _write_trace_csv(path, column: str, values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", column])
        for i, v in enumerate(values):
            writer.writerow([i, io.format_float(v)])


def _write_ecdf_csv(path, prob, predicted, important) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "cum_frac", "group"])
        for group, sel in (("true_positive", predicted & important),
                           ("false_positive", predicted & ~important)):
            if sel.any():
                for value, frac in ecdf(prob[sel]):
                    writer.writerow([io.format_float(value), io.format_float(frac), group])


def _eval_subgraph_indices(dataset, mask, threshold, khop_l):
    """Edges drawn in the DOT file: best k-hop neighborhood for node tasks,
    the whole graph otherwise."""
    if dataset.task_kind == TASK_NODE:
        _, best = metrics.best_khop_subgraph_eval(mask, dataset.truth, dataset.graph,
                                                  l=khop_l, threshold=threshold)
        from .graphs import khop_subgraph
        return np.asarray(khop_subgraph(dataset.graph, best.node, khop_l).edge_indices,
                          dtype=np.intp)
    return np.arange(dataset.graph.num_edges, dtype=np.intp)


def _write_dot(path, dataset, mask, threshold, khop_l) -> None:
    """Evaluation subgraph with true positives blue, false positives red,
    and false negatives pink; widths scale with predicted probability."""
    idx = _eval_subgraph_indices(dataset, mask, threshold, khop_l)
    prob = mask.weights
    important = dataset.truth.important
    pairs = {}
    for i in idx:
        s, t = dataset.graph.edges[i]
        key = (min(s, t), max(s, t))
        best = pairs.get(key)
        if best is None or prob[i] > best[0]:
            pairs[key] = (prob[i], bool(important[i]))
    keys = sorted(pairs)
    probs = np.array([pairs[k][0] for k in keys])
    predicted = probs >= threshold
    lines = ["graph explanation {", "  node [shape=circle, fontsize=10];"]
    scaled = None
    if predicted.any():
        scaled = metrics.scale_probs_for_display(probs, predicted)
    for pos, key in enumerate(keys):
        p, true_edge = pairs[key]
        if predicted[pos] and true_edge:
            color = "blue"
        elif predicted[pos]:
            color = "red"
        elif true_edge:
            color = "pink"
        else:
            continue
        width = 1.0 + 4.0 * scaled[pos] if predicted[pos] else 1.0
        lines.append(f'  "{key[0]}" -- "{key[1]}" [color={color}, penwidth={width:.4f}];')
    lines.append("}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _one_hot_target(dataset):
    labels = dataset.labels.labels
    out = np.zeros((len(labels), dataset.labels.num_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _explain_one_seed(payload: dict):
    """Worker for one (method, seed) run; reloads artifacts from disk so it
    can execute in a separate process."""
    args = argparse.Namespace(**payload)
    dataset = datagen.load_dataset(args.data)
    model = gnn.load_model(args.model)
    out_dir = Path(args.out)
    feats = dataset.model_features()
    target = _one_hot_target(dataset) if args.target == "true" else None

    started = time.perf_counter()
    trace = None
    trace_column = None
    alpha = beta = None
    if args.method == "beta":
        config = ExplainerConfig(
            learning_rate=args.lr, epochs=args.epochs,
            prior_alpha=args.alpha, prior_beta=args.beta,
            samples_per_step=args.samples, threshold=args.threshold,
            seed=args.seed, graph_batch_size=args.batch)
        report = fit(config, model, dataset.graph, feats, target_override=target)
        prob, rank = report.prob, report.rank
        alpha, beta = report.alpha, report.beta
        trace, trace_column = report.elbo_trace, "elbo"
        mask = report.mask
    elif args.method == "gnnx":
        config = BaselineConfig(
            learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
            size_coefficient=args.size_coefficient,
            entropy_coefficient=args.entropy_coefficient,
            graph_batch_size=args.batch)
        result = fit_baseline(config, model, dataset.graph, feats, target_override=target)
        mask = result.mask
        prob = mask.weights
        rank = rank_by_probability(prob)
        trace, trace_column = result.loss_trace, "loss"
    else:
        mask = random_mask_baseline(dataset.graph, args.seed)
        prob = mask.weights
        rank = rank_by_probability(prob)
    elapsed = time.perf_counter() - started

    stem = f"{args.method}_seed{args.seed}"
    outputs = []
    mask_path = out_dir / f"mask_{stem}.csv"
    _write_mask_csv(mask_path, dataset.graph, prob, rank, alpha, beta)
    outputs.append(mask_path)
    if trace is not None:
        trace_path = out_dir / f"trace_{stem}.csv"
        _write_trace_csv(trace_path, trace_column, trace)
        outputs.append(trace_path)
    ecdf_path = out_dir / f"ecdf_{stem}.csv"
    _write_ecdf_csv(ecdf_path, prob, prob >= args.threshold, dataset.truth.important)
    outputs.append(ecdf_path)
    dot_path = out_dir / f"explanation_{stem}.dot"
    _write_dot(dot_path, dataset, mask, args.threshold, args.khop)
    outputs.append(dot_path)
    io.write_json(str(mask_path) + ".meta.json", {
        "explainer": args.method,
        "seed": args.seed,
        "preset": dataset.preset,
        "epochs": None if args.method == "random" else args.epochs,
        "elapsed_s": round(elapsed, 6),
        "data_manifest_sha256": io.sha256_file(Path(args.data) / "manifest.json"),
        "model_sha256": io.sha256_file(args.model),
    })
    outputs.append(Path(str(mask_path) + ".meta.json"))
    return [str(p) for p in outputs]


def cmd_explain(args, parser) -> int:
    data_dir = Path(args.data)
    if not (data_dir / "manifest.json").is_file():
        parser.error(f"no dataset manifest under {args.data}")
    if not Path(args.model).is_file():
        parser.error(f"model file {args.model} not found")
    dataset = datagen.load_dataset(data_dir)
    beta_defaults = presets.BETA_DEFAULTS.get(dataset.preset, {})
    gnnx_defaults = presets.GNNX_DEFAULTS.get(dataset.preset, {})

    if args.method == "beta":
        defaults = beta_defaults
    elif args.method == "gnnx":
        defaults = gnnx_defaults
    else:
        defaults = {}
    lr = args.lr if args.lr is not None else defaults.get("learning_rate", 0.05)
    epochs = args.epochs if args.epochs is not None else defaults.get("epochs", 25)
    alpha = args.alpha if args.alpha is not None else defaults.get("prior_alpha", 0.8)
    beta = args.beta if args.beta is not None else defaults.get("prior_beta", 0.6)
    batch = args.batch if args.batch is not None else defaults.get("graph_batch_size")

    seeds = [int(s) for s in str(args.seed).split(",")]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    payloads = []
    for seed in seeds:
        payloads.append(dict(
            data=str(args.data), model=str(args.model), out=str(out_dir),
            method=args.method, seed=seed, lr=lr, epochs=epochs,
            alpha=alpha, beta=beta, batch=batch, samples=args.samples,
            threshold=args.threshold, khop=args.khop, target=args.target,
            size_coefficient=args.size_coefficient,
            entropy_coefficient=args.entropy_coefficient))

    timings = {}
    outputs = []
    with _timed(timings, "explain"):
        if args.jobs > 1 and len(payloads) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for produced in pool.map(_explain_one_seed, payloads):
                    outputs.extend(produced)
        else:
            for payload in payloads:
                outputs.extend(_explain_one_seed(payload))
    _write_run_manifest(out_dir / f"run_manifest_{args.method}.json", "explain",
                        _flag_dict(args), args.seed,
                        {"dataset": io.sha256_file(data_dir / "manifest.json"),
                         "model": io.sha256_file(args.model)},
                        outputs, timings)
    print(f"explained with {args.method} over seeds {seeds} -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# evaluate


def read_mask_csv(path):
    """Returns (edge pairs, prob array, alpha/beta arrays or None)."""
    pairs, prob, alphas, betas = [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pairs.append((int(row["src"]), int(row["dst"])))
            prob.append(float(row["prob"]))
            alphas.append(float(row["alpha"]) if row["alpha"] else np.nan)
            betas.append(float(row["beta"]) if row["beta"] else np.nan)
    alpha = np.asarray(alphas)
    beta = np.asarray(betas)
    if np.isnan(alpha).all():
        alpha = beta = None
    return pairs, np.asarray(prob), alpha, beta


def cmd_evaluate(args, parser) -> int:
    data_dir = Path(args.data)
    if not (data_dir / "manifest.json").is_file():
        parser.error(f"no dataset manifest under {args.data}")
    if not Path(args.mask).is_file():
        parser.error(f"mask file {args.mask} not found")
    dataset = datagen.load_dataset(data_dir)
    model = gnn.load_model(args.model)

    meta_path = Path(str(args.mask) + ".meta.json")
    explainer, seed = "unknown", -1
    if meta_path.is_file():
        meta = io.read_json(meta_path)
        explainer, seed = meta["explainer"], meta["seed"]
        current = io.sha256_file(data_dir / "manifest.json")
        if meta["data_manifest_sha256"] != current:
            raise RuntimeError("mask was produced for a different dataset "
                               f"(manifest checksum mismatch for {args.mask})")

    pairs, prob, _, _ = read_mask_csv(args.mask)
    if pairs != list(dataset.graph.edges):
        raise RuntimeError("mask edge list does not match the dataset graph")
    mask = EdgeMask(prob)
    truth = dataset.ground_truth(directed=args.directed_truth)

    if dataset.task_kind == TASK_NODE:
        _, best = metrics.best_khop_subgraph_eval(mask, truth, dataset.graph,
                                                  l=args.khop, threshold=args.threshold)
        jac, f1_score = best.jaccard, best.f1
    else:
        counts = metrics.confusion(mask, truth, args.threshold, args.fn_mode)
        jac, f1_score = metrics.jaccard(counts), metrics.f1(counts)
    counts_full = metrics.confusion(mask, truth, args.threshold, args.fn_mode)
    acc = metrics.accuracy(counts_full)
    unf = metrics.unfaithfulness(model, dataset.graph, dataset.model_features(),
                                 mask, args.threshold)

    out = Path(args.out)
    new_file = not out.is_file()
    with open(out, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(["dataset", "explainer", "seed", "jaccard", "f1",
                             "accuracy", "unfaithfulness"])
        writer.writerow([dataset.preset, explainer, seed,
                         io.format_float(jac), io.format_float(f1_score),
                         io.format_float(acc), io.format_float(unf)])
    print(f"{dataset.preset} {explainer} seed={seed} jaccard={jac:.4f} "
          f"f1={f1_score:.4f} accuracy={acc:.4f} unfaithfulness={unf:.4f}")
    return 0


# ---------------------------------------------------------------------------
# compare


def cmd_compare(args, parser) -> int:
    reports = Path(args.reports)
    if not reports.is_file():
        parser.error(f"metric report {args.reports} not found")
    rows = []
    with open(reports, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        parser.error("metric report is empty")

    known = sorted({r["explainer"] for r in rows})
    pairs = []
    for spec_pair in args.pairs:
        try:
            a, b = spec_pair.split(":")
        except ValueError:
            parser.error(f"pair {spec_pair!r} must look like explainer_a:explainer_b")
        if a not in known or b not in known:
            parser.error(f"pair {spec_pair!r} names an explainer absent from the report "
                         f"(have: {', '.join(known)})")
        pairs.append((a, b))

    metrics_wanted = args.metric
    datasets = sorted({r["dataset"] for r in rows})
    out_rows = []
    for dataset_name in datasets:
        for metric_name in metrics_wanted:
            for a, b in pairs:
                sample_a = [float(r[metric_name]) for r in rows
                            if r["dataset"] == dataset_name and r["explainer"] == a]
                sample_b = [float(r[metric_name]) for r in rows
                            if r["dataset"] == dataset_name and r["explainer"] == b]
                if not sample_a or not sample_b:
                    continue
                result = metrics.mann_whitney_u(sample_a, sample_b)
                out_rows.append([dataset_name, metric_name, a, b,
                                 io.format_float(result.u_statistic),
                                 io.format_float(result.p_value), result.bucket])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "metric", "explainer_a", "explainer_b", "u", "p", "bucket"])
        writer.writerows(out_rows)
    for row in out_rows:
        print(" ".join(str(x) for x in row))
    return 0


# ---------------------------------------------------------------------------
# parser


def _flag_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betamask",
        description="Train small GNNs and explain them with Beta-posterior edge masks.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("preset", choices=presets.ALL_PRESETS)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--motifs", type=int, help="motif count for sg-* presets")
    p.add_argument("--genes", type=int, help="gene count for expr-* presets")
    p.add_argument("--cells", type=int, help="cells per class for expr-* presets")
    p.add_argument("--config", help="JSON file of generator-config overrides")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train and freeze a GNN on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", default="16", help="comma-separated hidden layer widths")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="fit an edge-mask explanation")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, help="Beta prior alpha")
    p.add_argument("--beta", type=float, help="Beta prior beta")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int, help="instance batch size for graph tasks")
    p.add_argument("--samples", type=int, default=1, help="mask samples per step")
    p.add_argument("--seed", default=str(_default_seed()),
                   help="seed or comma-separated list of seeds")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--khop", type=int, default=1)
    p.add_argument("--target", choices=("predicted", "true"), default="predicted",
                   help="match the model's own outputs or one-hot labels")
    p.add_argument("--size-coefficient", type=float, default=0.005)
    p.add_argument("--entropy-coefficient", type=float, default=0.1)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across seeds")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="score a mask against ground truth")
    p.add_argument("--mask", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="metric CSV to append to")
    p.add_argument("--fn-mode", dest="fn_mode", default=metrics.FN_GRAPH_ONLY,
                   choices=(metrics.FN_GRAPH_ONLY, metrics.FN_INCLUDE_ABSENT))
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--khop", type=int, default=1)
    p.add_argument("--directed-truth", action="store_true",
                   help="compare truth without collapsing edge direction")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="Mann-Whitney tests between explainers")
    p.add_argument("--reports", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pairs", nargs="+", required=True,
                   help="explainer pairs like beta:gnnx")
    p.add_argument("--metric", nargs="+",
                   default=["jaccard", "f1", "accuracy", "unfaithfulness"])
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
