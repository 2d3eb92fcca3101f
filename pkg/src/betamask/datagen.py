"""Deterministic synthetic datasets with known edge-level ground truth.

Two families:

* Motif graphs (node classification). House-shaped motifs, five nodes and
  six edges each, hang off a backbone path. Backbone nodes are either
  anchors (five edges into one motif) or bridges (one edge into each of
  two motifs); a node's class is the number of distinct motifs in its
  1-hop neighborhood minus one, so bridges are the positive class. The
  heterophilic switch rewires anchors into bridges until most connector
  edges join differently labeled endpoints.

* Expression graphs (graph classification). A random DAG of gene
  regulators drives per-cell expression levels; two cell classes differ
  in the base level of five master regulators. The model input graph is
  built from pairwise feature correlation, so it contains false edges and
  misses true ones; the regulator network is the ground truth.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import io
from .graphs import (TASK_GRAPH, TASK_NODE, EdgeMask, Graph, GroundTruth,
                     LabelVector, build_graph)

PROTECTED_NONE = "none"
PROTECTED_NEGATIVE = "negative"

MASTER_BASE_LOW = 1.0
MASTER_BASE_HIGH = 3.0
NUM_MASTERS = 5

CROSS_LABEL_HIGH = 0.7
CROSS_LABEL_LOW = 0.3


@dataclass(frozen=True)
class MotifDatasetConfig:
    num_motifs: int = 100
    informative_features: int = 4
    total_features: int = 11
    flip_probability: float = 0.5
    protected_correlation: str = PROTECTED_NONE
    heterophilic: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_motifs < 2:
            raise ValueError("need at least two motifs")
        if not 0 < self.informative_features <= self.total_features - 1:
            raise ValueError("informative features must fit alongside the protected dim")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("flip_probability must lie in [0, 1]")
        if self.protected_correlation not in (PROTECTED_NONE, PROTECTED_NEGATIVE):
            raise ValueError(f"unknown protected_correlation {self.protected_correlation!r}")


@dataclass(frozen=True)
class ExpressionDatasetConfig:
    num_genes: int = 100
    cells_per_class: int = 1000
    sparsity: float = 0.25
    correlation_threshold: float = 0.35
    seed: int = 0

    def __post_init__(self):
        if self.num_genes <= NUM_MASTERS:
            raise ValueError(f"need more than {NUM_MASTERS} genes")
        if self.cells_per_class < 2:
            raise ValueError("need at least two cells per class")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if not 0.0 < self.correlation_threshold < 1.0:
            raise ValueError("correlation threshold must lie in (0, 1)")


@dataclass(frozen=True)
class Dataset:
    """Everything one experiment consumes, plus generation provenance."""

    graph: Graph
    features: np.ndarray
    labels: LabelVector
    truth: GroundTruth
    true_pairs: Tuple[Tuple[int, int], ...]
    task_kind: str
    preset: str
    config: dict
    seed: int

    def model_features(self) -> np.ndarray:
        """Feature tensor shaped for the GNN: (n, d) or (batch, n, 1)."""
        if self.task_kind == TASK_GRAPH:
            return self.features[:, :, None]
        return self.features

    def ground_truth(self, directed: bool = False) -> GroundTruth:
        """Rebuilds the truth flags, optionally without direction collapse."""
        if not directed:
            return self.truth
        pairs = set(self.true_pairs)
        imp = np.array([e in pairs for e in self.graph.edges], dtype=bool)
        absent = tuple(sorted(p for p in pairs if p not in self.graph.edge_index))
        return GroundTruth(important=imp, absent_true_edges=absent)


def _collapse_truth(graph: Graph, true_pairs) -> GroundTruth:
    """An edge is true when either direction appears among the true pairs;
    a true pair is absent when neither direction made it into the graph."""
    pairs = set(true_pairs)
    imp = np.array([(e in pairs) or (e[::-1] in pairs) for e in graph.edges], dtype=bool)
    present = set(graph.edges)
    absent = tuple(sorted(p for p in pairs if p not in present and p[::-1] not in present))
    return GroundTruth(important=imp, absent_true_edges=absent)


# ---------------------------------------------------------------------------
# motif graphs


def _house_edges(base: int):
    b0, b1, b2, b3, apex = range(base, base + 5)
    return [(b0, b1), (b1, b2), (b2, b3), (b3, b0), (apex, b0), (apex, b1)]


def count_motifs_in_neighborhood(graph: Graph, motif_of, node: int) -> int:
    """Distinct motif ids among a node and its undirected neighbors.

    ``motif_of[v]`` is the motif id of v or -1 for backbone nodes. This is
    the labeling rule, kept brute-force so tests can call it directly.
    """
    seen = set()
    if motif_of[node] >= 0:
        seen.add(motif_of[node])
    for s, t in graph.edges:
        if s == node and motif_of[t] >= 0:
            seen.add(motif_of[t])
        elif t == node and motif_of[s] >= 0:
            seen.add(motif_of[s])
    return len(seen)


def _all_motif_counts(graph: Graph, motif_of):
    adj = graph.neighbors_undirected()
    counts = []
    for v in range(graph.node_count):
        seen = {motif_of[v]} if motif_of[v] >= 0 else set()
        seen.update(motif_of[u] for u in adj[v] if motif_of[u] >= 0)
        counts.append(len(seen))
    return counts


def cross_label_connector_fraction(labels, connector_pairs) -> float:
    """Fraction of connector edges whose endpoints carry different labels."""
    if not connector_pairs:
        return 0.0
    cross = sum(1 for s, t in connector_pairs if labels[s] != labels[t])
    return cross / len(connector_pairs)


def generate_motif_dataset(config: MotifDatasetConfig, preset: str = "sg-base") -> Dataset:
    rng = np.random.default_rng(config.seed)
    k = config.num_motifs
    num_backbone = 4 * k
    motif_nodes = 5 * k
    n = motif_nodes + num_backbone
    backbone = list(range(motif_nodes, n))

    motif_edges = []
    for i in range(k):
        motif_edges.extend(_house_edges(5 * i))
    path_edges = [(backbone[j], backbone[j + 1]) for j in range(num_backbone - 1)]

    # Backbone roles: anchors touch one motif through five edges, bridges
    # touch two motifs through one edge each. Start half and half. Roles
    # pin the labels: a bridge sees two motifs in its 1-hop neighborhood
    # (class 1), everything else sees exactly one (class 0). A brute-force
    # recount below re-derives the labels from the finished graph.
    primary = [j % k for j in range(num_backbone)]
    is_bridge = [j >= num_backbone // 2 for j in range(num_backbone)]
    secondary = [0] * num_backbone
    attach = [0] * num_backbone  # bridge attachment node inside each motif
    for j in range(num_backbone):
        secondary[j] = (primary[j] + 1 + int(rng.integers(0, k - 1))) % k
        attach[j] = int(rng.integers(0, 5))

    def connector_pairs():
        pairs = []
        for j in range(num_backbone):
            b = backbone[j]
            if is_bridge[j]:
                pairs.append((b, 5 * primary[j] + attach[j]))
                pairs.append((b, 5 * secondary[j] + (attach[j] + 1) % 5))
            else:
                pairs.extend((b, 5 * primary[j] + m) for m in range(5))
        return pairs

    def role_labels():
        lab = np.zeros(n, dtype=np.intp)
        for j in range(num_backbone):
            if is_bridge[j]:
                lab[backbone[j]] = 1
        return lab

    pairs = connector_pairs()
    labels = role_labels()
    if config.heterophilic:
        # Convert anchors to bridges one at a time until connector edges
        # mostly join differently labeled endpoints.
        anchors = [j for j in range(num_backbone) if not is_bridge[j]]
        order = list(rng.permutation(len(anchors)))
        while cross_label_connector_fraction(labels, pairs) < CROSS_LABEL_HIGH:
            if not order:
                raise RuntimeError(f"could not reach heterophilic bound (seed {config.seed})")
            is_bridge[anchors[order.pop()]] = True
            pairs = connector_pairs()
            labels = role_labels()

    undirected = motif_edges + path_edges + pairs
    graph = build_graph(
        undirected + [(t, s) for s, t in undirected], n)

    motif_of = [v // 5 if v < motif_nodes else -1 for v in range(n)]
    counts = _all_motif_counts(graph, motif_of)
    bad = [v for v, c in enumerate(counts) if c not in (1, 2)]
    if bad or np.any(labels != np.asarray(counts) - 1):
        raise RuntimeError(
            f"motif-count invariant violated at nodes {bad[:5]} (seed {config.seed})")

    true_pairs = tuple(sorted(set(motif_edges) | {(t, s) for s, t in motif_edges}))
    truth = _collapse_truth(graph, true_pairs)

    feat = np.empty((n, config.total_features))
    informative = config.informative_features
    feat[:, :informative] = labels[:, None] + rng.normal(0.0, 0.5, size=(n, informative))
    if config.protected_correlation == PROTECTED_NEGATIVE:
        protected = 1.0 - labels
    else:
        protected = rng.integers(0, 2, size=n).astype(np.float64)
    flips = rng.random(n) < config.flip_probability
    protected = np.where(flips, 1.0 - protected, protected)
    feat[:, informative] = protected
    noise_dims = config.total_features - informative - 1
    if noise_dims:
        feat[:, informative + 1:] = rng.normal(0.0, 1.0, size=(n, noise_dims))

    return Dataset(
        graph=graph,
        features=feat,
        labels=LabelVector(labels, num_classes=2, task_kind=TASK_NODE),
        truth=truth,
        true_pairs=true_pairs,
        task_kind=TASK_NODE,
        preset=preset,
        config=asdict(config),
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# expression graphs


def _regulator_network(config: ExpressionDatasetConfig, rng):
    """Random DAG: edges always point from lower to higher index, and the
    master regulators (first five genes) have no parents."""
    g = config.num_genes
    edges = []
    weights = {}
    for src in range(g - 1):
        first_target = max(src + 1, NUM_MASTERS)
        pool = np.arange(first_target, g)
        if pool.size == 0:
            continue
        deg = min(int(rng.poisson(2.0)), pool.size)
        if deg == 0:
            continue
        targets = rng.choice(pool, size=deg, replace=False)
        for t in np.sort(targets):
            edges.append((src, int(t)))
            weights[(src, int(t))] = rng.uniform(0.5, 1.5)
    return edges, weights


def generate_expression_dataset(config: ExpressionDatasetConfig,
                                preset: str = "expr-25") -> Dataset:
    rng = np.random.default_rng(config.seed)
    g = config.num_genes
    net_edges, net_weights = _regulator_network(config, rng)
    parents = {gene: [] for gene in range(g)}
    for s, t in net_edges:
        parents[t].append(s)

    cells = 2 * config.cells_per_class
    expr = np.zeros((cells, g))
    labels = np.repeat([0, 1], config.cells_per_class)
    noise_std = np.sqrt(0.5)
    for c in range(cells):
        base_level = MASTER_BASE_LOW if labels[c] == 0 else MASTER_BASE_HIGH
        x = np.zeros(g)
        noise = rng.normal(0.0, noise_std, size=g)
        for gene in range(g):
            total = base_level if gene < NUM_MASTERS else 0.0
            for p in parents[gene]:
                total += net_weights[(p, gene)] * x[p]
            x[gene] = total + noise[gene]
        expr[c] = x

    if config.sparsity > 0.0:
        drop = rng.random(expr.shape) < config.sparsity
        expr = np.where(drop, 0.0, expr)

    variances = expr.var(axis=0)
    dead = np.flatnonzero(variances == 0.0)
    if dead.size:
        warnings.warn(f"excluding {dead.size} zero-variance genes from the correlation graph")
    corr_edges = []
    if dead.size < g:
        with np.errstate(invalid="ignore"):
            corr = np.corrcoef(expr, rowvar=False)
        for i in range(g):
            for j in range(i + 1, g):
                if variances[i] == 0.0 or variances[j] == 0.0:
                    continue
                if abs(corr[i, j]) >= config.correlation_threshold:
                    corr_edges.extend(((i, j), (j, i)))
    graph = build_graph(corr_edges, g)
    true_pairs = tuple(sorted(net_edges))
    truth = _collapse_truth(graph, true_pairs)

    return Dataset(
        graph=graph,
        features=expr,
        labels=LabelVector(labels, num_classes=2, task_kind=TASK_GRAPH),
        truth=truth,
        true_pairs=true_pairs,
        task_kind=TASK_GRAPH,
        preset=preset,
        config=asdict(config),
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# persistence

_FILES = ("graph.tsv", "features.csv", "labels.csv", "truth_edges.tsv", "absent_edges.tsv")


def save_dataset(dataset: Dataset, out_dir) -> dict:
    """Writes the on-disk layout and returns the manifest document."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_tsv(out / "graph.tsv", dataset.graph.edges)
    io.write_matrix_csv(out / "features.csv", dataset.features)
    io.write_labels_csv(out / "labels.csv", dataset.labels.labels)
    io.write_edge_tsv(out / "truth_edges.tsv", dataset.true_pairs)
    io.write_edge_tsv(out / "absent_edges.tsv", dataset.truth.absent_true_edges)
    manifest = {
        "kind": "dataset",
        "preset": dataset.preset,
        "task_kind": dataset.task_kind,
        "seed": dataset.seed,
        "config": dataset.config,
        "node_count": dataset.graph.node_count,
        "num_classes": dataset.labels.num_classes,
        "files": {name: io.sha256_file(out / name) for name in _FILES},
    }
    io.write_json(out / "manifest.json", manifest)
    return manifest


def load_dataset(data_dir) -> Dataset:
    src = Path(data_dir)
    manifest = io.read_json(src / "manifest.json")
    node_count = manifest["node_count"]
    graph = build_graph(io.read_edge_tsv(src / "graph.tsv"), node_count)
    features = io.read_matrix_csv(src / "features.csv")
    labels = io.read_labels_csv(src / "labels.csv")
    true_pairs = tuple(sorted(map(tuple, io.read_edge_tsv(src / "truth_edges.tsv"))))
    task = manifest["task_kind"]
    return Dataset(
        graph=graph,
        features=features,
        labels=LabelVector(labels, num_classes=manifest["num_classes"], task_kind=task),
        truth=_collapse_truth(graph, true_pairs),
        true_pairs=true_pairs,
        task_kind=task,
        preset=manifest["preset"],
        config=manifest["config"],
        seed=manifest["seed"],
    )
