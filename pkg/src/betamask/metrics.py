"""Evaluation mathematics for edge explanations.

Counting metrics threshold the mask at 0.5 by default and compare against
ground truth per edge. False negatives come in two modes: counted over the
graph's edges only, or additionally charging every true edge the input
graph never contained. Unfaithfulness measures how much the model output
moves when the graph is cut down to the predicted-important subgraph.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import gnn
from .graphs import EdgeMask, Graph, GroundTruth, khop_subgraph

FN_GRAPH_ONLY = "graph-only"
FN_INCLUDE_ABSENT = "include-absent"

JACCARD_EPS = 1e-9  # kept verbatim in the denominator, even for perfect masks


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int
    fn_mode: str = FN_GRAPH_ONLY

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(mask: EdgeMask, truth: GroundTruth, threshold: float = 0.5,
              fn_mode: str = FN_GRAPH_ONLY) -> ConfusionCounts:
    """Thresholded per-edge confusion counts.

    include-absent mode adds the ground-truth edges missing from the graph
    to the false negatives; nothing else changes.
    """
    if fn_mode not in (FN_GRAPH_ONLY, FN_INCLUDE_ABSENT):
        raise ValueError(f"unknown fn_mode {fn_mode!r}")
    if len(mask) != len(truth.important):
        raise ValueError("mask and ground truth lengths differ")
    pred = mask.weights >= threshold
    imp = truth.important
    tp = int(np.sum(pred & imp))
    fp = int(np.sum(pred & ~imp))
    fn = int(np.sum(~pred & imp))
    tn = int(np.sum(~pred & ~imp))
    if fn_mode == FN_INCLUDE_ABSENT:
        fn += len(truth.absent_true_edges)
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn, fn_mode=fn_mode)


def jaccard(counts: ConfusionCounts) -> float:
    """TP / (TP + FP + FN + 1e-9); the epsilon is part of the definition."""
    return counts.tp / (counts.tp + counts.fp + counts.fn + JACCARD_EPS)


def f1(counts: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall; defined as 0 when TP is 0."""
    if counts.tp == 0:
        return 0.0
    precision = counts.tp / (counts.tp + counts.fp)
    recall = counts.tp / (counts.tp + counts.fn)
    return 2.0 * precision * recall / (precision + recall)


def accuracy(counts: ConfusionCounts) -> float:
    """(TP + TN) / all counts."""
    if counts.total == 0:
        raise ValueError("accuracy undefined on empty counts")
    return (counts.tp + counts.tn) / counts.total


def unfaithfulness(model: gnn.GnnModel, graph: Graph, features,
                   mask: EdgeMask, threshold: float = 0.5) -> float:
    """1 - exp(-KL(full output || masked-subgraph output)), KL summed over
    instances. Zero means the kept subgraph reproduces the model exactly.

    Zero-weight edges drop out of the normalization entirely, so running
    the full graph with 0/1 weights equals running the induced subgraph.
    """
    if len(mask) != graph.num_edges:
        raise ValueError("mask length does not match edge count")
    kept = (mask.weights >= threshold).astype(np.float64)
    full_logits, _ = gnn.forward(model, graph, features)
    sub_logits, _ = gnn.forward(model, graph, features, EdgeMask(kept))
    kl = gnn.kl_categorical(gnn.softmax(full_logits), sub_logits)
    return 1.0 - math.exp(-kl)


@dataclass(frozen=True)
class SubgraphEval:
    node: int
    jaccard: float
    f1: float
    num_edges: int


def best_khop_subgraph_eval(mask: EdgeMask, truth: GroundTruth, graph: Graph,
                            l: int = 1, threshold: float = 0.5):
    """Per-node l-hop restriction of mask and truth, scored by Jaccard.

    Returns (per_node, best) where best maximizes Jaccard with ties broken
    by the lowest node index. Nodes whose neighborhood has no edges are
    skipped; if that leaves nothing, raises.
    """
    per_node = []
    for v in range(graph.node_count):
        hop = khop_subgraph(graph, v, l)
        idx = np.asarray(hop.edge_indices, dtype=np.intp)
        if idx.size == 0:
            continue
        sub_mask = EdgeMask(mask.weights[idx])
        sub_truth = GroundTruth(important=truth.important[idx])
        counts = confusion(sub_mask, sub_truth, threshold, FN_GRAPH_ONLY)
        per_node.append(SubgraphEval(node=v, jaccard=jaccard(counts),
                                     f1=f1(counts), num_edges=idx.size))
    if not per_node:
        raise ValueError("every node has an empty neighborhood subgraph")
    best = max(per_node, key=lambda s: (s.jaccard, -s.node))
    return per_node, best


# ---------------------------------------------------------------------------
# significance testing

STAR_BUCKETS = (
    (0.0001, "****"),
    (0.001, "***"),
    (0.01, "**"),
    (0.05, "*"),
)


def star_bucket(p: float) -> str:
    """Caption-style buckets; the boundary p = 0.05 still earns a star."""
    for bound, stars in STAR_BUCKETS:
        if p <= bound:
            return stars
    return "ns"


@dataclass(frozen=True)
class SignificanceResult:
    u_statistic: float
    p_value: float
    bucket: str


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_two_sided(pooled: np.ndarray, n_a: int, u_min: float) -> float:
    """Tail mass of the exact U distribution over all group assignments."""
    n = len(pooled)
    ranks = np.arange(1, n + 1, dtype=float)  # no ties on this path
    u_max_obs = n_a * (n - n_a) - u_min
    total = 0
    hits = 0
    for combo in itertools.combinations(range(n), n_a):
        r = sum(ranks[i] for i in combo)
        u = r - n_a * (n_a + 1) / 2.0
        if u <= u_min + 1e-12 or u >= u_max_obs - 1e-12:
            hits += 1
        total += 1
    return min(1.0, hits / total)


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> SignificanceResult:
    """Two-sided Mann-Whitney U test.

    Exact enumeration when the pooled size is at most 12 and there are no
    ties; otherwise the normal approximation with midrank tie correction
    and a continuity correction. Reports U for the first sample.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 1 or b.size < 1:
        raise ValueError("both samples need at least one observation")
    n_a, n_b = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r_a = ranks[:n_a].sum()
    u_a = r_a - n_a * (n_a + 1) / 2.0
    u_b = n_a * n_b - u_a
    u_min = min(u_a, u_b)

    has_ties = len(np.unique(pooled)) != len(pooled)
    if not has_ties and n_a + n_b <= 12:
        p = _exact_two_sided(pooled, n_a, u_min)
        return SignificanceResult(u_statistic=u_a, p_value=p, bucket=star_bucket(p))

    n = n_a + n_b
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = np.sum(tie_counts ** 3 - tie_counts) / (n * (n - 1)) if n > 1 else 0.0
    variance = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if variance <= 0.0:
        # both samples constant and equal
        return SignificanceResult(u_statistic=u_a, p_value=1.0, bucket="ns")
    mu = n_a * n_b / 2.0
    num = min(0.0, u_min - mu + 0.5)  # continuity correction toward the mean
    z = num / math.sqrt(variance)
    p = min(1.0, 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0)))
    return SignificanceResult(u_statistic=u_a, p_value=p, bucket=star_bucket(p))


# ---------------------------------------------------------------------------
# display scaling


def scale_probs_for_display(probs: Sequence[float], accepted: Sequence[bool]) -> np.ndarray:
    """Shifted max-min scaling of the accepted probabilities.

    (p - m + 1e-5) / (M - m) with M and m the extrema over accepted
    entries; if all accepted probabilities coincide, every output is 1.0.
    Entries not accepted map to NaN (they are not drawn with a width).
    """
    p = np.asarray(probs, dtype=np.float64)
    acc = np.asarray(accepted, dtype=bool)
    if p.shape != acc.shape:
        raise ValueError("probs and accepted must align")
    if not acc.any():
        raise ValueError("no accepted probabilities to scale")
    chosen = p[acc]
    hi, lo = chosen.max(), chosen.min()
    out = np.full(p.shape, np.nan)
    if hi == lo:
        out[acc] = 1.0
    else:
        out[acc] = (chosen - lo + 1e-5) / (hi - lo)
    return out
