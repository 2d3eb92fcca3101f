"""Core graph containers shared across the package.

A :class:`Graph` is an immutable directed edge list over ``node_count``
nodes. Edges are kept in canonical order (sorted by ``(src, dst)``, no
duplicates) so that per-edge masks stay index-aligned through file
round-trips. Undirected inputs are represented by storing both directions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Tuple

import numpy as np

Edge = Tuple[int, int]

TASK_NODE = "node"
TASK_GRAPH = "graph"


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph: node count plus a canonical edge list."""

    node_count: int
    edges: Tuple[Edge, ...]

    @cached_property
    def src(self) -> np.ndarray:
        """Source index per edge, shape (num_edges,)."""
        return np.asarray([e[0] for e in self.edges], dtype=np.intp)

    @cached_property
    def dst(self) -> np.ndarray:
        """Target index per edge, shape (num_edges,)."""
        return np.asarray([e[1] for e in self.edges], dtype=np.intp)

    @cached_property
    def edge_index(self) -> dict:
        """Maps each (src, dst) pair to its position in the edge list."""
        return {e: i for i, e in enumerate(self.edges)}

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors_undirected(self):
        """Adjacency sets ignoring edge direction, one per node."""
        adj = [set() for _ in range(self.node_count)]
        for s, t in self.edges:
            adj[s].add(t)
            adj[t].add(s)
        return adj


def build_graph(edge_pairs: Iterable[Edge], node_count: int) -> Graph:
    """Construct a Graph, enforcing canonical order and deduplication.

    Args:
        edge_pairs: (src, dst) index pairs; duplicates are dropped.
        node_count: total number of nodes, including isolated ones.

    Raises:
        ValueError: on a negative node count, an out-of-range index, or a
            self-loop (self-loops only ever appear inside the GNN's
            normalization, never in stored graphs).
    """
    if node_count < 0:
        raise ValueError(f"node_count must be non-negative, got {node_count}")
    seen = set()
    for s, t in edge_pairs:
        s, t = int(s), int(t)
        if not (0 <= s < node_count and 0 <= t < node_count):
            raise ValueError(f"edge ({s}, {t}) out of range for {node_count} nodes")
        if s == t:
            raise ValueError(f"self-loop ({s}, {t}) not allowed in input graphs")
        seen.add((s, t))
    return Graph(node_count=node_count, edges=tuple(sorted(seen)))


@dataclass(frozen=True)
class EdgeMask:
    """Per-edge weights in [0, 1], index-aligned with a Graph's edge list."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("mask weights must be one-dimensional")
        if w.size and (not np.all(np.isfinite(w)) or w.min() < 0.0 or w.max() > 1.0):
            raise ValueError("mask weights must be finite and in [0, 1]")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.shape[0]

    @staticmethod
    def ones(num_edges: int) -> "EdgeMask":
        return EdgeMask(np.ones(num_edges))


@dataclass(frozen=True)
class GroundTruth:
    """Importance flags per graph edge plus true edges missing from the graph."""

    important: np.ndarray
    absent_true_edges: Tuple[Edge, ...] = field(default_factory=tuple)

    def __post_init__(self):
        imp = np.asarray(self.important, dtype=bool).copy()
        imp.flags.writeable = False
        object.__setattr__(self, "important", imp)
        object.__setattr__(self, "absent_true_edges", tuple(map(tuple, self.absent_true_edges)))

    def validate_against(self, graph: Graph) -> None:
        if len(self.important) != graph.num_edges:
            raise ValueError("ground truth length does not match edge count")
        overlap = set(self.absent_true_edges) & set(graph.edges)
        if overlap:
            raise ValueError(f"absent_true_edges overlap graph edges: {sorted(overlap)[:3]}")


@dataclass(frozen=True)
class LabelVector:
    """Class indices, per node or per graph instance depending on the task."""

    labels: np.ndarray
    num_classes: int
    task_kind: str = TASK_NODE

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.intp).copy()
        if lab.size and (lab.min() < 0 or lab.max() >= self.num_classes):
            raise ValueError("label outside {0..num_classes-1}")
        if self.task_kind not in (TASK_NODE, TASK_GRAPH):
            raise ValueError(f"unknown task_kind {self.task_kind!r}")
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.labels.shape[0]


def validate_features(features: np.ndarray, graph: Graph) -> np.ndarray:
    """Checks a node feature matrix against its graph; returns float64 view."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != graph.node_count:
        raise ValueError(f"feature matrix must be ({graph.node_count}, d), got {x.shape}")
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("feature matrix contains non-finite values")
    return x


def induce_subgraph(graph: Graph, mask: EdgeMask, threshold: float) -> Graph:
    """Keeps exactly the edges whose mask weight is >= threshold.

    Node count is preserved; only the edge list shrinks.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    if len(mask) != graph.num_edges:
        raise ValueError("mask length does not match edge count")
    keep = mask.weights >= threshold
    edges = tuple(e for e, k in zip(graph.edges, keep) if k)
    return Graph(node_count=graph.node_count, edges=edges)


@dataclass(frozen=True)
class KhopResult:
    """An l-hop neighborhood: induced subgraph, node set, and the positions
    of its edges inside the parent graph's edge list."""

    subgraph: Graph
    nodes: Tuple[int, ...]
    edge_indices: Tuple[int, ...]


def khop_subgraph(graph: Graph, center: int, l: int) -> KhopResult:
    """Edges among nodes within undirected BFS distance l of ``center``.

    Connectivity is undirected: an edge in either direction links its
    endpoints for the distance computation.
    """
    if not 0 <= center < graph.node_count:
        raise ValueError(f"center {center} out of range")
    if l < 1:
        raise ValueError("l must be a positive integer")
    adj = graph.neighbors_undirected()
    dist = {center: 0}
    queue = deque([center])
    while queue:
        v = queue.popleft()
        if dist[v] == l:
            continue
        for u in adj[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    nodes = set(dist)
    idx = tuple(i for i, (s, t) in enumerate(graph.edges) if s in nodes and t in nodes)
    sub = Graph(node_count=graph.node_count, edges=tuple(graph.edges[i] for i in idx))
    return KhopResult(subgraph=sub, nodes=tuple(sorted(nodes)), edge_indices=idx)
