"""Deterministic sigmoid edge mask, optimized directly against the same
output-matching loss the Beta explainer uses, plus the random-mask null.

Loss = KL(target || masked softmax)
     + size_coefficient * mean(mask)
     + entropy_coefficient * mean(binary entropy of mask)

optimized by Adam on the unconstrained logits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import gnn
from ..graphs import TASK_GRAPH, EdgeMask, Graph
from ..special import sigmoid
from .beta_mask import capture_target, likelihood_term


@dataclass(frozen=True)
class BaselineConfig:
    learning_rate: float = 1e-5
    epochs: int = 200
    size_coefficient: float = 0.005
    entropy_coefficient: float = 0.1
    init_scale: float = 0.1
    seed: int = 0
    graph_batch_size: Optional[int] = None

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 0:
            raise ValueError("invalid optimization settings")
        if self.size_coefficient < 0 or self.entropy_coefficient < 0 or self.init_scale < 0:
            raise ValueError("coefficients must be non-negative")


@dataclass(frozen=True)
class BaselineResult:
    mask: EdgeMask
    logits: np.ndarray
    loss_trace: tuple


def _mask_objective(model, graph, features, target, mask_weights, config):
    """Output-matching KL plus regularizers; returns (loss, dloss/dmask)."""
    neg_ll, neg_ll_grad = _matching_loss(model, graph, features, target,
                                         mask_weights, config)
    m = mask_weights
    e = len(m)
    loss = neg_ll + config.size_coefficient * m.mean()
    grad = neg_ll_grad + config.size_coefficient / e
    if config.entropy_coefficient:
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -(m * np.log(m) + (1.0 - m) * np.log1p(-m))
            dent = np.log1p(-m) - np.log(m)
        ent = np.where(np.isfinite(ent), ent, 0.0)
        dent = np.where(np.isfinite(dent), dent, 0.0)
        loss += config.entropy_coefficient * ent.mean()
        grad = grad + config.entropy_coefficient * dent / e
    return loss, grad


def _matching_loss(model, graph, features, target, mask_weights, config):
    mask = EdgeMask(mask_weights)
    if model.config.task_kind == TASK_GRAPH and config.graph_batch_size:
        count = features.shape[0]
        bs = config.graph_batch_size
        total, grad = 0.0, np.zeros(len(mask_weights))
        for lo in range(0, count, bs):
            hi = min(lo + bs, count)
            val, g = likelihood_term(model, graph, features[lo:hi], mask, target[lo:hi])
            total -= val
            grad -= g
        return total, grad
    val, g = likelihood_term(model, graph, features, mask, target)
    return -val, -g


def fit_baseline(config: BaselineConfig, model: gnn.GnnModel, graph: Graph,
                 features, target_override: Optional[np.ndarray] = None) -> BaselineResult:
    """Optimizes the sigmoid mask; returns the realized mask and loss trace."""
    if target_override is not None:
        target = np.asarray(target_override, dtype=np.float64)
    else:
        target = capture_target(model, graph, features)
    rng = np.random.default_rng(config.seed)
    logits = rng.normal(0.0, config.init_scale, size=graph.num_edges) if config.init_scale else np.zeros(graph.num_edges)
    opt = gnn.Adam([logits], lr=config.learning_rate)
    trace = []
    for epoch in range(config.epochs):
        m = sigmoid(logits)
        loss, dmask = _mask_objective(model, graph, features, target, m, config)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite baseline loss at epoch {epoch}")
        trace.append(float(loss))
        opt.step([logits], [dmask * m * (1.0 - m)])
    return BaselineResult(mask=EdgeMask(sigmoid(logits)), logits=logits, loss_trace=tuple(trace))


def random_mask_baseline(graph: Graph, seed: int) -> EdgeMask:
    """I.i.d. uniform [0, 1] weights; the null model for significance tests."""
    rng = np.random.default_rng(seed)
    return EdgeMask(rng.random(graph.num_edges))
