"""Variational Beta posteriors over the edge mask of a frozen GNN.

Each edge gets an independent Beta(alpha_e, beta_e) posterior, stored in
unconstrained form and realized through softplus. Training maximizes

    ELBO = E_q[ -KL(target || softmax(f(X, G, M))) ]
           - sum_e KL(Beta(alpha_e, beta_e) || Beta(prior))

where the target rows are the frozen model's own softmax outputs on the
full graph, captured once up front. The expectation's gradient uses the
score-function estimator with an exponential-moving-average baseline; the
prior KL term is differentiated in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .. import gnn
from ..beta import beta_mean, kl_beta_beta, sample_beta
from ..graphs import TASK_GRAPH, EdgeMask, Graph
from ..special import digamma, sigmoid, softplus, softplus_inverse

RAW_FLOOR = -30.0  # softplus underflows to exactly 0 below this


@dataclass(frozen=True)
class ExplainerConfig:
    learning_rate: float = 0.05
    epochs: int = 25
    prior_alpha: float = 0.8
    prior_beta: float = 0.6
    samples_per_step: int = 1
    threshold: float = 0.5
    seed: int = 0
    graph_batch_size: Optional[int] = None

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 0 or self.samples_per_step < 1:
            raise ValueError("invalid optimization settings")
        if self.prior_alpha <= 0 or self.prior_beta <= 0:
            raise ValueError("prior shapes must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.graph_batch_size is not None and self.graph_batch_size < 1:
            raise ValueError("graph_batch_size must be positive")


class BetaEdgeParams:
    """Unconstrained per-edge (a_raw, b_raw); realized shapes via softplus."""

    def __init__(self, a_raw: np.ndarray, b_raw: np.ndarray):
        self.a_raw = np.asarray(a_raw, dtype=np.float64)
        self.b_raw = np.asarray(b_raw, dtype=np.float64)
        if self.a_raw.shape != self.b_raw.shape:
            raise ValueError("raw parameter arrays must be aligned")

    @classmethod
    def from_prior(cls, num_edges: int, prior_alpha: float, prior_beta: float):
        a = np.full(num_edges, float(softplus_inverse(prior_alpha)))
        b = np.full(num_edges, float(softplus_inverse(prior_beta)))
        return cls(a, b)

    @property
    def alpha(self) -> np.ndarray:
        return softplus(self.a_raw)

    @property
    def beta(self) -> np.ndarray:
        return softplus(self.b_raw)


@dataclass(frozen=True)
class ExplanationReport:
    alpha: np.ndarray
    beta: np.ndarray
    prob: np.ndarray
    rank: np.ndarray
    elbo_trace: tuple
    mask: EdgeMask


class EmaBaseline:
    """Moving average of the likelihood values; control variate for the
    score-function estimator. The current step always uses the value from
    before its own samples, keeping the estimator unbiased."""

    def __init__(self, decay: float = 0.9, value: float = 0.0):
        self.decay = decay
        self.value = value

    def update(self, observed: float) -> None:
        self.value = self.decay * self.value + (1.0 - self.decay) * observed


def capture_target(model: gnn.GnnModel, graph: Graph, features) -> np.ndarray:
    """Softmax rows of the frozen model on the unmasked graph."""
    logits, _ = gnn.forward(model, graph, features)
    return gnn.softmax(logits)


def likelihood_term(model: gnn.GnnModel, graph: Graph, features,
                    mask_sample: EdgeMask, target: np.ndarray,
                    want_grad: bool = True):
    """-KL(target || masked softmax) summed over instances.

    Returns (value, grad) where grad is w.r.t. the mask entries, or
    (value, None) when the gradient is not requested.
    """
    logits, cache = gnn.forward(model, graph, features, mask_sample)
    value = -gnn.kl_categorical(target, logits)
    if not want_grad:
        return value, None
    return value, -gnn.backward_edge_weights(model, cache, target)


def score_function_step(a_raw: np.ndarray, b_raw: np.ndarray,
                        prior_alpha: float, prior_beta: float,
                        likelihood: Callable[[np.ndarray], float],
                        rng: np.random.Generator,
                        samples: int = 1,
                        baseline: Optional[EmaBaseline] = None):
    """One stochastic ELBO evaluation with gradients in raw space.

    ``likelihood`` maps a mask sample (array over edges) to a scalar
    log-likelihood surrogate. Returns (elbo, grad_a_raw, grad_b_raw).
    """
    alpha = softplus(a_raw)
    beta = softplus(b_raw)
    kl, dkl_da, dkl_db = kl_beta_beta(alpha, beta, prior_alpha, prior_beta, with_grads=True)
    kl_total = float(np.sum(kl))

    # digamma terms of the score are constant across samples in one step
    psi_sum = digamma(alpha + beta)
    score_a_const = psi_sum - digamma(alpha)
    score_b_const = psi_sum - digamma(beta)

    base = baseline.value if baseline is not None else 0.0
    grad_a = np.zeros_like(alpha)
    grad_b = np.zeros_like(beta)
    values = []
    for _ in range(samples):
        m = sample_beta(alpha, beta, rng)
        val = likelihood(m)
        values.append(val)
        centered = val - base
        grad_a += centered * (np.log(m) + score_a_const)
        grad_b += centered * (np.log1p(-m) + score_b_const)
    mean_val = float(np.mean(values))
    grad_a = grad_a / samples - dkl_da
    grad_b = grad_b / samples - dkl_db
    if baseline is not None:
        baseline.update(mean_val)

    elbo = mean_val - kl_total
    if not np.isfinite(elbo):
        raise RuntimeError(
            f"non-finite ELBO estimate (likelihood={mean_val}, prior KL={kl_total})")
    # chain rule through softplus to the unconstrained parameters
    return elbo, grad_a * sigmoid(a_raw), grad_b * sigmoid(b_raw)


def _batched_likelihood(model, graph, features, target, batch_size):
    """Sums the output-matching term over instance batches (graph tasks)."""
    count = features.shape[0]
    spans = [(s, min(s + batch_size, count)) for s in range(0, count, batch_size)]

    def evaluate(mask_weights: np.ndarray) -> float:
        mask = EdgeMask(mask_weights)
        total = 0.0
        for lo, hi in spans:
            val, _ = likelihood_term(model, graph, features[lo:hi], mask,
                                     target[lo:hi], want_grad=False)
            total += val
        return total

    return evaluate


def elbo_step(params: BetaEdgeParams, config: ExplainerConfig, model: gnn.GnnModel,
              graph: Graph, features, target: np.ndarray,
              rng: np.random.Generator, baseline: Optional[EmaBaseline] = None):
    """One ELBO estimate plus gradients w.r.t. the raw edge parameters."""
    if model.config.task_kind == TASK_GRAPH and config.graph_batch_size:
        likelihood = _batched_likelihood(model, graph, features, target,
                                         config.graph_batch_size)
    else:
        def likelihood(mask_weights):
            val, _ = likelihood_term(model, graph, features, EdgeMask(mask_weights),
                                     target, want_grad=False)
            return val

    return score_function_step(params.a_raw, params.b_raw,
                               config.prior_alpha, config.prior_beta,
                               likelihood, rng, config.samples_per_step, baseline)


def _primed_baseline(params, config, model, graph, features, target, rng) -> EmaBaseline:
    """Seeds the EMA with one pilot likelihood draw, so the first real step
    is already variance-reduced. The pilot sample is discarded, which keeps
    every optimization step's baseline independent of its own samples."""
    pilot = sample_beta(params.alpha, params.beta, rng)
    if model.config.task_kind == TASK_GRAPH and config.graph_batch_size:
        value = _batched_likelihood(model, graph, features, target,
                                    config.graph_batch_size)(pilot)
    else:
        value, _ = likelihood_term(model, graph, features, EdgeMask(pilot),
                                   target, want_grad=False)
    return EmaBaseline(value=value)


def rank_by_probability(prob: np.ndarray) -> np.ndarray:
    """Rank 1 = highest probability; ties broken by lower edge index."""
    order = np.lexsort((np.arange(len(prob)), -prob))
    rank = np.empty(len(prob), dtype=np.intp)
    rank[order] = np.arange(1, len(prob) + 1)
    return rank


def fit(config: ExplainerConfig, model: gnn.GnnModel, graph: Graph, features,
        target_override: Optional[np.ndarray] = None) -> ExplanationReport:
    """Runs the full variational loop and reports per-edge posteriors.

    The target distribution is captured once from the frozen model before
    any masking; ``target_override`` substitutes externally chosen rows
    (e.g. one-hot labels) without changing anything else.
    """
    if target_override is not None:
        target = np.asarray(target_override, dtype=np.float64)
    else:
        target = capture_target(model, graph, features)
    rng = np.random.default_rng(config.seed)
    params = BetaEdgeParams.from_prior(graph.num_edges, config.prior_alpha, config.prior_beta)
    opt = gnn.Adam([params.a_raw, params.b_raw], lr=config.learning_rate)
    baseline = _primed_baseline(params, config, model, graph, features, target, rng)
    trace = []
    for _ in range(config.epochs):
        elbo, ga, gb = elbo_step(params, config, model, graph, features, target,
                                 rng, baseline)
        trace.append(elbo)
        # Adam minimizes, so feed the negative ELBO gradient.
        opt.step([params.a_raw, params.b_raw], [-ga, -gb])
        np.maximum(params.a_raw, RAW_FLOOR, out=params.a_raw)
        np.maximum(params.b_raw, RAW_FLOOR, out=params.b_raw)

    alpha = params.alpha
    beta = params.beta
    prob = beta_mean(alpha, beta)
    return ExplanationReport(
        alpha=alpha,
        beta=beta,
        prob=prob,
        rank=rank_by_probability(prob),
        elbo_trace=tuple(trace),
        mask=EdgeMask(prob),
    )


def ecdf(values: Sequence[float]):
    """Right-continuous empirical CDF as (value, cumulative fraction) pairs."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("ecdf requires at least one value")
    vals = np.sort(vals)
    uniq, counts = np.unique(vals, return_counts=True)
    fracs = np.cumsum(counts) / vals.size
    return [(float(v), float(f)) for v, f in zip(uniq, fracs)]
