"""Edge-weighted graph convolutional classifier with manual backprop.

The layer rule is H' = relu(A_hat_w H W + b), where A_hat_w is the
symmetrically degree-normalized adjacency with unit self-loops and each
off-diagonal entry scaled by its edge weight:

    deg[v]  = 1 + sum of weights of edges into v
    A_hat_w[t, s] = w_e / sqrt(deg[t] * deg[s])   for edge e = (s, t)
    A_hat_w[v, v] = 1 / deg[v]

The final layer has no activation. Graph-classification models mean-pool
node embeddings after the convolutions and finish with a plain affine map.
Degrees depend on the edge weights, so the edge-weight gradient includes
the normalization path, not just the direct coefficient.

Everything here is float64 numpy; the per-edge scatter loops dispatch to
the compiled kernels when available.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .graphs import TASK_GRAPH, TASK_NODE, EdgeMask, Graph


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class GnnConfig:
    layer_dims: tuple
    task_kind: str = TASK_NODE

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("layer_dims needs at least two positive entries")
        if self.task_kind not in (TASK_NODE, TASK_GRAPH):
            raise ValueError(f"unknown task_kind {self.task_kind!r}")
        if self.task_kind == TASK_GRAPH and len(dims) < 3:
            raise ValueError("graph tasks need at least one convolution before the readout")
        object.__setattr__(self, "layer_dims", dims)

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]


class GnnModel:
    """Per-layer weight matrices and biases, frozen once training ends."""

    def __init__(self, config: GnnConfig, layers):
        if len(layers) != config.num_layers:
            raise ValueError("layer count does not match config")
        for i, (w, b) in enumerate(layers):
            want = (config.layer_dims[i], config.layer_dims[i + 1])
            if w.shape != want or b.shape != (want[1],):
                raise ValueError(f"layer {i} shaped {w.shape}, expected {want}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} contains non-finite values")
        self.config = config
        self.layers = [(np.array(w, dtype=np.float64), np.array(b, dtype=np.float64)) for w, b in layers]

    def copy(self) -> "GnnModel":
        return GnnModel(self.config, [(w.copy(), b.copy()) for w, b in self.layers])

    def parameters(self):
        out = []
        for w, b in self.layers:
            out.extend((w, b))
        return out


def init_model(config: GnnConfig, seed: int) -> GnnModel:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for din, dout in zip(config.layer_dims[:-1], config.layer_dims[1:]):
        bound = np.sqrt(6.0 / (din + dout))
        w = rng.uniform(-bound, bound, size=(din, dout))
        layers.append((w, np.zeros(dout)))
    return GnnModel(config, layers)


# ---------------------------------------------------------------------------
# normalization coefficients


def _norm_coefficients(graph: Graph, weights: np.ndarray):
    deg = K.degrees(graph.dst, weights, graph.node_count)
    inv_sqrt_pair = 1.0 / np.sqrt(deg[graph.dst] * deg[graph.src])
    coef_self = 1.0 / deg
    coef_edge = weights * inv_sqrt_pair
    return deg, coef_self, coef_edge, inv_sqrt_pair


def _fold(h):
    # (B, n, f) -> (n, B*f) so one kernel call covers a whole batch
    b, n, f = h.shape
    return np.ascontiguousarray(h.transpose(1, 0, 2).reshape(n, b * f))


def _unfold(h2, batch):
    n, bf = h2.shape
    return h2.reshape(n, batch, bf // batch).transpose(1, 0, 2)


# ---------------------------------------------------------------------------
# forward


class ForwardCache:
    """Activations saved by forward() for the matching backward passes."""

    def __init__(self, graph, weights, deg, coef_self, coef_edge, inv_sqrt_pair, batched):
        self.graph = graph
        self.weights = weights
        self.deg = deg
        self.coef_self = coef_self
        self.coef_edge = coef_edge
        self.inv_sqrt_pair = inv_sqrt_pair
        self.batched = batched
        self.layer_inputs = []   # H entering each convolution
        self.aggregated = []     # A_hat_w @ H per convolution
        self.preacts = []        # Z per convolution
        self.pooled = None
        self.logits = None


def forward(model: GnnModel, graph: Graph, features: np.ndarray,
            edge_weights: Optional[EdgeMask] = None):
    """Runs the classifier; returns (logits, cache).

    ``features`` is (node_count, d) for node tasks and (batch, node_count, d)
    for graph tasks. ``edge_weights`` defaults to all ones, which is the
    unweighted model bit for bit.
    """
    cfg = model.config
    x = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    if edge_weights is None:
        w = np.ones(graph.num_edges)
    else:
        if len(edge_weights) != graph.num_edges:
            raise ValueError("edge weight length does not match edge count")
        w = np.asarray(edge_weights.weights, dtype=np.float64)

    batched = cfg.task_kind == TASK_GRAPH
    if batched:
        if x.ndim == 2:
            x = x[None, :, :]
        if x.ndim != 3 or x.shape[1] != graph.node_count:
            raise ValueError(f"graph-task features must be (batch, {graph.node_count}, d)")
    elif x.ndim != 2 or x.shape[0] != graph.node_count:
        raise ValueError(f"node-task features must be ({graph.node_count}, d)")
    if x.shape[-1] != cfg.layer_dims[0]:
        raise ValueError(f"feature dim {x.shape[-1]} != input dim {cfg.layer_dims[0]}")

    deg, coef_self, coef_edge, isp = _norm_coefficients(graph, w)
    cache = ForwardCache(graph, w, deg, coef_self, coef_edge, isp, batched)

    n_conv = cfg.num_layers - 1 if batched else cfg.num_layers
    h = x
    for i in range(n_conv):
        wmat, bias = model.layers[i]
        cache.layer_inputs.append(h)
        if batched:
            p = _unfold(K.aggregate(graph.src, graph.dst, coef_self, coef_edge, _fold(h)), h.shape[0])
        else:
            p = K.aggregate(graph.src, graph.dst, coef_self, coef_edge, np.ascontiguousarray(h))
        z = p @ wmat + bias
        cache.aggregated.append(p)
        cache.preacts.append(z)
        last_conv_is_output = (not batched) and i == n_conv - 1
        h = z if last_conv_is_output else np.maximum(z, 0.0)

    if batched:
        pooled = h.mean(axis=1)
        cache.pooled = pooled
        wmat, bias = model.layers[-1]
        logits = pooled @ wmat + bias
    else:
        logits = h
    cache.logits = logits
    return logits, cache


# ---------------------------------------------------------------------------
# losses


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log softmax probability of the true class."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[-1]):
        raise ValueError("label out of range for logit width")
    lp = log_softmax(logits)
    return float(-lp[np.arange(len(labels)), labels].mean())


def kl_categorical(target: np.ndarray, logits: np.ndarray) -> float:
    """KL(target || softmax(logits)) summed over instance rows."""
    t = np.asarray(target, dtype=np.float64)
    if t.shape != logits.shape:
        raise ValueError("target shape does not match logits")
    lp = log_softmax(logits)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = np.where(t > 0.0, np.log(np.where(t > 0.0, t, 1.0)), 0.0)
    return float(np.sum(t * (lt - lp)))


def _check_target_rows(target: np.ndarray) -> np.ndarray:
    t = np.asarray(target, dtype=np.float64)
    if t.size and (np.any(t < 0.0) or np.any(np.abs(t.sum(axis=-1) - 1.0) > 1e-9)):
        raise ValueError("target rows must be normalized probability vectors")
    return t


# ---------------------------------------------------------------------------
# backward passes


def _aggregation_edge_grad(cache: ForwardCache, upstream, h_in):
    """Gradient of sum(upstream * aggregate(h_in)) w.r.t. the edge weights.

    Includes both the direct coefficient term and the path through the
    weighted degrees (self coefficient and every incident normalization).
    """
    g = cache.graph
    edot = K.edge_dot(g.src, g.dst, upstream, h_in)
    ndot = np.einsum("ij,ij->i", upstream, h_in)
    weighted = cache.coef_edge * edot
    into = np.bincount(g.dst, weights=weighted, minlength=g.node_count)
    outof = np.bincount(g.src, weights=weighted, minlength=g.node_count)
    deg_grad = -ndot / (cache.deg * cache.deg) - (into + outof) / (2.0 * cache.deg)
    return edot * cache.inv_sqrt_pair + deg_grad[g.dst]


def _backprop(model: GnnModel, cache: ForwardCache, dlogits: np.ndarray,
              want_params: bool, want_edges: bool):
    cfg = model.config
    g = cache.graph
    param_grads = [None] * cfg.num_layers
    edge_grad = np.zeros(g.num_edges) if want_edges else None

    if cache.batched:
        wmat, _ = model.layers[-1]
        if want_params:
            param_grads[-1] = (cache.pooled.T @ dlogits, dlogits.sum(axis=0))
        dpooled = dlogits @ wmat.T
        n = g.node_count
        dh = np.repeat(dpooled[:, None, :], n, axis=1) / n
        n_conv = cfg.num_layers - 1
    else:
        dh = dlogits
        n_conv = cfg.num_layers

    for i in range(n_conv - 1, -1, -1):
        wmat, _ = model.layers[i]
        z = cache.preacts[i]
        output_layer = (not cache.batched) and i == n_conv - 1
        dz = dh if output_layer else dh * (z > 0.0)
        if want_params:
            p = cache.aggregated[i]
            if cache.batched:
                gw = np.einsum("bnf,bng->fg", p, dz)
                gb = dz.sum(axis=(0, 1))
            else:
                gw = p.T @ dz
                gb = dz.sum(axis=0)
            param_grads[i] = (gw, gb)
        dp = dz @ wmat.T
        h_in = cache.layer_inputs[i]
        if cache.batched:
            dp2 = _fold(dp)
            h2 = _fold(h_in)
            if want_edges:
                edge_grad += _aggregation_edge_grad(cache, dp2, h2)
            if i > 0:
                dh = _unfold(
                    K.aggregate_transpose(g.src, g.dst, cache.coef_self, cache.coef_edge, dp2),
                    dp.shape[0],
                )
        else:
            dp = np.ascontiguousarray(dp)
            if want_edges:
                edge_grad += _aggregation_edge_grad(cache, dp, np.ascontiguousarray(h_in))
            if i > 0:
                dh = K.aggregate_transpose(g.src, g.dst, cache.coef_self, cache.coef_edge, dp)
    return param_grads, edge_grad


def backward(model: GnnModel, cache: ForwardCache, labels: np.ndarray,
             weight_decay: float = 0.0, rows: Optional[np.ndarray] = None):
    """Exact gradients of mean cross-entropy (+ L2 decay) for every layer.

    ``rows`` restricts the loss to a subset of instances (train split); the
    mean is taken over that subset.
    """
    labels = np.asarray(labels)
    logits = cache.logits
    if rows is None:
        rows = np.arange(logits.shape[0])
    p = softmax(logits[rows])
    dlogits = np.zeros_like(logits)
    d = p.copy()
    d[np.arange(len(rows)), labels[rows]] -= 1.0
    dlogits[rows] = d / len(rows)
    grads, _ = _backprop(model, cache, dlogits, want_params=True, want_edges=False)
    if weight_decay:
        grads = [
            (gw + weight_decay * w, gb + weight_decay * b)
            for (gw, gb), (w, b) in zip(grads, model.layers)
        ]
    return grads


def backward_edge_weights(model: GnnModel, cache: ForwardCache, target: np.ndarray) -> np.ndarray:
    """Gradient of KL(target || softmax(logits)) summed over instances,
    taken w.r.t. every edge weight used in the cached forward pass."""
    t = _check_target_rows(target)
    dlogits = softmax(cache.logits) - t
    _, edge_grad = _backprop(model, cache, dlogits, want_params=False, want_edges=True)
    return edge_grad


# ---------------------------------------------------------------------------
# optimization


class Adam:
    """Plain Adam; decay terms belong to the gradient, not the optimizer."""

    def __init__(self, params, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    weight_decay: float = 0.0
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0.0 or self.epochs < 0:
            raise ValueError("weight_decay and epochs must be non-negative")


@dataclass(frozen=True)
class TrainResult:
    model: GnnModel
    train_accuracy: float
    test_accuracy: float
    losses: tuple


def split_indices(count: int, seed: int, test_fraction: float = 0.2):
    """Seeded 80/20 split; always leaves at least one item per side."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(count)
    n_test = max(1, int(round(count * test_fraction))) if count > 1 else 0
    n_test = min(n_test, count - 1) if count > 1 else 0
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def _accuracy(logits, labels, rows):
    if len(rows) == 0:
        return float("nan")
    pred = logits[rows].argmax(axis=-1)
    return float((pred == np.asarray(labels)[rows]).mean())


def train(config: TrainConfig, gnn_config: GnnConfig, graph: Graph,
          features: np.ndarray, labels: np.ndarray) -> TrainResult:
    """Full-batch Adam training on a seeded 80/20 split; returns a frozen model.

    Raises TrainingDiverged with the offending epoch if the loss goes
    non-finite.
    """
    model = init_model(gnn_config, config.seed)
    labels = np.asarray(labels)
    count = labels.shape[0]
    train_idx, test_idx = split_indices(count, config.seed)
    opt = Adam(model.parameters(), lr=config.learning_rate)
    losses = []
    for epoch in range(config.epochs):
        logits, cache = forward(model, graph, features)
        loss = cross_entropy(logits[train_idx], labels[train_idx])
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        losses.append(loss)
        grads = backward(model, cache, labels, weight_decay=config.weight_decay, rows=train_idx)
        flat = []
        for gw, gb in grads:
            flat.extend((gw, gb))
        opt.step(model.parameters(), flat)
    logits, _ = forward(model, graph, features)
    return TrainResult(
        model=model,
        train_accuracy=_accuracy(logits, labels, train_idx),
        test_accuracy=_accuracy(logits, labels, test_idx),
        losses=tuple(losses),
    )


# ---------------------------------------------------------------------------
# persistence


def save_model(model: GnnModel, path) -> None:
    """Writes the model as deterministic JSON with round-trip-exact floats."""
    doc = {
        "config": {
            "layer_dims": list(model.config.layer_dims),
            "task_kind": model.config.task_kind,
        },
        "layers": [
            {"weights": [[float(x) for x in row] for row in w], "bias": [float(x) for x in b]}
            for w, b in model.layers
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> GnnModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        config = GnnConfig(tuple(doc["config"]["layer_dims"]), doc["config"]["task_kind"])
        layers = [
            (np.asarray(layer["weights"], dtype=np.float64), np.asarray(layer["bias"], dtype=np.float64))
            for layer in doc["layers"]
        ]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"malformed model file {path}: {exc}") from exc
    return GnnModel(config, layers)
