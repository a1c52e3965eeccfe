"""Small binary classifier heads with hand-written gradients.

Two architectures share one flat parameter vector layout:

* ``linear``: ``x = w . f + b``
* ``hidden``: ``x = v . relu(W f + c) + b`` with ``h`` hidden units

``train`` runs full-batch SGD with momentum for a fixed number of
iterations, optionally enlarging the positive set with generated feature
vectors before every step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import gsl, spsg

__all__ = [
    "ModelParams",
    "TrainConfig",
    "SpsgSettings",
    "init_params",
    "forward",
    "forward_batch",
    "backward",
    "batch_loss",
    "train",
]

ARCHITECTURES = ("linear", "hidden")
SPSG_POLICIES = ("per-iteration", "once")


@dataclass
class ModelParams:
    architecture: str
    input_dim: int
    theta: np.ndarray
    hidden: int = 0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.architecture == "linear":
            self.hidden = 0
        elif self.hidden < 1:
            raise ValueError("hidden architecture needs hidden >= 1")
        self.theta = np.asarray(self.theta, dtype=np.float64).ravel()
        expected = param_count(self.architecture, self.input_dim, self.hidden)
        if self.theta.size != expected:
            raise ValueError(f"expected {expected} parameters, got {self.theta.size}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("non-finite parameters")

    def unpack(self, theta=None):
        """Views ``(W, c, v, b)`` for hidden or ``(w, b)`` for linear."""
        t = self.theta if theta is None else theta
        d, h = self.input_dim, self.hidden
        if self.architecture == "linear":
            return t[:d], t[d:d + 1]
        W = t[: h * d].reshape(h, d)
        c = t[h * d : h * d + h]
        v = t[h * d + h : h * d + 2 * h]
        b = t[h * d + 2 * h :]
        return W, c, v, b

    def copy(self) -> "ModelParams":
        return replace(self, theta=self.theta.copy())

    def to_json(self) -> str:
        return json.dumps(
            {
                "architecture": self.architecture,
                "dims": {"input": self.input_dim, "hidden": self.hidden},
                "parameters": self.theta.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        obj = json.loads(text)
        return cls(
            obj["architecture"],
            int(obj["dims"]["input"]),
            np.array(obj["parameters"], dtype=np.float64),
            int(obj["dims"].get("hidden", 0)),
        )


def param_count(architecture, input_dim, hidden=0):
    if architecture == "linear":
        return input_dim + 1
    return hidden * input_dim + 2 * hidden + 1


def init_params(architecture, input_dim, hidden=32, seed=0, scale=0.01) -> ModelParams:
    """Weights uniform in ``[-scale, scale]``, biases zero."""
    rng = spsg.make_rng(seed)
    h = hidden if architecture == "hidden" else 0
    theta = np.zeros(param_count(architecture, input_dim, h))
    if architecture == "linear":
        theta[:input_dim] = rng.uniform(-scale, scale, input_dim)
    else:
        theta[: h * input_dim] = rng.uniform(-scale, scale, h * input_dim)
        theta[h * input_dim + h : h * input_dim + 2 * h] = rng.uniform(-scale, scale, h)
    return ModelParams(architecture, input_dim, theta, h)


def _as_batch(params, features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ValueError(f"expected features of width {params.input_dim}, got shape {X.shape}")
    return X


def forward_batch(params: ModelParams, features) -> np.ndarray:
    """Logits for every row of ``features``."""
    X = _as_batch(params, features)
    if params.architecture == "linear":
        w, b = params.unpack()
        return X @ w + b[0]
    W, c, v, b = params.unpack()
    return np.maximum(X @ W.T + c, 0.0) @ v + b[0]


def forward(params: ModelParams, features):
    """Score one feature vector; returns ``(logit, probability)``."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("forward takes a single feature vector")
    x = float(forward_batch(params, f)[0])
    return x, gsl.sigmoid(x)


def backward(params: ModelParams, features, upstream) -> np.ndarray:
    """Gradient of the batch-mean loss w.r.t. the flat parameter vector.

    ``upstream[i]`` is d loss_i / d logit_i.
    """
    X = _as_batch(params, features)
    up = np.asarray(upstream, dtype=np.float64).ravel()
    if up.size != X.shape[0]:
        raise ValueError(f"{up.size} upstream gradients for {X.shape[0]} samples")
    up = up / X.shape[0]
    grad = np.empty_like(params.theta)
    if params.architecture == "linear":
        d = params.input_dim
        grad[:d] = up @ X
        grad[d] = up.sum()
        return grad
    W, c, v, b = params.unpack()
    gW, gc, gv, gb = params.unpack(grad)
    pre = X @ W.T + c
    act = np.maximum(pre, 0.0)
    gv[:] = up @ act
    gb[0] = up.sum()
    dpre = np.outer(up, v) * (pre > 0)
    gW[:] = dpre.T @ X
    gc[:] = dpre.sum(axis=0)
    return grad


def batch_loss(params, features, labels, weights=None) -> float:
    """Mean (optionally weighted) cross-entropy of the model on a batch."""
    batch = gsl.LabeledBatch(forward_batch(params, features), labels)
    w = gsl.ClassWeights.ones(batch) if weights is None else weights
    return gsl.gsl_loss(batch, w)[0]


@dataclass(frozen=True)
class SpsgSettings:
    """Positive augmentation applied inside ``train``.

    ``policy`` is ``"per-iteration"`` (fresh intervals and draws on every
    step's positives) or ``"once"`` (generate once from all positives passed
    to ``train``, then reuse).
    """

    alpha: float = 0.05
    m: int = 64
    policy: str = "per-iteration"

    def __post_init__(self):
        if self.policy not in SPSG_POLICIES:
            raise ValueError(f"unknown spsg policy {self.policy!r}")
        if self.m < 0:
            raise ValueError("m must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    iterations: int = 30
    loss_mode: str = "ce"
    epsilon: float = 0.1
    weight_mode: str = "raw"
    seed: int = 0
    # per-iteration subsample sizes; None uses every row
    batch_pos: int | None = 32
    batch_neg: int | None = 96

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        gsl.LossMode(self.loss_mode)
        gsl.WeightMode(self.weight_mode)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class TrainMetrics:
    rows: list = field(default_factory=list)

    def append(self, iteration, loss, weights: gsl.ClassWeights, labels):
        w = weights.weights
        self.rows.append(
            {
                "iteration": iteration,
                "loss": loss,
                "pos_weight_mean": float(w[labels == 1].mean()),
                "neg_weight_mean": float(w[labels == 0].mean()),
            }
        )


def _subsample(rng, X, k):
    if k is None or k >= X.shape[0]:
        return X
    return X[rng.choice(X.shape[0], size=k, replace=False)]


def train(
    params: ModelParams,
    positives,
    negatives,
    cfg: TrainConfig,
    augmentor: SpsgSettings | None = None,
    metrics: TrainMetrics | None = None,
) -> ModelParams:
    """Fit ``params`` on the two classes; returns new parameters.

    Every iteration subsamples ``cfg.batch_pos`` positives and
    ``cfg.batch_neg`` negatives, optionally appends generated positives,
    computes the loss-mode weights on the current logits and takes one
    SGD-with-momentum step on the full assembled batch.
    """
    P = np.asarray(positives, dtype=np.float64)
    N = np.asarray(negatives, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] == 0 or N.ndim != 2 or N.shape[0] == 0:
        raise gsl.MissingClassError("train needs at least one positive and one negative")
    params = params.copy()
    rng = spsg.make_rng(cfg.seed)
    velocity = np.zeros_like(params.theta)

    fixed_generated = None
    if augmentor is not None and augmentor.m > 0 and augmentor.policy == "once":
        fixed_generated = spsg.generate(
            spsg.confidence_intervals(P, augmentor.alpha), augmentor.m, rng=rng
        ).data

    for it in range(cfg.iterations):
        pos = _subsample(rng, P, cfg.batch_pos)
        neg = _subsample(rng, N, cfg.batch_neg)
        if augmentor is not None and augmentor.m > 0:
            if fixed_generated is not None:
                pos = np.vstack([pos, fixed_generated])
            elif pos.shape[0] >= 2:
                pos = spsg.augment(pos, augmentor.alpha, augmentor.m, rng=rng)
        X = np.vstack([pos, neg])
        y = np.concatenate([np.ones(pos.shape[0], np.int8), np.zeros(neg.shape[0], np.int8)])

        batch = gsl.LabeledBatch(forward_batch(params, X), y)
        weights = gsl.loss_weights(batch, cfg.loss_mode, cfg.epsilon, cfg.weight_mode)
        if metrics is not None:
            metrics.append(it, gsl.gsl_loss(batch, weights)[0], weights, y)
        grad = backward(params, X, gsl.gsl_backward(batch, weights))
        velocity = cfg.momentum * velocity - cfg.learning_rate * grad
        params.theta = params.theta + velocity
    return params
