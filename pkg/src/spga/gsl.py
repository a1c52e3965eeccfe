"""Gradient sensitive loss.

Cross-entropy on sigmoid outputs, re-weighted per sample by the inverse of
its gradient density. Densities count the samples whose logit gradient falls
in a half-open window of width ``epsilon`` around the sample's own gradient;
by default they are computed separately within each class. A pooled scope
(density over the whole batch, GHM style) and plain CE are kept for ablation.

Weights are recomputed from the current batch and treated as constants in
the backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels

__all__ = [
    "PROB_CLAMP",
    "MissingClassError",
    "Scope",
    "WeightMode",
    "LossMode",
    "LabeledBatch",
    "DensityEstimate",
    "ClassWeights",
    "sigmoid",
    "ce_loss",
    "logit_gradient",
    "window_counts",
    "gradient_density",
    "class_weights",
    "loss_weights",
    "gsl_loss",
    "gsl_backward",
]

PROB_CLAMP = 1e-7


class MissingClassError(ValueError):
    """A batch lacks positives or negatives where both are required."""


class Scope(str, Enum):
    PER_CLASS = "per-class"
    POOLED = "pooled"


class WeightMode(str, Enum):
    RAW = "raw"
    MEAN_NORMALIZED = "mean-normalized"


class LossMode(str, Enum):
    CE = "ce"
    GSL = "gsl"
    GHM = "ghm"


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LabeledBatch:
    logits: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        logits = np.atleast_1d(np.asarray(self.logits, dtype=np.float64))
        labels = np.atleast_1d(np.asarray(self.labels))
        if logits.ndim != 1 or logits.shape != labels.shape:
            raise ValueError(
                f"logits and labels must be equal-length 1-D, got {logits.shape} and {labels.shape}"
            )
        if logits.size == 0:
            raise ValueError("empty batch")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels.astype(np.int8))

    @classmethod
    def from_probabilities(cls, probabilities, labels):
        p = np.clip(np.asarray(probabilities, dtype=np.float64), PROB_CLAMP, 1 - PROB_CLAMP)
        return cls(np.log(p) - np.log1p(-p), labels)

    def __len__(self):
        return self.logits.size

    @property
    def probabilities(self) -> np.ndarray:
        return sigmoid(self.logits)

    @property
    def gradients(self) -> np.ndarray:
        return logit_gradient(self.probabilities, self.labels)

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def n_neg(self) -> int:
        return len(self) - self.n_pos


@dataclass(frozen=True)
class DensityEstimate:
    densities: np.ndarray
    counts: np.ndarray
    epsilon: float
    scope: Scope


@dataclass(frozen=True)
class ClassWeights:
    weights: np.ndarray
    n_pos: int
    n_neg: int
    mode: WeightMode
    density: DensityEstimate | None = None

    def __len__(self):
        return self.weights.size

    @classmethod
    def ones(cls, batch: LabeledBatch) -> "ClassWeights":
        return cls(np.ones(len(batch)), batch.n_pos, batch.n_neg, WeightMode.RAW)


def ce_loss(p, y):
    """Binary cross-entropy of probability ``p`` against label ``y``.

    ``p`` is clamped to ``[1e-7, 1 - 1e-7]`` first.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    out = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return out if out.ndim else float(out)


def logit_gradient(p, y):
    """d CE / d logit: ``p - 1`` for positives, ``p`` for negatives."""
    out = np.asarray(p, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return out if out.ndim else float(out)


def window_counts(gradients, epsilon: float) -> np.ndarray:
    """Integer count of ``k`` with ``g_i - eps/2 <= g_k < g_i + eps/2`` (self included).

    Sorts once and sweeps two pointers; the window edges are monotone in
    ``g_i`` even under rounding, so the sweep reproduces the direct count
    exactly.
    """
    g = np.asarray(gradients, dtype=np.float64).ravel()
    if g.size == 0:
        raise ValueError("gradient_density needs at least one gradient")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    order = np.argsort(g, kind="stable")
    sorted_counts = kernels.window_counts(np.ascontiguousarray(g[order]), epsilon / 2.0)
    counts = np.empty_like(sorted_counts)
    counts[order] = sorted_counts
    return counts


def gradient_density(gradients, epsilon: float) -> np.ndarray:
    """Gradient density: window count divided by ``epsilon``."""
    return window_counts(gradients, epsilon) / epsilon


def class_weights(
    batch: LabeledBatch,
    epsilon: float = 0.1,
    scope: Scope | str = Scope.PER_CLASS,
    mode: WeightMode | str = WeightMode.RAW,
) -> ClassWeights:
    """Per-sample weights ``N_class / D``.

    Parameters
    ----------
    batch : LabeledBatch
    epsilon : float
        Density window width.
    scope : {"per-class", "pooled"}
        ``per-class`` counts only same-label samples and uses the class size
        as numerator; ``pooled`` counts over the whole batch and uses ``N``.
    mode : {"raw", "mean-normalized"}
        ``mean-normalized`` rescales each class so its weights average to 1.

    Raises
    ------
    MissingClassError
        Per-class scope on a batch without both labels.
    """
    scope = Scope(scope)
    mode = WeightMode(mode)
    g = batch.gradients
    labels = batch.labels
    counts = np.empty(len(batch), dtype=np.int64)
    numer = np.empty(len(batch), dtype=np.float64)

    if scope is Scope.PER_CLASS:
        if batch.n_pos == 0 or batch.n_neg == 0:
            raise MissingClassError(
                f"per-class weights need both classes (n_pos={batch.n_pos}, n_neg={batch.n_neg})"
            )
        for cls in (1, 0):
            idx = np.flatnonzero(labels == cls)
            counts[idx] = window_counts(g[idx], epsilon)
            numer[idx] = idx.size
    else:
        counts[:] = window_counts(g, epsilon)
        numer[:] = len(batch)

    # N / (count / eps) evaluated as eps * (N / count): an all-identical class
    # then yields exactly eps
    weights = epsilon * (numer / counts)
    if mode is WeightMode.MEAN_NORMALIZED:
        for cls in (1, 0):
            idx = labels == cls
            if idx.any():
                weights[idx] = weights[idx] / weights[idx].mean()

    density = DensityEstimate(counts / epsilon, counts, epsilon, scope)
    return ClassWeights(weights, batch.n_pos, batch.n_neg, mode, density)


def loss_weights(
    batch: LabeledBatch,
    loss_mode: LossMode | str,
    epsilon: float = 0.1,
    weight_mode: WeightMode | str = WeightMode.RAW,
) -> ClassWeights:
    """Weights for a loss mode: ones for CE, per-class for GSL, pooled for GHM."""
    loss_mode = LossMode(loss_mode)
    if loss_mode is LossMode.CE:
        return ClassWeights.ones(batch)
    scope = Scope.PER_CLASS if loss_mode is LossMode.GSL else Scope.POOLED
    return class_weights(batch, epsilon, scope, weight_mode)


def _check_aligned(batch, weights):
    if len(weights) != len(batch):
        raise ValueError(f"{len(weights)} weights for a batch of {len(batch)}")


def gsl_loss(batch: LabeledBatch, weights: ClassWeights):
    """Weighted cross-entropy.

    Returns
    -------
    total : float
        Mean of the per-sample losses.
    per_sample : ndarray
    """
    _check_aligned(batch, weights)
    per_sample = weights.weights * ce_loss(batch.probabilities, batch.labels)
    return float(per_sample.mean()), per_sample


def gsl_backward(batch: LabeledBatch, weights: ClassWeights) -> np.ndarray:
    """Per-sample ``d loss_i / d logit_i = lambda_i (p_i - y_i)`` with lambda held fixed."""
    _check_aligned(batch, weights)
    return weights.weights * batch.gradients
