"""Statistical positive sample generation in feature space.

Each feature component is treated as an independent normal population. A
Student's t confidence interval of its mean is estimated from ``n`` positive
feature vectors, and new vectors are drawn uniformly inside those intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tdist import TQuery, t_two_sided_critical

__all__ = [
    "RNG_ALGORITHM",
    "InsufficientSamplesError",
    "ComponentInterval",
    "IntervalSet",
    "GeneratedFeatures",
    "make_rng",
    "as_feature_matrix",
    "component_stats",
    "confidence_intervals",
    "generate",
    "augment",
]

#: Identifier of the bit generator behind every seeded draw in this package.
RNG_ALGORITHM = "numpy.PCG64"


class InsufficientSamplesError(ValueError):
    """Raised when fewer than two feature vectors are supplied."""


def make_rng(seed) -> np.random.Generator:
    """Seeded generator. ``seed`` may be an int or a ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def as_feature_matrix(f) -> np.ndarray:
    """Validate and return an ``n x d`` float64 array with ``n >= 2``."""
    data = np.asarray(f, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {data.shape}")
    n, d = data.shape
    if d < 1:
        raise ValueError("feature matrix needs at least one component")
    if n < 2:
        raise InsufficientSamplesError(
            f"need at least 2 feature vectors for a t interval, got {n}"
        )
    if not np.all(np.isfinite(data)):
        raise ValueError("feature matrix contains non-finite entries")
    return data


@dataclass(frozen=True)
class ComponentInterval:
    mean: float
    std: float
    lower: float
    upper: float


@dataclass(frozen=True)
class IntervalSet:
    """Per-component confidence intervals, stored column-wise.

    Indexing yields :class:`ComponentInterval` records.
    """

    mean: np.ndarray
    std: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    critical_value: float
    n: int
    alpha: float

    def __len__(self):
        return self.mean.shape[0]

    def __getitem__(self, j) -> ComponentInterval:
        return ComponentInterval(
            float(self.mean[j]), float(self.std[j]), float(self.lower[j]), float(self.upper[j])
        )

    def __iter__(self):
        return (self[j] for j in range(len(self)))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def records(self):
        """One dict per component, for JSON-lines dumps."""
        return [
            {
                "component": j,
                "mean": float(self.mean[j]),
                "std": float(self.std[j]),
                "lower": float(self.lower[j]),
                "upper": float(self.upper[j]),
            }
            for j in range(len(self))
        ]


@dataclass(frozen=True)
class GeneratedFeatures:
    data: np.ndarray
    seed: int | None
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def m(self) -> int:
        return self.data.shape[0]


def component_stats(f):
    """Per-component sample mean and standard deviation (``n - 1`` denominator).

    Returns
    -------
    mean, std : ndarray of shape (d,)
    """
    data = as_feature_matrix(f)
    mean = data.mean(axis=0)
    std = data.std(axis=0, ddof=1)
    # constant columns: the summed mean can be off by an ulp, pin it
    const = np.all(data == data[0], axis=0)
    mean[const] = data[0, const]
    std[const] = 0.0
    return mean, std


def confidence_intervals(f, alpha: float = 0.05) -> IntervalSet:
    """t confidence interval of the mean of every component.

    A single critical value is shared by all components since it only depends
    on ``alpha`` and ``n - 1``.
    """
    data = as_feature_matrix(f)
    n = data.shape[0]
    t_star = t_two_sided_critical(TQuery(alpha, n - 1))
    mean, std = component_stats(data)
    half = t_star * std / math.sqrt(n)
    return IntervalSet(
        mean=mean,
        std=std,
        lower=mean - half,
        upper=mean + half,
        critical_value=t_star,
        n=n,
        alpha=alpha,
    )


def generate(intervals: IntervalSet, m: int, seed=None, rng=None) -> GeneratedFeatures:
    """Draw ``m`` vectors with entry ``(v, j)`` uniform on ``[lower_j, upper_j]``.

    Either ``seed`` or an existing ``rng`` must be given. Draws are clipped to
    the closed interval so rounding in ``lower + width * u`` can never step
    outside it.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if len(intervals) == 0:
        raise ValueError("no intervals to sample from")
    if rng is None:
        if seed is None:
            raise ValueError("generate needs a seed or an rng")
        rng = make_rng(seed)
    lower, upper = intervals.lower, intervals.upper
    u = rng.random((m, len(intervals)))
    z = lower + (upper - lower) * u
    np.clip(z, lower, upper, out=z)
    return GeneratedFeatures(z, seed if isinstance(seed, int) else None)


def augment(f, alpha: float = 0.05, m: int = 64, seed=None, rng=None) -> np.ndarray:
    """Originals followed by ``m`` generated vectors (``n + m`` rows)."""
    data = as_feature_matrix(f)
    if m == 0:
        return data.copy()
    gen = generate(confidence_intervals(data, alpha), m, seed=seed, rng=rng)
    return np.vstack([data, gen.data])
