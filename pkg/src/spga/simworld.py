"""Online tracking-by-detection over synthetic feature streams.

Frames are sets of candidate feature vectors rather than image crops. One
candidate per frame comes from the (drifting) target appearance source; the
rest come from background sources: a *hard* cluster that follows the target
at a fixed offset, and several diffuse *easy* clusters far away.

The tracker mirrors the usual online loop: train on frame 0, pick the
highest-scoring candidate in every later frame, collect samples around
confident predictions, and retrain every ``update_period`` frames or as soon
as the winning score drops below ``failure_threshold``.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field, fields

import numpy as np

from . import gsl
from .classifier import ARCHITECTURES, SPSG_POLICIES, ModelParams, SpsgSettings, TrainConfig, forward_batch, init_params, train
from .spsg import make_rng

__all__ = [
    "GaussianSource",
    "WorldConfig",
    "PRESCRIBED_WORLDS",
    "TrackerConfig",
    "Sequence",
    "TrackerState",
    "FrameResult",
    "TrackRecord",
    "make_sequence",
    "collect_samples",
    "initialize",
    "detect",
    "update",
    "run",
]


@dataclass(frozen=True)
class GaussianSource:
    """Independent normal components whose mean moves by ``drift`` per frame."""

    true_mean: np.ndarray
    true_std: np.ndarray
    drift: np.ndarray

    def __post_init__(self):
        for name in ("true_mean", "true_std", "drift"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not np.all(self.true_std > 0):
            raise ValueError("source std components must be > 0")

    def mean_at(self, frame: int) -> np.ndarray:
        return self.true_mean + frame * self.drift

    def sample(self, rng, size, frame: int = 0) -> np.ndarray:
        return self.mean_at(frame) + self.true_std * rng.standard_normal((size, self.true_mean.size))


@dataclass(frozen=True)
class WorldConfig:
    dim: int = 16
    length: int = 40
    n_candidates: int = 256
    target_std: float = 0.1
    drift: float = 0.08
    jitter: float = 0.02
    hard_offset: float = 1.0
    hard_std: float = 0.3
    hard_fraction: float = 0.1
    easy_clusters: int = 4
    easy_radius: float = 4.0
    easy_std: float = 0.5

    def __post_init__(self):
        if self.n_candidates < 2:
            raise ValueError("n_candidates must be > 1")
        if self.length < 1 or self.dim < 1:
            raise ValueError("length and dim must be >= 1")
        if not 0.0 <= self.hard_fraction <= 1.0:
            raise ValueError("hard_fraction must lie in [0, 1]")
        if self.target_std <= 0 or self.hard_std <= 0 or self.easy_std <= 0:
            raise ValueError("source stds must be > 0")
        if self.easy_clusters < 1 and self.hard_fraction < 1.0:
            raise ValueError("need at least one easy cluster")


# The three worlds the ablation is judged on. The default world drifts and
# keeps a distractor cluster one unit from the target.
PRESCRIBED_WORLDS = {
    "drifting-hard-negative": WorldConfig(),
    "stationary": WorldConfig(drift=0.0),
    "noisy-appearance": WorldConfig(target_std=0.2, hard_offset=1.5),
}


@dataclass(frozen=True)
class TrackerConfig:
    loss_mode: str = "ce"
    spsg: bool = False
    n: int = 32
    m: int = 64
    n_neg: int = 96
    alpha: float = 0.05
    epsilon: float = 0.1
    weight_mode: str = "raw"
    spsg_policy: str = "per-iteration"
    init_iterations: int = 30
    update_iterations: int = 10
    update_samples: int = 250
    update_period: int = 10
    updates: bool = True
    failure_threshold: float = 0.5
    positive_fraction: float = 0.2
    positive_spread: float = 0.1
    architecture: str = "hidden"
    hidden: int = 32
    # the classifier's own default (0.01) leaves a hidden head nearly
    # untrained after 30 steps
    init_scale: float = 0.25
    learning_rate: float = 0.3
    momentum: float = 0.9

    def __post_init__(self):
        gsl.LossMode(self.loss_mode)
        gsl.WeightMode(self.weight_mode)
        if self.n < 2 or self.n_neg < 1 or self.m < 0:
            raise ValueError("need n >= 2, n_neg >= 1, m >= 0")
        if self.update_period < 1:
            raise ValueError("update_period must be >= 1")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError("positive_fraction must lie in (0, 1)")
        if self.spsg_policy not in SPSG_POLICIES:
            raise ValueError(f"spsg_policy must be one of {SPSG_POLICIES}")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}")
        if not 0.0 < self.alpha <= 1.0 or self.epsilon <= 0:
            raise ValueError("need 0 < alpha <= 1 and epsilon > 0")

    def train_config(self, iterations: int, seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            iterations=iterations,
            loss_mode=self.loss_mode,
            epsilon=self.epsilon,
            weight_mode=self.weight_mode,
            seed=seed,
            batch_pos=self.n,
            batch_neg=self.n_neg,
        )

    def augmentor(self) -> SpsgSettings | None:
        if not self.spsg or self.m == 0:
            return None
        return SpsgSettings(self.alpha, self.m, self.spsg_policy)

    @property
    def store_capacity(self) -> int:
        return self.update_samples

    @property
    def positives_per_frame(self) -> int:
        return max(1, round(self.update_samples * self.positive_fraction))

    @property
    def negatives_per_frame(self) -> int:
        return max(1, self.update_samples - self.positives_per_frame)


@dataclass
class Sequence:
    frames: list
    ground_truth: np.ndarray
    target_means: np.ndarray
    config: WorldConfig

    def __len__(self):
        return len(self.frames)


def _unit(rng, d):
    u = rng.standard_normal(d)
    return u / np.linalg.norm(u)


def make_sequence(world: WorldConfig, seed) -> Sequence:
    """Deterministic synthetic sequence for ``(world, seed)``.

    The target mean moves linearly along a random direction at ``drift`` per
    frame plus a random walk with step ``jitter``.
    """
    rng = make_rng(seed)
    d = world.dim
    target0 = rng.standard_normal(d)
    drift_vec = world.drift * _unit(rng, d)
    hard_dir = _unit(rng, d)
    easy_centers = target0 + world.easy_radius * np.array(
        [_unit(rng, d) for _ in range(max(world.easy_clusters, 1))]
    )
    source = GaussianSource(target0, np.full(d, world.target_std), drift_vec)

    steps = world.jitter * rng.standard_normal((world.length, d))
    steps[0] = 0.0
    walk = np.cumsum(steps, axis=0)

    n_bg = world.n_candidates - 1
    n_hard = int(round(world.hard_fraction * n_bg))
    n_easy = n_bg - n_hard

    frames, truth, means = [], np.empty(world.length, dtype=np.int64), np.empty((world.length, d))
    for t in range(world.length):
        mu = source.mean_at(t) + walk[t]
        means[t] = mu
        target = mu + world.target_std * rng.standard_normal(d)
        hard = mu + world.hard_offset * hard_dir + world.hard_std * rng.standard_normal((n_hard, d))
        which = rng.integers(0, easy_centers.shape[0], n_easy)
        easy = easy_centers[which] + world.easy_std * rng.standard_normal((n_easy, d))
        cands = np.vstack([hard, easy])
        gt = int(rng.integers(0, world.n_candidates))
        frames.append(np.insert(cands, gt, target, axis=0))
        truth[t] = gt
    return Sequence(frames, truth, means, world)


@dataclass
class TrackerState:
    model: ModelParams
    capacity: int
    frames_since_update: int = 0
    failure_flag: bool = False
    positives: deque = field(default_factory=deque)
    negatives: deque = field(default_factory=deque)
    n_updates: int = 0

    def store(self, pos, neg):
        for row in pos:
            self.positives.append(row)
        for row in neg:
            self.negatives.append(row)
        while len(self.positives) > self.capacity:
            self.positives.popleft()
        while len(self.negatives) > self.capacity:
            self.negatives.popleft()

    def store_arrays(self):
        if not self.positives or not self.negatives:
            raise gsl.MissingClassError("sample store is empty")
        return np.array(self.positives), np.array(self.negatives)


def collect_samples(frame, chosen: int, cfg: TrackerConfig, rng):
    """Samples "around" a predicted candidate, in feature space.

    Positives are the chosen vector plus isotropic noise of scale
    ``positive_spread``; negatives are drawn without replacement from the
    frame's other candidates.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[0] == 0:
        raise ValueError("frame has no candidates")
    center = frame[chosen]
    pos = center + cfg.positive_spread * rng.standard_normal((cfg.positives_per_frame, frame.shape[1]))
    others = np.delete(frame, chosen, axis=0)
    if others.shape[0] == 0:
        return pos, others
    k = min(cfg.negatives_per_frame, others.shape[0])
    neg = others[rng.choice(others.shape[0], size=k, replace=False)]
    return pos, neg


def _train_seed(rng) -> int:
    return int(rng.integers(0, 2**63 - 1))


def initialize(seq: Sequence, cfg: TrackerConfig, rng) -> TrackerState:
    """Train the initial model on frame 0's labelled target."""
    if len(seq) == 0 or seq.frames[0].shape[0] == 0:
        raise ValueError("sequence has no first frame to initialize from")
    frame0 = seq.frames[0]
    model = init_params(
        cfg.architecture, frame0.shape[1], cfg.hidden, seed=_train_seed(rng), scale=cfg.init_scale
    )
    state = TrackerState(model, cfg.store_capacity)
    state.store(*collect_samples(frame0, int(seq.ground_truth[0]), cfg, rng))
    pos, neg = state.store_arrays()
    state.model = train(
        model, pos, neg, cfg.train_config(cfg.init_iterations, _train_seed(rng)), cfg.augmentor()
    )
    return state


def detect(state: TrackerState, frame):
    """Index and probability of the highest-scoring candidate.

    The argmax runs on logits (lowest index wins ties), so saturated
    probabilities never produce artificial ties.
    """
    logits = forward_batch(state.model, frame)
    idx = int(np.argmax(logits))
    return idx, float(gsl.sigmoid(logits[idx]))


def update(state: TrackerState, recent, cfg: TrackerConfig, rng) -> TrackerState:
    """Refresh the store from confident recent predictions and retrain.

    ``recent`` is an iterable of ``(frame, chosen_index, score)``; frames
    whose score fell below the failure threshold contribute no samples.
    """
    for frame, chosen, score in recent:
        if score >= cfg.failure_threshold:
            state.store(*collect_samples(frame, chosen, cfg, rng))
    pos, neg = state.store_arrays()
    state.model = train(
        state.model,
        pos,
        neg,
        cfg.train_config(cfg.update_iterations, _train_seed(rng)),
        cfg.augmentor(),
    )
    state.frames_since_update = 0
    state.failure_flag = False
    state.n_updates += 1
    return state


@dataclass(frozen=True)
class FrameResult:
    frame: int
    chosen: int
    truth: int
    correct: bool
    score: float
    updated: bool


@dataclass
class TrackRecord:
    frames: list
    n_updates: int = 0

    @property
    def success_rate(self) -> float:
        if not self.frames:
            return 0.0
        return sum(r.correct for r in self.frames) / len(self.frames)

    @property
    def chosen(self):
        return [r.chosen for r in self.frames]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["frame", "chosen", "truth", "correct", "score"])
        for r in self.frames:
            w.writerow([r.frame, r.chosen, r.truth, int(r.correct), repr(r.score)])
        return buf.getvalue()


def run(seq: Sequence, cfg: TrackerConfig, seed) -> TrackRecord:
    """Track through ``seq``; frame 0 is the given initialization and is not scored."""
    rng = make_rng(seed)
    state = initialize(seq, cfg, rng)
    results, recent = [], []
    for t in range(1, len(seq)):
        frame = seq.frames[t]
        idx, score = detect(state, frame)
        recent.append((frame, idx, score))
        state.frames_since_update += 1
        state.failure_flag = score < cfg.failure_threshold
        updated = False
        if cfg.updates and (state.failure_flag or state.frames_since_update >= cfg.update_period):
            try:
                update(state, recent, cfg, rng)
                updated = True
            except gsl.MissingClassError:
                state.frames_since_update = min(state.frames_since_update, cfg.update_period)
            recent = []
        elif not cfg.updates:
            recent = []
            state.frames_since_update = 0
        truth = int(seq.ground_truth[t])
        results.append(FrameResult(t, idx, truth, idx == truth, score, updated))
    return TrackRecord(results, state.n_updates)


def config_items(obj):
    """``(name, value)`` pairs of a config dataclass, in declaration order."""
    return [(f.name, getattr(obj, f.name)) for f in fields(obj)]
