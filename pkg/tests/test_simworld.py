from dataclasses import replace

import numpy as np
import pytest

from spga import gsl
from spga.classifier import ModelParams, init_params
from spga.simworld import (
    PRESCRIBED_WORLDS,
    GaussianSource,
    Sequence,
    TrackerConfig,
    TrackerState,
    TrackRecord,
    WorldConfig,
    collect_samples,
    detect,
    initialize,
    make_sequence,
    run,
    update,
)
from spga.spsg import make_rng

# far-apart clusters and a tight target: any sane classifier separates them
SEPARABLE = WorldConfig(
    dim=8, length=25, target_std=0.05, drift=0.0, jitter=0.0, hard_offset=6.0, hard_std=0.2, easy_std=0.2
)
FAST = TrackerConfig(init_iterations=20, update_iterations=5)


def test_gaussian_source_rejects_zero_std():
    with pytest.raises(ValueError):
        GaussianSource(np.zeros(3), np.array([1.0, 0.0, 1.0]), np.zeros(3))


def test_source_drift_is_linear():
    s = GaussianSource(np.zeros(2), np.ones(2), np.array([0.5, -1.0]))
    np.testing.assert_array_equal(s.mean_at(4), [2.0, -4.0])


class TestSequence:
    def test_candidate_count(self):
        seq = make_sequence(WorldConfig(length=3), 0)
        assert all(f.shape == (256, 16) for f in seq.frames)

    def test_one_truth_per_frame(self):
        seq = make_sequence(WorldConfig(length=6), 1)
        assert len(seq.ground_truth) == len(seq) == 6
        assert np.all((0 <= seq.ground_truth) & (seq.ground_truth < 256))

    def test_truth_is_the_target_draw(self):
        w = WorldConfig(length=5, target_std=0.01)
        seq = make_sequence(w, 2)
        for t in range(5):
            dist = np.linalg.norm(seq.frames[t] - seq.target_means[t], axis=1)
            assert int(np.argmin(dist)) == seq.ground_truth[t]

    def test_deterministic(self):
        a, b = make_sequence(WorldConfig(length=4), 7), make_sequence(WorldConfig(length=4), 7)
        for fa, fb in zip(a.frames, b.frames):
            assert fa.tobytes() == fb.tobytes()
        assert np.array_equal(a.ground_truth, b.ground_truth)

    def test_static_world_has_fixed_target_mean(self):
        seq = make_sequence(WorldConfig(length=10, drift=0.0, jitter=0.0), 3)
        assert np.all(seq.target_means == seq.target_means[0])

    def test_drift_moves_mean(self):
        seq = make_sequence(WorldConfig(length=11, drift=0.1, jitter=0.0), 3)
        step = np.linalg.norm(seq.target_means[10] - seq.target_means[0])
        assert step == pytest.approx(1.0, abs=1e-12)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            WorldConfig(n_candidates=1)
        with pytest.raises(ValueError):
            WorldConfig(target_std=0.0)
        with pytest.raises(ValueError):
            TrackerConfig(loss_mode="focal")
        with pytest.raises(ValueError):
            TrackerConfig(spsg_policy="never")

    def test_prescribed_worlds(self):
        assert len(PRESCRIBED_WORLDS) == 3
        assert PRESCRIBED_WORLDS["drifting-hard-negative"].drift > 0


class TestDetect:
    def _state(self, theta, d=2):
        return TrackerState(ModelParams("linear", d, np.asarray(theta, float)), capacity=10)

    def test_single_candidate(self):
        assert detect(self._state([1.0, -1.0, 0.0]), np.array([[0.3, 0.4]]))[0] == 0

    def test_tie_goes_to_lowest_index(self):
        frame = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [1.0, 1.0]])
        idx, score = detect(self._state([1.0, 1.0, 0.0]), frame)
        assert idx == 1  # [1,1] and [2,0] and the second [1,1] all score 2
        assert score == pytest.approx(gsl.sigmoid(2.0))

    def test_monotone_rescaling(self, rng):
        frame = rng.normal(size=(50, 4))
        theta = rng.normal(size=5)
        a = detect(self._state(theta, 4), frame)[0]
        # scaling all weights and bias by 3 scales logits and keeps the order
        b = detect(self._state(3 * theta, 4), frame)[0]
        assert a == b == int(np.argmax(frame @ theta[:4]))


class TestStore:
    def test_fifo_cap(self, rng):
        s = TrackerState(init_params("linear", 2), capacity=5)
        s.store(np.arange(8.0).reshape(4, 2), np.zeros((3, 2)))
        s.store(np.arange(8.0, 12.0).reshape(2, 2), np.ones((4, 2)))
        pos, neg = s.store_arrays()
        assert pos.shape == (5, 2) and neg.shape == (5, 2)
        assert pos[0].tolist() == [2.0, 3.0]  # oldest evicted first
        assert neg.sum() == 8

    def test_empty_store(self):
        with pytest.raises(gsl.MissingClassError):
            TrackerState(init_params("linear", 2), capacity=5).store_arrays()

    def test_update_with_empty_store(self):
        s = TrackerState(init_params("linear", 2), capacity=5)
        with pytest.raises(gsl.MissingClassError):
            update(s, [], FAST, make_rng(0))

    def test_collect_samples_shapes(self, rng):
        frame = rng.normal(size=(256, 4))
        cfg = TrackerConfig()
        pos, neg = collect_samples(frame, 10, cfg, rng)
        assert pos.shape == (50, 4) and neg.shape == (200, 4)
        assert len(pos) + len(neg) == cfg.update_samples
        # negatives never include the chosen candidate
        assert not np.any(np.all(neg == frame[10], axis=1))

    def test_collect_from_single_candidate(self, rng):
        pos, neg = collect_samples(np.zeros((1, 3)), 0, TrackerConfig(), rng)
        assert neg.shape[0] == 0


class TestRun:
    def test_initialize_separable(self):
        seq = make_sequence(SEPARABLE, 4)
        state = initialize(seq, FAST, make_rng(0))
        assert detect(state, seq.frames[0])[0] == seq.ground_truth[0]
        assert len(state.positives) <= FAST.store_capacity

    def test_initialize_rejects_empty_frame(self):
        seq = Sequence([np.zeros((0, 3))], np.array([0]), np.zeros((1, 3)), SEPARABLE)
        with pytest.raises(ValueError):
            initialize(seq, FAST, make_rng(0))

    def test_deterministic(self):
        seq = make_sequence(replace(SEPARABLE, length=12, drift=0.05), 5)
        cfg = replace(FAST, loss_mode="gsl", spsg=True)
        a, b = run(seq, cfg, 9), run(seq, cfg, 9)
        assert a.to_csv() == b.to_csv()

    def test_success_rate_bounds_and_frame_zero_unscored(self):
        rec = run(make_sequence(WorldConfig(length=8), 0), FAST, 1)
        assert 0.0 <= rec.success_rate <= 1.0
        assert [r.frame for r in rec.frames] == list(range(1, 8))

    def test_perfect_record(self):
        from spga.simworld import FrameResult

        rec = TrackRecord([FrameResult(t, 3, 3, True, 0.9, False) for t in range(1, 5)])
        assert rec.success_rate == 1.0

    def test_update_cadence(self):
        seq = make_sequence(replace(SEPARABLE, length=40), 6)
        rec = run(seq, FAST, 2)
        since = 0
        for r in rec.frames:
            since += 1
            if r.updated:
                assert since <= FAST.update_period or r.score < FAST.failure_threshold
                since = 0
            assert since < FAST.update_period
        assert rec.n_updates >= 3

    def test_stationary_updates_change_nothing(self):
        # static separable world without failures: updating never changes the pick
        seq = make_sequence(SEPARABLE, 8)
        on = run(seq, FAST, 3)
        off = run(seq, replace(FAST, updates=False), 3)
        assert min(r.score for r in on.frames) >= FAST.failure_threshold
        assert on.chosen == off.chosen
        assert on.success_rate == 1.0 and off.n_updates == 0

    def test_csv(self):
        rec = run(make_sequence(replace(SEPARABLE, length=4), 0), FAST, 0)
        lines = rec.to_csv().split("\r\n")
        assert lines[0] == "frame,chosen,truth,correct,score"
        assert len(lines) == 5 and lines[-1] == ""
