"""Seeded batch execution of experiment plans.

Every variant sees the same sequence for a given seed, so per-seed deltas
against the baseline compare methods on identical worlds. Outputs under
``out_dir``::

    plan.cfg                      resolved plan; re-running it reproduces all CSVs
    runs/<variant>/seed-<k>.csv   per-frame track record
    runs.csv                      one row per (variant, seed)
    deltas.csv                    paired per-seed deltas vs. the baseline
    summary.csv                   per-variant mean/median success and deltas
"""

from __future__ import annotations

import csv
import io
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import simworld
from .config import ExperimentPlan, config_hash, serialize

__all__ = ["RunResult", "PlanResult", "world_seed", "run_seed", "run_plan", "write_atomic", "csv_text"]

RUN_FIELDS = ["variant", "seed", "config_hash", "status", "success_rate", "n_updates", "frames", "error"]
DELTA_FIELDS = ["variant", "seed", "config_hash", "baseline", "success_rate", "baseline_success_rate", "delta"]
SUMMARY_FIELDS = [
    "variant",
    "config_hash",
    "runs",
    "errors",
    "mean_success",
    "median_success",
    "paired",
    "mean_delta",
    "median_delta",
]


def world_seed(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0])


def run_seed(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 1])


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else _cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def write_atomic(path, text: str) -> None:
    """Write ``text`` next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class RunResult:
    variant: str
    seed: int
    config_hash: str
    success_rate: float | None
    n_updates: int | None
    frames: int | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def row(self):
        return [
            self.variant,
            self.seed,
            self.config_hash,
            "ok" if self.ok else "error",
            self.success_rate,
            self.n_updates,
            self.frames,
            self.error,
        ]


@dataclass(frozen=True)
class _Job:
    variant: str
    seed: int
    world: simworld.WorldConfig
    tracker: simworld.TrackerConfig
    track_path: str | None


def _track_csv(record: simworld.TrackRecord, digest: str) -> str:
    rows = [[r.frame, r.chosen, r.truth, int(r.correct), r.score, digest] for r in record.frames]
    return csv_text(["frame", "chosen", "truth", "correct", "score", "config_hash"], rows)


def execute(job: _Job) -> RunResult:
    digest = config_hash(job.world, job.tracker)
    try:
        seq = simworld.make_sequence(job.world, world_seed(job.seed))
        record = simworld.run(seq, job.tracker, run_seed(job.seed))
        if job.track_path is not None:
            write_atomic(job.track_path, _track_csv(record, digest))
    except Exception as exc:  # recorded per row; the plan keeps going
        return RunResult(job.variant, job.seed, digest, None, None, None, f"{type(exc).__name__}: {exc}")
    return RunResult(job.variant, job.seed, digest, record.success_rate, record.n_updates, len(record.frames))


@dataclass
class PlanResult:
    plan: ExperimentPlan
    runs: list

    @property
    def n_errors(self) -> int:
        return sum(not r.ok for r in self.runs)

    def by_variant(self, name):
        return [r for r in self.runs if r.variant == name]

    def success(self, name) -> dict:
        return {r.seed: r.success_rate for r in self.by_variant(name) if r.ok}

    def deltas(self, name) -> dict:
        """Per-seed ``success(name) - success(baseline)`` on seeds both completed."""
        mine, base = self.success(name), self.success(self.plan.baseline.name)
        return {s: mine[s] - base[s] for s in mine if s in base}

    def median_success(self, name):
        vals = list(self.success(name).values())
        return statistics.median(vals) if vals else None

    def delta_rows(self):
        base = self.plan.baseline.name
        base_success = self.success(base)
        for v in self.plan.variants:
            digest = config_hash(self.plan.world, v.tracker)
            mine = self.success(v.name)
            for seed in v.seeds:
                if seed in mine and seed in base_success:
                    yield [v.name, seed, digest, base, mine[seed], base_success[seed], mine[seed] - base_success[seed]]

    def summary_rows(self):
        for v in self.plan.variants:
            runs = self.by_variant(v.name)
            ok = [r.success_rate for r in runs if r.ok]
            d = list(self.deltas(v.name).values())
            yield [
                v.name,
                config_hash(self.plan.world, v.tracker),
                len(runs),
                len(runs) - len(ok),
                statistics.fmean(ok) if ok else None,
                statistics.median(ok) if ok else None,
                len(d),
                statistics.fmean(d) if d else None,
                statistics.median(d) if d else None,
            ]

    def runs_csv(self) -> str:
        return csv_text(RUN_FIELDS, (r.row() for r in self.runs))

    def deltas_csv(self) -> str:
        return csv_text(DELTA_FIELDS, self.delta_rows())

    def summary_csv(self) -> str:
        return csv_text(SUMMARY_FIELDS, self.summary_rows())


def _jobs(plan: ExperimentPlan, out_dir):
    for v in plan.variants:
        for seed in v.seeds:
            path = None if out_dir is None else str(Path(out_dir) / "runs" / v.name / f"seed-{seed}.csv")
            yield _Job(v.name, seed, plan.world, v.tracker, path)


def run_plan(plan: ExperimentPlan, out_dir=None, jobs: int = 1) -> PlanResult:
    """Run every (variant, seed) pair; with ``out_dir`` also write all artifacts.

    Results are ordered by variant then seed regardless of ``jobs``.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    if out_dir is None and plan.output_dir is not None:
        out_dir = plan.output_dir
    work = list(_jobs(plan, out_dir))
    if jobs == 1 or len(work) < 2:
        runs = [execute(j) for j in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(execute, work))
    result = PlanResult(plan, runs)
    if out_dir is not None:
        out = Path(out_dir)
        # the emitted plan leaves out the directory so it can be re-run elsewhere
        write_atomic(out / "plan.cfg", serialize(replace(plan, output_dir=None)))
        write_atomic(out / "runs.csv", result.runs_csv())
        write_atomic(out / "deltas.csv", result.deltas_csv())
        write_atomic(out / "summary.csv", result.summary_csv())
    return result
