"""Rotating twin-Gaussians stream and test-then-train evaluation."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .engine import EngineConfig, ModelState, predict, process

PIVOT = (5.0, 5.0)
RADIUS = math.sqrt(2.0)
SIGMA = 0.8
SCALE = 10.0
# class 1 starts at (4, 4), class 2 at (6, 6)
THETA0 = {1: 225.0, 2: 45.0}


@dataclass(frozen=True)
class GaussianSpec:
    theta0: float
    sigma: float = SIGMA
    pivot: tuple[float, float] = PIVOT
    radius: float = RADIUS

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def center(self, theta_deg: float) -> np.ndarray:
        t = math.radians(theta_deg)
        return np.array([self.pivot[0] + self.radius * math.cos(t),
                         self.pivot[1] + self.radius * math.sin(t)])


@dataclass(frozen=True)
class StreamInstance:
    h: int
    x: np.ndarray
    true_label: int | None


def rotation_angles(steps: int, phi: float = 0.45, stage_split: int = 200,
                    theta0: float = 0.0) -> np.ndarray:
    """Angle (degrees) of one Gaussian at h = 1..steps; the rate is zero up
    to ``stage_split`` and ``phi`` degrees per step afterwards."""
    theta, out = theta0, []
    for h in range(1, steps + 1):
        if h > stage_split:
            theta += phi
        out.append(theta)
    return np.array(out)


def gen_stream(steps: int = 400, phi: float = 0.45, seed: int = 0,
               stage_split: int = 200, sigma: float = SIGMA) -> list[StreamInstance]:
    """Draw one instance per step, alternating classes (odd h -> class 1).

    Coordinates are mapped to roughly [0, 1] by dividing by 10; samples are
    never clipped.
    """
    rng = np.random.default_rng(seed)
    specs = {c: GaussianSpec(THETA0[c], sigma) for c in (1, 2)}
    theta = dict(THETA0)
    stream = []
    for h in range(1, steps + 1):
        if h > stage_split:
            for c in theta:
                theta[c] += phi
        label = 1 if h % 2 == 1 else 2
        raw = specs[label].center(theta[label]) + rng.normal(0.0, sigma, size=2)
        stream.append(StreamInstance(h, raw / SCALE, label))
    return stream


@dataclass
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            return float("nan")
        return (self.tp + self.tn) / self.total * 100.0

    def add(self, true: int, pred: int | None, positive: int = 1) -> bool:
        """Record one outcome; a missing prediction counts as wrong."""
        correct = pred is not None and pred == true
        if true == positive:
            if correct:
                self.tp += 1
            else:
                self.fn += 1
        elif correct:
            self.tn += 1
        else:
            self.fp += 1
        return correct


def accuracy(tp: int, fp: int, tn: int, fn: int) -> float:
    return Confusion(tp, fp, tn, fn).accuracy


@dataclass
class StageMetrics:
    name: str
    confusion: Confusion = field(default_factory=Confusion)
    granule_counts: list[int] = field(default_factory=list)
    creations: int = 0
    wall_time: float = 0.0

    @property
    def accuracy(self) -> float:
        return self.confusion.accuracy

    @property
    def avg_granules(self) -> float:
        return float(np.mean(self.granule_counts)) if self.granule_counts else float("nan")

    @property
    def steps(self) -> int:
        return len(self.granule_counts)


@dataclass
class StepRecord:
    h: int
    k: int
    pred: int | None
    true: int | None
    correct: bool | None
    cum_acc: float | None


@dataclass
class RunMetrics:
    stages: list[StageMetrics]
    records: list[StepRecord]
    state: ModelState
    wall_time: float

    @property
    def confusion(self) -> Confusion:
        c = Confusion()
        for s in self.stages:
            c.tp += s.confusion.tp
            c.fp += s.confusion.fp
            c.tn += s.confusion.tn
            c.fn += s.confusion.fn
        return c

    @property
    def accuracy(self) -> float:
        return self.confusion.accuracy

    @property
    def avg_granules(self) -> float:
        counts = [r.k for r in self.records]
        return float(np.mean(counts)) if counts else float("nan")

    @property
    def granule_count_series(self) -> list[int]:
        return [r.k for r in self.records]


def prequential_run(cfg: EngineConfig, stream: Iterable[StreamInstance],
                    stage_split: int | None = 200, positive: int = 1,
                    require_labels: bool = True) -> RunMetrics:
    """Test-then-train over a labelled stream.

    Each instance is first predicted by the current model, then learned.
    Metrics are kept per stage: ``h <= stage_split`` and ``h > stage_split``
    (one stage when ``stage_split`` is None).
    """
    stages = [StageMetrics("stationary")]
    if stage_split is not None:
        stages.append(StageMetrics("nonstationary"))
    state = ModelState()
    records = []
    correct_total = evaluated = 0
    start = time.perf_counter()
    for inst in stream:
        if inst.true_label is None and require_labels:
            raise ValueError(f"instance h={inst.h} has no label")
        stage = stages[1] if stage_split is not None and inst.h > stage_split else stages[0]
        t0 = time.perf_counter()
        pred = predict(state, inst.x)
        state, event = process(state, inst.x, cfg, inst.true_label)
        stage.wall_time += time.perf_counter() - t0

        stage.granule_counts.append(state.k)
        stage.creations += event.kind == "created"
        if inst.true_label is not None:
            ok = stage.confusion.add(inst.true_label, pred, positive)
            evaluated += 1
            correct_total += ok
            records.append(StepRecord(inst.h, state.k, pred, inst.true_label, ok,
                                      correct_total / evaluated * 100.0))
        else:
            records.append(StepRecord(inst.h, state.k, pred, None, None, None))
    return RunMetrics(stages, records, state, time.perf_counter() - start)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    rho: float
    stage: str
    acc: float
    avg_granules: float
    time_s: float


def _run_cell(args) -> tuple[list[RunMetrics], float, float]:
    base, eps, rho, seeds, steps, phi, split = args
    cfg = EngineConfig(eps, rho, base.alpha, base.beta, base.merge_method, base.tnorm)
    runs = [prequential_run(cfg, gen_stream(steps, phi, s, split), split) for s in seeds]
    return runs, eps, rho


def sweep(grid: Sequence[tuple[float, float]], seeds: Sequence[int],
          base: EngineConfig | None = None, steps: int = 400, phi: float = 0.45,
          stage_split: int = 200, jobs: int = 1):
    """Run every (epsilon, rho) cell over all seeds.

    Returns ``(rows, series)``: seed-averaged per-stage rows, and for each
    cell the per-seed granule-count series.
    """
    if not grid:
        raise ValueError("empty parameter grid")
    if not seeds:
        raise ValueError("no seeds given")
    base = base or EngineConfig(epsilon=0.055, rho=0.45)
    tasks = [(base, eps, rho, list(seeds), steps, phi, stage_split) for eps, rho in grid]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]

    rows, series = [], {}
    for runs, eps, rho in results:
        for i, stage in enumerate(runs[0].stages):
            per_seed = [r.stages[i] for r in runs]
            rows.append(SweepRow(
                eps, rho, stage.name,
                float(np.mean([s.accuracy for s in per_seed])),
                float(np.mean([s.avg_granules for s in per_seed])),
                float(np.mean([s.wall_time for s in per_seed])),
            ))
        series[(eps, rho)] = {s: r.granule_count_series for s, r in zip(seeds, runs)}
    return rows, series
