"""Contamination-based drift simulation and detection-quality metrics.

A simulated window mixes one normalized draw from the baseline pool with
one from the anomalous pool at the scheduled contamination level. Scenario
runs repeat the stream generation with per-repetition RNGs derived from
the base seed, so detection lists are reproducible across platforms
(numpy PCG64 streams are portable).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CountVector, elementwise_mean, normalize
from .detector import BfTrace, DetectorConfig, build_prior, first_detection, run
from .errors import EmptyPool, EmptySample, InvalidDetection


@dataclass(frozen=True)
class ScenarioConfig:
    """Contamination experiment parameters.

    ``level`` is the contaminated fraction of each affected window's mass;
    contamination holds from ``drift_start`` for ``duration`` windows
    (None = until the end of the stream).
    """

    level: float
    total_windows: int = 1000
    drift_start: int = 501
    duration: int | None = None
    repetitions: int = 50
    seed: int = 0
    detector: DetectorConfig = field(default_factory=DetectorConfig)

    def __post_init__(self):
        if not 0 <= self.level <= 1:
            raise ValueError("contamination level must be in [0, 1]")
        if not 1 < self.drift_start <= self.total_windows:
            raise ValueError("drift_start must satisfy 1 < drift_start <= total_windows")
        if self.duration is not None and self.duration < 1:
            raise ValueError("duration must be positive (or None for open-ended)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative 64-bit integer")


@dataclass(frozen=True)
class RunMetrics:
    """Detection-quality summary over scenario repetitions.

    Each repetition is exactly one of false positive (detection before
    drift_start), true positive (at or after), or false negative (none),
    so tpr + fpr + fnr = 1. ``add`` is the mean delay among true positives
    and is None when there are none.
    """

    tpr: float
    fpr: float
    fnr: float
    add: float | None


def sim_drift(
    normal_pool: list[CountVector],
    anomalous_pool: list[CountVector],
    level: float,
    rng: np.random.Generator,
    t: int = 0,
) -> CountVector:
    """Mix one uniform draw from each pool: level * E(C_A) + (1-level) * E(C_N).

    Both draws are taken even at level 0 or 1, keeping the RNG stream
    alignment independent of the contamination schedule.
    """
    if not normal_pool or not anomalous_pool:
        raise EmptyPool("both draw pools must be non-empty")
    if not 0 <= level <= 1:
        raise ValueError("contamination level must be in [0, 1]")
    drawn_n = normal_pool[int(rng.integers(len(normal_pool)))]
    drawn_a = anomalous_pool[int(rng.integers(len(anomalous_pool)))]
    e_n = normalize(drawn_n).values
    e_a = normalize(drawn_a).values
    return CountVector(level * e_a + (1.0 - level) * e_n, t=t)


def contamination_profile(t: int, cfg: ScenarioConfig) -> float:
    """Scheduled contamination level for window t (1-based)."""
    if not 1 <= t <= cfg.total_windows:
        raise ValueError(f"t must be in 1..{cfg.total_windows}")
    if t < cfg.drift_start:
        return 0.0
    if cfg.duration is None or t <= cfg.drift_start + cfg.duration - 1:
        return cfg.level
    return 0.0


def run_scenario(
    cfg: ScenarioConfig,
    normal_pool: list[CountVector],
    anomalous_pool: list[CountVector],
) -> list[tuple[BfTrace, int]]:
    """Execute all repetitions; returns (trace, detection window) per run.

    The prior is built once from the baseline pool's normalized elementwise
    mean; repetition r uses an independent generator seeded with seed XOR r
    (r = 1..repetitions) and a fresh detector.
    """
    if not normal_pool or not anomalous_pool:
        raise EmptyPool("both draw pools must be non-empty")
    baseline = elementwise_mean([normalize(c) for c in normal_pool])
    prior = build_prior(baseline, cfg.detector.kappa_prior, cfg.detector.epsilon)
    results: list[tuple[BfTrace, int]] = []
    for r in range(1, cfg.repetitions + 1):
        rng = np.random.default_rng(cfg.seed ^ r)
        stream = [
            sim_drift(normal_pool, anomalous_pool, contamination_profile(t, cfg), rng, t=t)
            for t in range(1, cfg.total_windows + 1)
        ]
        trace = run(prior, stream, cfg.detector)
        results.append((trace, first_detection(trace, cfg.detector)))
    return results


def evaluate(detections: list[int], drift_start: int, grace: int) -> RunMetrics:
    """Score a list of per-run detection windows against the drift onset.

    A detection d is a false positive when grace <= d < drift_start, a true
    positive when d >= drift_start, and a false negative when d = 0. The
    average detection delay counts true positives only.
    """
    if not detections:
        raise EmptySample("evaluate requires at least one detection entry")
    for d in detections:
        if 0 < d < grace:
            raise InvalidDetection(
                f"detection at {d} lies inside the grace period (g={grace})"
            )
    r = len(detections)
    true_positives = sum(1 for d in detections if d >= drift_start)
    false_positives = sum(1 for d in detections if grace <= d < drift_start)
    false_negatives = sum(1 for d in detections if d == 0)
    delay_sum = sum(max(d - drift_start, 0) for d in detections)
    add = delay_sum / true_positives if true_positives else None
    return RunMetrics(
        tpr=true_positives / r,
        fpr=false_positives / r,
        fnr=false_negatives / r,
        add=add,
    )


def synthetic_pools(
    num_templates: int = 10,
    lines_per_window: int = 200,
    pool_size: int = 200,
    overlap: float = 0.0,
    seed: int = 0,
) -> tuple[list[CountVector], list[CountVector]]:
    """Generate baseline and anomalous draw pools from two multinomials.

    The baseline distribution puts all its mass on the template slots; the
    anomalous one keeps ``overlap`` of the baseline template mass and moves
    the rest onto the two unknown slots. ``overlap=0`` gives disjoint
    supports (every anomalous line lands in an unknown slot).
    """
    if num_templates < 1:
        raise ValueError("num_templates must be positive")
    if lines_per_window < 1:
        raise ValueError("lines_per_window must be positive")
    if pool_size < 1:
        raise ValueError("pool_size must be positive")
    if not 0 <= overlap <= 1:
        raise ValueError("overlap must be in [0, 1]")
    rng = np.random.default_rng(seed)
    dim = num_templates + 2
    p_normal = np.zeros(dim)
    p_normal[:num_templates] = rng.dirichlet(np.ones(num_templates))
    p_anomalous = np.zeros(dim)
    p_anomalous[:num_templates] = overlap * p_normal[:num_templates]
    p_anomalous[num_templates:] = (1.0 - overlap) / 2.0
    normal = [
        CountVector(row.astype(np.float64))
        for row in rng.multinomial(lines_per_window, p_normal, size=pool_size)
    ]
    anomalous = [
        CountVector(row.astype(np.float64))
        for row in rng.multinomial(lines_per_window, p_anomalous, size=pool_size)
    ]
    return normal, anomalous
