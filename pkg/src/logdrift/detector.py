"""Windowed Bayes-factor drift detector over count vector streams.

The detector holds a Dirichlet prior over slot probabilities built from the
baseline sample, normalizes each arriving count vector, and keeps the most
recent ``window`` of them. The log Bayes factor compares the marginal
likelihood of the windowed vectors under sequential Dirichlet-multinomial
posterior updating against their likelihood under the fixed baseline
probabilities; values above ln(1/alpha) after the grace period flag drift.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import CountVector, DirichletState, ProbabilityVector, normalize
from .errors import AllZeroVector, EmptySample, LengthMismatch, NonPositiveInput


def log_multivariate_beta(x) -> float:
    """Log multivariate beta function: sum(lnGamma(x_i)) - lnGamma(sum(x_i)).

    This is the log normalizing constant of a Dirichlet density, evaluated
    in log space so large concentrations cannot overflow the gamma function.
    """
    values = np.asarray(x, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("expected a non-empty one-dimensional vector")
    items = values.tolist()
    if any(v <= 0 or not math.isfinite(v) for v in items):
        raise NonPositiveInput("all elements must be finite and strictly positive")
    return math.fsum(math.lgamma(v) for v in items) - math.lgamma(math.fsum(items))


def build_prior(
    p_n: ProbabilityVector, kappa_prior: float, epsilon: float = 1e-6
) -> DirichletState:
    """Scale baseline probabilities into a Dirichlet concentration vector.

    Zero-probability slots (templates never seen in training, typically the
    unknown slots) get the small floor ``epsilon`` before scaling, so their
    posterior odds stay finite when they do appear. No renormalization is
    applied.
    """
    if kappa_prior <= 0:
        raise ValueError("kappa_prior must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    floored = np.where(p_n.probs > 0, p_n.probs, epsilon)
    return DirichletState(kappa_prior * floored)


@dataclass(frozen=True)
class DetectorConfig:
    """Tuning knobs of the windowed detector.

    ``window=None`` means unbounded (full history). ``lag_compat`` replays
    the one-step-delayed emission order where step t's Bayes factor is
    computed before appending vector t; the default emits the Bayes factor
    of the window that already includes the current vector.
    """

    window: int | None = 100
    kappa_count: float = 1.0
    kappa_prior: float = 100.0
    epsilon: float = 1e-6
    alpha: float = 0.05
    grace: int = 100
    log_prior_odds: float = 0.0
    lag_compat: bool = False

    def __post_init__(self):
        if self.window is not None and self.window < 2:
            raise ValueError("window must be at least 2 (or None for unbounded)")
        if self.kappa_count <= 0:
            raise ValueError("kappa_count must be positive")
        if self.kappa_prior <= 0:
            raise ValueError("kappa_prior must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.grace < 0:
            raise ValueError("grace must be nonnegative")

    @property
    def threshold(self) -> float:
        """Detection threshold ln(1/alpha); derived, never stored."""
        return math.log(1.0 / self.alpha)


@dataclass(frozen=True)
class TraceEntry:
    t: int
    log_bf: float
    flagged: bool


@dataclass(frozen=True)
class BfTrace:
    """Time-ordered log Bayes factor sequence with per-step flags."""

    entries: tuple[TraceEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if any(a.t >= b.t for a, b in zip(entries, entries[1:])):
            raise ValueError("trace entries must have strictly increasing t")
        object.__setattr__(self, "entries", entries)

    def log_bfs(self) -> np.ndarray:
        return np.array([e.log_bf for e in self.entries])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class Detector:
    """Single-stream sequential drift monitor.

    One instance owns one logical stream and must be observed sequentially;
    independent instances (one per monitored application) can run
    concurrently without shared state.
    """

    def __init__(self, prior: DirichletState, config: DetectorConfig | None = None):
        self.config = config or DetectorConfig()
        self._alpha0 = prior.alpha
        theta0 = prior.alpha / prior.alpha.sum()
        self._log_theta0 = np.log(theta0)
        self._lg_prior = log_multivariate_beta(prior.alpha)
        self._window: deque[np.ndarray] = deque()
        if self.config.lag_compat:
            # Mirrors the delayed ordering's initial placeholder window slot.
            self._window.append(np.zeros(len(prior.alpha)))
        self._t = 0
        self.last_log_bf: float | None = None

    @property
    def t(self) -> int:
        return self._t

    @property
    def prior(self) -> DirichletState:
        return DirichletState(self._alpha0)

    @property
    def baseline_probs(self) -> ProbabilityVector:
        return ProbabilityVector(np.exp(self._log_theta0))

    def observe(self, c: CountVector) -> TraceEntry:
        """Ingest one count vector; returns (t, log_bf, flagged).

        An all-zero vector raises AllZeroVector after the step counter has
        advanced, leaving the evidence window untouched, so trace time stays
        aligned with wall-clock windows across skips.
        """
        if len(c) != len(self._alpha0):
            raise LengthMismatch(
                f"vector length {len(c)} != prior length {len(self._alpha0)}"
            )
        self._t += 1
        scaled = normalize(c, self.config.kappa_count).values
        w = self.config.window
        if self.config.lag_compat:
            if w is not None and self._t > w:
                self._window.popleft()
            log_bf = self._log_bf()
            self._window.append(scaled)
        else:
            if w is not None and len(self._window) == w:
                self._window.popleft()
            self._window.append(scaled)
            log_bf = self._log_bf()
        self.last_log_bf = log_bf
        flagged = log_bf > self.config.threshold and self._t >= self.config.grace
        return TraceEntry(self._t, log_bf, flagged)

    def _log_bf(self) -> float:
        # The per-window sum of LG(W_S[i] + W[i]) - LG(W_S[i]) over the
        # cumulative posterior concentrations telescopes to
        # LG(alpha0 + S) - LG(alpha0) with S the window total.
        if not self._window:
            return self.config.log_prior_odds
        window_sum = np.add.reduce(list(self._window))
        gamma_term = (
            log_multivariate_beta(self._alpha0 + window_sum) - self._lg_prior
        )
        data_term = float(window_sum @ self._log_theta0)
        return self.config.log_prior_odds + gamma_term - data_term

    def checkpoint(self) -> dict:
        """JSON-serializable snapshot: prior, window contents, step counter."""
        return {
            "t": self._t,
            "prior": self._alpha0.tolist(),
            "window": [v.tolist() for v in self._window],
            "last_log_bf": self.last_log_bf,
            "config": {
                "window": self.config.window,
                "kappa_count": self.config.kappa_count,
                "kappa_prior": self.config.kappa_prior,
                "epsilon": self.config.epsilon,
                "alpha": self.config.alpha,
                "grace": self.config.grace,
                "log_prior_odds": self.config.log_prior_odds,
                "lag_compat": self.config.lag_compat,
            },
        }

    @classmethod
    def restore(cls, snapshot: dict, config: DetectorConfig | None = None) -> "Detector":
        """Rebuild a detector from a checkpoint; ``config`` overrides the saved one."""
        if config is None:
            config = DetectorConfig(**snapshot.get("config", {}))
        detector = cls(DirichletState(np.array(snapshot["prior"])), config)
        detector._window.clear()
        detector._window.extend(np.array(v, dtype=np.float64) for v in snapshot["window"])
        detector._t = int(snapshot["t"])
        detector.last_log_bf = snapshot.get("last_log_bf")
        return detector


def run(
    prior: DirichletState,
    cs: Iterable[CountVector],
    config: DetectorConfig | None = None,
) -> BfTrace:
    """Feed a whole sequence through a fresh detector.

    All-zero vectors are skipped (they still consume a step, so entry ``t``
    equals the 1-based input position) and produce no trace entry.
    """
    detector = Detector(prior, config)
    entries: list[TraceEntry] = []
    saw_input = False
    for c in cs:
        saw_input = True
        try:
            entries.append(detector.observe(c))
        except AllZeroVector:
            continue
    if not saw_input:
        raise EmptySample("run requires at least one count vector")
    return BfTrace(tuple(entries))


def first_detection(trace: BfTrace, config: DetectorConfig) -> int:
    """First step at or after the grace period whose log-BF exceeds the
    threshold, or 0 when no detection occurs."""
    threshold = config.threshold
    for entry in trace.entries:
        if entry.t >= config.grace and entry.log_bf > threshold:
            return entry.t
    return 0
