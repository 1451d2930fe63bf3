"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from ..core import (
    CountVector,
    DirichletState,
    ProbabilityVector,
    Template,
    TemplateSet,
)
from ..detector import DetectorConfig, TraceEntry, build_prior
from ..simulator import ScenarioConfig


class TemplateModel(BaseModel):
    id: int
    pattern: str


class TemplateSetModel(BaseModel):
    templates: list[TemplateModel]
    error_keywords: list[str] = []

    @classmethod
    def from_domain(cls, ts: TemplateSet) -> "TemplateSetModel":
        return cls(
            templates=[TemplateModel(id=t.id, pattern=t.pattern) for t in ts.templates],
            error_keywords=list(ts.error_keywords),
        )

    def to_domain(self) -> TemplateSet:
        templates = tuple(Template(t.id, t.pattern) for t in self.templates)
        if self.error_keywords:
            return TemplateSet(templates, tuple(self.error_keywords))
        return TemplateSet(templates)


class LogRecordModel(BaseModel):
    ts: Union[int, str]
    msg: str


class CountVectorModel(BaseModel):
    t: int = 0
    counts: list[float]

    @classmethod
    def from_domain(cls, v: CountVector) -> "CountVectorModel":
        return cls(t=v.t, counts=v.values.tolist())

    def to_domain(self) -> CountVector:
        return CountVector(np.asarray(self.counts, dtype=np.float64), t=self.t)


class DetectorConfigModel(BaseModel):
    window: Optional[int] = 100
    kappa_count: float = 1.0
    kappa_prior: float = 100.0
    epsilon: float = 1e-6
    alpha: float = 0.05
    grace: int = 100
    log_prior_odds: float = 0.0
    lag_compat: bool = False

    def to_domain(self) -> DetectorConfig:
        return DetectorConfig(
            window=self.window,
            kappa_count=self.kappa_count,
            kappa_prior=self.kappa_prior,
            epsilon=self.epsilon,
            alpha=self.alpha,
            grace=self.grace,
            log_prior_odds=self.log_prior_odds,
            lag_compat=self.lag_compat,
        )


class PriorModel(BaseModel):
    """Either a concentration vector or baseline probabilities to scale.

    With ``probs``, the concentration is kappa_prior * probs with zero slots
    floored at epsilon (both default to the detector config's values).
    """

    alpha: Optional[list[float]] = None
    probs: Optional[list[float]] = None
    kappa_prior: Optional[float] = None
    epsilon: Optional[float] = None

    def to_domain(self, config: DetectorConfig) -> DirichletState:
        if (self.alpha is None) == (self.probs is None):
            raise ValueError("prior requires exactly one of 'alpha' or 'probs'")
        if self.alpha is not None:
            return DirichletState(np.asarray(self.alpha, dtype=np.float64))
        return build_prior(
            ProbabilityVector(np.asarray(self.probs, dtype=np.float64)),
            self.kappa_prior if self.kappa_prior is not None else config.kappa_prior,
            self.epsilon if self.epsilon is not None else config.epsilon,
        )


class MineRequest(BaseModel):
    lines: list[str]
    similarity_threshold: float = 0.5
    error_keywords: Optional[list[str]] = None
    preprocess: bool = True
    prefix_patterns: list[str] = []


class TemplateCountModel(BaseModel):
    id: int
    pattern: str
    count: int


class MineReport(BaseModel):
    k: int
    lines_total: int
    lines_dropped: int
    templates: list[TemplateCountModel]


class MineResponse(BaseModel):
    template_set: TemplateSetModel
    report: MineReport


class VectorsRequest(BaseModel):
    records: list[LogRecordModel]
    template_set: TemplateSetModel
    window_seconds: float = 10.0
    preprocess: bool = True
    prefix_patterns: list[str] = []
    sort: bool = True
    training: bool = False


class VectorsResponse(BaseModel):
    vectors: list[CountVectorModel]


class FitRequest(BaseModel):
    vectors: list[CountVectorModel]


class FitResponse(BaseModel):
    statistic: float
    df: int
    p_value: float


class SdDiagnosticRequest(BaseModel):
    vectors: list[CountVectorModel]
    probs: list[float]
    n: float


class SdDiagnosticResponse(BaseModel):
    observed_sd: list[float]
    theoretical_sd: list[float]


class DetectorCreateRequest(BaseModel):
    prior: Optional[PriorModel] = None
    config: DetectorConfigModel = Field(default_factory=DetectorConfigModel)
    checkpoint: Optional[dict] = None


class DetectorCreateResponse(BaseModel):
    detector_id: str
    threshold: float
    dim: int
    t: int


class ObserveRequest(BaseModel):
    vectors: list[CountVectorModel]


class ObserveResult(BaseModel):
    t: int
    log_bf: Optional[float] = None
    flagged: Optional[bool] = None
    skipped: bool = False


class ObserveResponse(BaseModel):
    results: list[ObserveResult]


class TraceEntryModel(BaseModel):
    t: int
    log_bf: float
    flagged: bool

    @classmethod
    def from_domain(cls, e: TraceEntry) -> "TraceEntryModel":
        return cls(t=e.t, log_bf=e.log_bf, flagged=e.flagged)


class RunRequest(BaseModel):
    prior: PriorModel
    config: DetectorConfigModel = Field(default_factory=DetectorConfigModel)
    vectors: list[CountVectorModel]


class RunResponse(BaseModel):
    trace: list[TraceEntryModel]
    first_detection: int


class ScenarioModel(BaseModel):
    level: float
    total_windows: int = 1000
    drift_start: int = 501
    duration: Optional[int] = None
    repetitions: int = 50
    seed: int = 0
    detector: DetectorConfigModel = Field(default_factory=DetectorConfigModel)

    def to_domain(self) -> ScenarioConfig:
        return ScenarioConfig(
            level=self.level,
            total_windows=self.total_windows,
            drift_start=self.drift_start,
            duration=self.duration,
            repetitions=self.repetitions,
            seed=self.seed,
            detector=self.detector.to_domain(),
        )


class SyntheticPoolsModel(BaseModel):
    num_templates: int = 10
    lines_per_window: int = 200
    pool_size: int = 200
    overlap: float = 0.0
    seed: int = 0


class SimulateRequest(BaseModel):
    scenario: ScenarioModel
    normal_pool: Optional[list[CountVectorModel]] = None
    anomalous_pool: Optional[list[CountVectorModel]] = None
    synthetic: Optional[SyntheticPoolsModel] = None
    emit_traces: bool = False


class DetectionModel(BaseModel):
    r: int
    d: int


class SimulateResponse(BaseModel):
    detections: list[DetectionModel]
    traces: Optional[list[list[TraceEntryModel]]] = None


class EvaluateRequest(BaseModel):
    detections: list[int]
    drift_start: int
    grace: int = 100


class MetricsResponse(BaseModel):
    tpr: float
    fpr: float
    fnr: float
    add: Optional[float] = None


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
