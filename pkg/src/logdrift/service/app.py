"""FastAPI application wrapping the drift-monitoring pipeline.

Stateless endpoints (mining, vector extraction, fit testing, batch runs,
simulation, evaluation) wrap the library one-to-one. Detector sessions are
the stateful part: one session per monitored stream, held in memory and
addressed by id, with a JSON checkpoint available for persistence.
"""

from __future__ import annotations

import threading
import uuid
from collections import Counter

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import ProbabilityVector
from ..detector import Detector, first_detection, run
from ..errors import (
    AllZeroVector,
    DriftError,
    EmptyCorpus,
    TrainingUnknownViolation,
)
from ..io import parse_timestamp
from ..multinomial import chi_squared_fit, sd_diagnostic
from ..simulator import evaluate, run_scenario, synthetic_pools
from ..templater import (
    LogRecord,
    WindowSpec,
    match_template,
    mine_templates,
    preprocess,
    window_counts,
)
from .schemas import (
    CountVectorModel,
    DetectionModel,
    DetectorCreateRequest,
    DetectorCreateResponse,
    EvaluateRequest,
    FitRequest,
    FitResponse,
    HealthResponse,
    MetricsResponse,
    MineReport,
    MineRequest,
    MineResponse,
    ObserveRequest,
    ObserveResponse,
    ObserveResult,
    RunRequest,
    RunResponse,
    SdDiagnosticRequest,
    SdDiagnosticResponse,
    SimulateRequest,
    SimulateResponse,
    TemplateCountModel,
    TemplateSetModel,
    TraceEntryModel,
    VectorsRequest,
    VectorsResponse,
)


class UnknownDetector(DriftError):
    """No session exists under the requested detector id."""


class _Session:
    __slots__ = ("detector", "lock")

    def __init__(self, detector: Detector):
        self.detector = detector
        self.lock = threading.Lock()


def _error_status(exc: DriftError) -> int:
    if isinstance(exc, UnknownDetector):
        return 404
    if isinstance(exc, TrainingUnknownViolation):
        return 409
    return 422


def create_app() -> FastAPI:
    app = FastAPI(title="logdrift", version=__version__)
    sessions: dict[str, _Session] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(DriftError)
    async def _drift_error(request: Request, exc: DriftError):
        return JSONResponse(
            status_code=_error_status(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422,
            content={"error": "ValueError", "detail": str(exc)},
        )

    def _get_session(detector_id: str) -> _Session:
        with sessions_lock:
            session = sessions.get(detector_id)
        if session is None:
            raise UnknownDetector(f"unknown detector {detector_id!r}")
        return session

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/templates/mine", response_model=MineResponse)
    def mine(req: MineRequest):
        lines = req.lines
        dropped = 0
        if req.preprocess:
            cleaned = []
            for raw in lines:
                msg = preprocess(raw, prefix_patterns=req.prefix_patterns)
                if msg is None:
                    dropped += 1
                else:
                    cleaned.append(msg)
            lines = cleaned
        if not lines:
            raise EmptyCorpus("no usable lines after preprocessing")
        kwargs = {}
        if req.error_keywords is not None:
            kwargs["error_keywords"] = tuple(req.error_keywords)
        ts = mine_templates(lines, req.similarity_threshold, **kwargs)
        counts = Counter(match_template(line, ts) for line in lines)
        report = MineReport(
            k=ts.size,
            lines_total=len(req.lines),
            lines_dropped=dropped,
            templates=[
                TemplateCountModel(id=t.id, pattern=t.pattern, count=counts.get(t.id, 0))
                for t in ts.templates
            ],
        )
        return MineResponse(template_set=TemplateSetModel.from_domain(ts), report=report)

    @app.post("/vectors", response_model=VectorsResponse)
    def vectors(req: VectorsRequest):
        ts = req.template_set.to_domain()
        records = []
        for r in req.records:
            msg = preprocess(r.msg, prefix_patterns=req.prefix_patterns) if req.preprocess else r.msg
            if msg is None:
                continue
            records.append(LogRecord(parse_timestamp(r.ts), msg))
        if req.sort:
            records.sort(key=lambda rec: rec.timestamp_ms)
        out = list(window_counts(records, ts, WindowSpec(req.window_seconds)))
        if req.training:
            for v in out:
                unk = v.values[ts.size :]
                if unk.any():
                    raise TrainingUnknownViolation(
                        f"window {v.t} has nonzero unknown-slot counts "
                        f"(unk_error={unk[0]:g}, unk_normal={unk[1]:g})"
                    )
        return VectorsResponse(vectors=[CountVectorModel.from_domain(v) for v in out])

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest):
        report = chi_squared_fit([v.to_domain() for v in req.vectors])
        return FitResponse(statistic=report.statistic, df=report.df, p_value=report.p_value)

    @app.post("/sd-diagnostic", response_model=SdDiagnosticResponse)
    def sd(req: SdDiagnosticRequest):
        diag = sd_diagnostic(
            [v.to_domain() for v in req.vectors],
            ProbabilityVector(np.asarray(req.probs, dtype=np.float64)),
            req.n,
        )
        return SdDiagnosticResponse(
            observed_sd=diag.observed_sd.tolist(),
            theoretical_sd=diag.theoretical_sd.tolist(),
        )

    @app.post("/detectors", response_model=DetectorCreateResponse)
    def create_detector(req: DetectorCreateRequest):
        config = req.config.to_domain()
        if req.checkpoint is not None:
            detector = Detector.restore(req.checkpoint)
        elif req.prior is not None:
            detector = Detector(req.prior.to_domain(config), config)
        else:
            raise ValueError("detector creation requires a prior or a checkpoint")
        detector_id = uuid.uuid4().hex
        with sessions_lock:
            sessions[detector_id] = _Session(detector)
        return DetectorCreateResponse(
            detector_id=detector_id,
            threshold=detector.config.threshold,
            dim=len(detector.prior),
            t=detector.t,
        )

    @app.post("/detectors/{detector_id}/observe", response_model=ObserveResponse)
    def observe(detector_id: str, req: ObserveRequest):
        session = _get_session(detector_id)
        results = []
        with session.lock:
            for vm in req.vectors:
                try:
                    entry = session.detector.observe(vm.to_domain())
                except AllZeroVector:
                    results.append(ObserveResult(t=session.detector.t, skipped=True))
                else:
                    results.append(
                        ObserveResult(t=entry.t, log_bf=entry.log_bf, flagged=entry.flagged)
                    )
        return ObserveResponse(results=results)

    @app.get("/detectors/{detector_id}")
    def checkpoint(detector_id: str):
        session = _get_session(detector_id)
        with session.lock:
            return session.detector.checkpoint()

    @app.delete("/detectors/{detector_id}")
    def delete_detector(detector_id: str):
        with sessions_lock:
            if sessions.pop(detector_id, None) is None:
                raise UnknownDetector(f"unknown detector {detector_id!r}")
        return {"deleted": detector_id}

    @app.post("/run", response_model=RunResponse)
    def run_batch(req: RunRequest):
        config = req.config.to_domain()
        prior = req.prior.to_domain(config)
        trace = run(prior, [v.to_domain() for v in req.vectors], config)
        return RunResponse(
            trace=[TraceEntryModel.from_domain(e) for e in trace],
            first_detection=first_detection(trace, config),
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        scenario = req.scenario.to_domain()
        if req.synthetic is not None:
            if req.normal_pool is not None or req.anomalous_pool is not None:
                raise ValueError("give either explicit pools or synthetic parameters")
            syn = req.synthetic
            normal, anomalous = synthetic_pools(
                num_templates=syn.num_templates,
                lines_per_window=syn.lines_per_window,
                pool_size=syn.pool_size,
                overlap=syn.overlap,
                seed=syn.seed,
            )
        else:
            if req.normal_pool is None or req.anomalous_pool is None:
                raise ValueError("simulate requires both pools or synthetic parameters")
            normal = [v.to_domain() for v in req.normal_pool]
            anomalous = [v.to_domain() for v in req.anomalous_pool]
        results = run_scenario(scenario, normal, anomalous)
        detections = [DetectionModel(r=i + 1, d=d) for i, (_, d) in enumerate(results)]
        traces = None
        if req.emit_traces:
            traces = [
                [TraceEntryModel.from_domain(e) for e in trace] for trace, _ in results
            ]
        return SimulateResponse(detections=detections, traces=traces)

    @app.post("/evaluate", response_model=MetricsResponse)
    def evaluate_detections(req: EvaluateRequest):
        metrics = evaluate(req.detections, req.drift_start, req.grace)
        return MetricsResponse(
            tpr=metrics.tpr, fpr=metrics.fpr, fnr=metrics.fnr, add=metrics.add
        )

    return app


app = create_app()
