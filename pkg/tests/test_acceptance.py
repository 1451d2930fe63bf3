"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live.
"""

import json
import math
import time

import gmpy2
import numpy as np
import pytest

from logdrift import (
    CountVector,
    DetectorConfig,
    DirichletState,
    ProbabilityVector,
    ScenarioConfig,
    build_prior,
    chi_squared_fit,
    chi_squared_sf,
    evaluate,
    first_detection,
    log_multivariate_beta,
    match_template,
    mine_templates,
    run,
    run_scenario,
    synthetic_pools,
)
from logdrift.cli import main as cli_main


def _report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f": {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def pools():
    return synthetic_pools(
        num_templates=10, lines_per_window=200, pool_size=200, overlap=0.0, seed=42
    )


def scenario(level, duration, seed=7, total=600, start=301, reps=20):
    return ScenarioConfig(
        level=level,
        total_windows=total,
        drift_start=start,
        duration=duration,
        repetitions=reps,
        seed=seed,
        detector=DetectorConfig(window=100, grace=100, alpha=0.05),
    )


def test_criterion_1_lg_oracle_equivalence():
    """lg agrees with a high-precision log-gamma oracle within 1e-9."""
    start = time.monotonic()
    rng = np.random.default_rng(2023)
    worst = 0.0
    with gmpy2.context(precision=150):
        for _ in range(1000):
            x = rng.uniform(1e-4, 1e3, size=int(rng.integers(1, 51)))
            got = log_multivariate_beta(x)
            total = gmpy2.mpfr(0)
            acc = gmpy2.mpfr(0)
            for v in x.tolist():
                acc += gmpy2.lgamma(gmpy2.mpfr(v))[0]
                total += gmpy2.mpfr(v)
            oracle = float(acc - gmpy2.lgamma(total)[0])
            worst = max(worst, abs(got - oracle))
    elapsed = time.monotonic() - start
    _report(
        "criterion 1: lg oracle equivalence",
        worst <= 1e-9 and elapsed < 1.0,
        f"max |dev| = {worst:.2e}, {elapsed:.2f}s",
    )


def test_criterion_2_chi_squared_backend():
    """sf anchors: closed form at df=2, the 0.05 quantile at df=1, exact fits."""
    a = abs(chi_squared_sf(2.0, 2) - math.exp(-1.0))
    b = abs(chi_squared_sf(3.841, 1) - 0.05)
    report = chi_squared_fit([CountVector([1, 1]), CountVector([2, 2])])
    ok = a <= 1e-10 and b <= 1e-3 and report.statistic == 0.0 and report.p_value == 1.0
    _report(
        "criterion 2: chi-squared backend",
        ok,
        f"|sf(2,2)-e^-1| = {a:.1e}, |sf(3.841,1)-0.05| = {b:.1e}, exact fit X={report.statistic} p={report.p_value}",
    )


def test_criterion_3_window_equivalence():
    """w in {80, 200, unbounded} agree elementwise on length-80 streams."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        dim = int(rng.integers(3, 8))
        prior = DirichletState(rng.uniform(0.5, 5.0, dim))
        stream = [CountVector(rng.uniform(0.01, 1.0, dim)) for _ in range(80)]
        traces = [
            run(prior, stream, DetectorConfig(window=w, grace=0)).log_bfs()
            for w in (80, 200, None)
        ]
        worst = max(
            worst,
            float(np.max(np.abs(traces[0] - traces[2]))),
            float(np.max(np.abs(traces[1] - traces[2]))),
        )
    _report(
        "criterion 3: window equivalence",
        worst <= 1e-10,
        f"max trace deviation = {worst:.2e}",
    )


def test_criterion_4_null_stability():
    """No-drift streams stay quiet: FPR <= 0.1, median steady log-BF < 0."""
    start = time.monotonic()
    rng = np.random.default_rng(501)
    dim = 12
    p_normal = np.zeros(dim)
    p_normal[:10] = rng.dirichlet(np.ones(10))
    prior = build_prior(ProbabilityVector(p_normal), 100.0, 1e-6)
    cfg = DetectorConfig(window=100, grace=100, alpha=0.05)
    false_alarms = 0
    steady = []
    for seed in range(20):
        stream_rng = np.random.default_rng(9000 + seed)
        rows = stream_rng.multinomial(200, p_normal, size=300)
        trace = run(prior, [CountVector(r) for r in rows], cfg)
        false_alarms += first_detection(trace, cfg) != 0
        steady.extend(e.log_bf for e in trace if e.t >= 100)
    fpr = false_alarms / 20.0
    median = float(np.median(steady))
    elapsed = time.monotonic() - start
    _report(
        "criterion 4: null stability",
        fpr <= 0.1 and median < 0.0 and elapsed < 10.0,
        f"FPR = {fpr:.2f}, median log-BF = {median:.2f}, {elapsed:.2f}s",
    )


def test_criterion_5_drift_detection(pools):
    """Disjoint-support contamination at level 0.3 is always caught quickly."""
    start = time.monotonic()
    normal, anomalous = pools
    results = run_scenario(scenario(level=0.3, duration=None), normal, anomalous)
    detections = [d for _, d in results]
    metrics = evaluate(detections, drift_start=301, grace=100)
    elapsed = time.monotonic() - start
    _report(
        "criterion 5: drift detection",
        metrics.tpr == 1.0
        and metrics.fnr == 0.0
        and metrics.add is not None
        and metrics.add < 100
        and elapsed < 30.0,
        f"TPR = {metrics.tpr}, FNR = {metrics.fnr}, ADD = {metrics.add}, {elapsed:.1f}s",
    )


def test_criterion_6_short_contamination_recovery(pools):
    """A window after a 100-step burst ends, the log-BF is back under c."""
    normal, anomalous = pools
    cfg = scenario(level=0.3, duration=100)
    threshold = cfg.detector.threshold
    results = run_scenario(cfg, normal, anomalous)
    # t = drift_start + duration + window = 301 + 100 + 100
    values = [trace.entries[500].log_bf for trace, _ in results]
    assert all(trace.entries[500].t == 501 for trace, _ in results)
    worst = max(values)
    _report(
        "criterion 6: short-contamination recovery",
        worst < threshold,
        f"max log-BF at t=501 is {worst:.2f} < c = {threshold:.4f}",
    )


def test_criterion_7_dose_response(pools):
    """Post-drift steady-state log-BF grows with the contamination level."""
    normal, anomalous = pools
    means = {}
    for level in (0.1, 0.3):
        results = run_scenario(scenario(level=level, duration=None), normal, anomalous)
        values = [
            e.log_bf for trace, _ in results for e in trace.entries if e.t >= 401
        ]
        means[level] = float(np.mean(values))
    _report(
        "criterion 7: dose-response",
        means[0.3] > means[0.1],
        f"mean steady log-BF: p=0.3 -> {means[0.3]:.1f}, p=0.1 -> {means[0.1]:.1f}",
    )


def test_criterion_8_metrics_arithmetic():
    """The worked metrics example evaluates exactly."""
    metrics = evaluate([0, 450, 520, 700], drift_start=501, grace=100)
    ok = (
        metrics.fpr == 0.25
        and metrics.tpr == 0.5
        and metrics.fnr == 0.25
        and metrics.add == 109.0
    )
    _report(
        "criterion 8: metrics arithmetic",
        ok,
        f"FPR={metrics.fpr} TPR={metrics.tpr} FNR={metrics.fnr} ADD={metrics.add}",
    )


def test_criterion_9_templater_totality():
    """Mining any corpus and re-matching it never hits the unknown slots."""
    corpora = [
        [f"request served user={i} in {i}ms" for i in range(50)]
        + [f"cache hit key=k{i}" for i in range(50)]
    ]
    rng = np.random.default_rng(77)
    words = ["get", "put", "del", "user", "item", "idx", "ok", "warn"]
    for _ in range(10):
        corpus = []
        for _ in range(int(rng.integers(5, 80))):
            length = int(rng.integers(1, 7))
            corpus.append(
                " ".join(
                    words[rng.integers(len(words))]
                    if rng.random() < 0.7
                    else str(rng.integers(1000))
                    for _ in range(length)
                )
            )
        corpora.append(corpus)
    violations = 0
    for corpus in corpora:
        ts = mine_templates(corpus, 0.5)
        violations += sum(match_template(line, ts) > ts.size for line in corpus)
    _report(
        "criterion 9: templater totality",
        violations == 0,
        f"{violations} unknown-slot assignments across {len(corpora)} corpora",
    )


def test_criterion_10_simulate_determinism(tmp_path):
    """Identical simulate invocations produce byte-identical detection lists."""
    scenario_path = tmp_path / "scenario.json"
    scenario_path.write_text(
        json.dumps(
            {
                "level": 0.3,
                "total_windows": 120,
                "drift_start": 61,
                "duration": None,
                "repetitions": 5,
                "seed": 31337,
                "detector": {"window": 30, "grace": 20, "kappa_prior": 60.0},
            }
        )
    )
    outputs = []
    for name in ("first.jsonl", "second.jsonl"):
        out = tmp_path / name
        code = cli_main(
            [
                "simulate",
                "--scenario", str(scenario_path),
                "--synthetic",
                "--syn-templates", "8",
                "--syn-pool-size", "60",
                "--output", str(out),
            ]
        )
        assert code == 0
        outputs.append(out.read_bytes())
    _report(
        "criterion 10: simulate determinism",
        outputs[0] == outputs[1] and len(outputs[0]) > 0,
        f"{len(outputs[0])} bytes, identical across runs",
    )
