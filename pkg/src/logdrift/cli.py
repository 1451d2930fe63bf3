"""Command-line client for the drift-monitoring service.

Every subcommand is a thin wrapper: it reads/writes local files and calls
the HTTP API. By default requests are served by an in-process instance of
the application (no server needed); pass ``--server URL`` to target a
running deployment instead.

Exit codes: 0 success, 2 input/format error, 3 invariant violation,
4 detection (only with ``monitor --exit-on-detect``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import httpx

from .errors import DriftError, FormatError
from .io import (
    atomic_write_text,
    count_vectors_to_csv,
    count_vectors_to_jsonl,
    read_count_vectors,
    read_log_records,
    read_template_set,
)
from .core import CountVector

log = logging.getLogger("logdrift")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_DETECTED = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


class ServiceClient:
    """HTTP client; in-process app transport unless a server URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=300.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # The framework warns about its test-client transport at
                # import; irrelevant noise for the embedded CLI transport.
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import create_app

            self._client = TestClient(create_app())

    def close(self):
        self._client.close()

    def request(self, method: str, path: str, payload=None) -> dict:
        response = self._client.request(method, path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = {}
        if response.status_code >= 400:
            error = body.get("error", f"HTTP{response.status_code}")
            detail = body.get("detail", response.text)
            code = EXIT_INVARIANT if response.status_code == 409 else EXIT_INPUT
            raise CliError(f"{error}: {detail}", code)
        return body

    def post(self, path: str, payload) -> dict:
        return self.request("POST", path, payload)

    def get(self, path: str) -> dict:
        return self.request("GET", path)

    def delete(self, path: str) -> dict:
        return self.request("DELETE", path)


def _load_config_file(ns) -> dict:
    if not getattr(ns, "config", None):
        return {}
    try:
        payload = json.loads(Path(ns.config).read_text())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read config file: {exc}")
    if not isinstance(payload, dict):
        raise CliError("config file must contain a JSON object")
    return payload


def _opt(ns, cfg: dict, name: str, default):
    """Flag value if given, else config-file value, else default."""
    value = getattr(ns, name, None)
    if value is not None:
        return value
    return cfg.get(name, default)


def _flag(ns, cfg: dict, name: str) -> bool:
    return bool(getattr(ns, name, False) or cfg.get(name, False))


def _parse_window(value) -> int | None:
    if value is None:
        return None
    if isinstance(value, int):
        return value
    text = str(value).strip().lower()
    if text in ("inf", "infinity", "none", "unbounded"):
        return None
    try:
        return int(text)
    except ValueError as exc:
        raise CliError(f"bad --window value {value!r}") from exc


def _detector_config_payload(ns, cfg: dict) -> dict:
    window = _opt(ns, cfg, "window", 100)
    return {
        "window": _parse_window(window),
        "kappa_count": float(_opt(ns, cfg, "kappa_count", 1.0)),
        "kappa_prior": float(_opt(ns, cfg, "kappa_prior", 100.0)),
        "epsilon": float(_opt(ns, cfg, "epsilon", 1e-6)),
        "alpha": float(_opt(ns, cfg, "alpha", 0.05)),
        "grace": int(_opt(ns, cfg, "grace", 100)),
        "log_prior_odds": float(_opt(ns, cfg, "b0", 0.0)),
        "lag_compat": _flag(ns, cfg, "lag_compat"),
    }


def _read_text_file(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")


def _read_json_file(path: str):
    try:
        return json.loads(_read_text_file(path))
    except ValueError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}")


def _write_output(path: str | None, text: str):
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _records_payload(ns) -> list[dict]:
    records = read_log_records(ns.input, getattr(ns, "log_format", None), getattr(ns, "ts_pattern", None))
    if not records:
        raise CliError(f"no log records in {ns.input}")
    return [{"ts": r.timestamp_ms, "msg": r.message} for r in records]


def _vectors_payload(vectors: list[CountVector]) -> list[dict]:
    return [{"t": v.t, "counts": v.values.tolist()} for v in vectors]


def _template_set_payload(path: str) -> dict:
    ts = read_template_set(path)
    return {
        "templates": [{"id": t.id, "pattern": t.pattern} for t in ts.templates],
        "error_keywords": list(ts.error_keywords),
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_templates(ns, client: ServiceClient) -> int:
    cfg = _load_config_file(ns)
    payload = {
        "lines": [r["msg"] for r in _records_payload(ns)],
        "similarity_threshold": float(_opt(ns, cfg, "similarity_threshold", 0.5)),
        "preprocess": not _flag(ns, cfg, "no_preprocess"),
        "prefix_patterns": ns.prefix_pattern or cfg.get("prefix_patterns", []),
    }
    keywords = _opt(ns, cfg, "error_keywords", None)
    if keywords is not None:
        if isinstance(keywords, str):
            keywords = [k.strip() for k in keywords.split(",") if k.strip()]
        payload["error_keywords"] = keywords
    body = client.post("/templates/mine", payload)
    template_set = {
        "templates": [
            {"id": t["id"], "pattern": t["pattern"]}
            for t in body["template_set"]["templates"]
        ],
        "error_keywords": body["template_set"]["error_keywords"],
    }
    _write_output(ns.output, json.dumps(template_set, indent=2) + "\n")
    report_text = json.dumps(body["report"], indent=2) + "\n"
    if ns.report:
        atomic_write_text(ns.report, report_text)
    else:
        sys.stdout.write(report_text)
    return EXIT_OK


def cmd_vectors(ns, client: ServiceClient) -> int:
    cfg = _load_config_file(ns)
    payload = {
        "records": _records_payload(ns),
        "template_set": _template_set_payload(ns.templates),
        "window_seconds": float(_opt(ns, cfg, "window_seconds", 10.0)),
        "preprocess": not _flag(ns, cfg, "no_preprocess"),
        "prefix_patterns": ns.prefix_pattern or cfg.get("prefix_patterns", []),
        "sort": not _flag(ns, cfg, "assume_sorted"),
        "training": _flag(ns, cfg, "training"),
    }
    body = client.post("/vectors", payload)
    vectors = [
        CountVector(v["counts"], t=v["t"]) for v in body["vectors"]
    ]
    fmt = _opt(ns, cfg, "format", "jsonl")
    if fmt == "csv":
        _write_output(ns.output, count_vectors_to_csv(vectors))
    elif fmt == "jsonl":
        _write_output(ns.output, count_vectors_to_jsonl(vectors))
    else:
        raise CliError(f"unknown output format {fmt!r}")
    return EXIT_OK


def cmd_fit(ns, client: ServiceClient) -> int:
    template_set = read_template_set(ns.templates) if ns.templates else None
    vectors = read_count_vectors(ns.input, template_set=template_set, integer=True)
    body = client.post("/fit", {"vectors": _vectors_payload(vectors)})
    _write_output(ns.output, json.dumps(body, indent=2) + "\n")
    return EXIT_OK


def _monitor_vectors(ns, client: ServiceClient, cfg: dict) -> list[dict]:
    if ns.raw_logs:
        if not ns.templates:
            raise CliError("--raw-logs requires --templates")
        records = read_log_records(ns.raw_logs, ns.log_format, ns.ts_pattern)
        payload = {
            "records": [{"ts": r.timestamp_ms, "msg": r.message} for r in records],
            "template_set": _template_set_payload(ns.templates),
            "window_seconds": float(_opt(ns, cfg, "window_seconds", 10.0)),
            "preprocess": not _flag(ns, cfg, "no_preprocess"),
            "prefix_patterns": ns.prefix_pattern or cfg.get("prefix_patterns", []),
            "sort": not _flag(ns, cfg, "assume_sorted"),
        }
        return client.post("/vectors", payload)["vectors"]
    if not ns.input:
        raise CliError("monitor requires --input or --raw-logs")
    template_set = read_template_set(ns.templates) if ns.templates else None
    vectors = read_count_vectors(ns.input, template_set=template_set)
    return _vectors_payload(vectors)


def cmd_monitor(ns, client: ServiceClient) -> int:
    cfg = _load_config_file(ns)
    config_payload = _detector_config_payload(ns, cfg)
    create_payload: dict = {"config": config_payload}
    if ns.load_state:
        create_payload["checkpoint"] = _read_json_file(ns.load_state)
    elif ns.prior:
        prior = _read_json_file(ns.prior)
        if not isinstance(prior, dict) or ("alpha" not in prior and "probs" not in prior):
            raise CliError("prior file must contain 'alpha' or 'probs'")
        create_payload["prior"] = {
            "alpha": prior.get("alpha"),
            "probs": prior.get("probs"),
            "kappa_prior": config_payload["kappa_prior"],
            "epsilon": config_payload["epsilon"],
        }
    else:
        raise CliError("monitor requires --prior or --load-state")

    vectors = _monitor_vectors(ns, client, cfg)
    created = client.post("/detectors", create_payload)
    detector_id = created["detector_id"]
    lines: list[str] = []
    streaming = ns.output is None

    def emit(record: dict):
        line = json.dumps(record)
        if streaming:
            print(line, flush=True)
        else:
            lines.append(line)

    exit_code = EXIT_OK
    first = 0
    try:
        emit(
            {
                "threshold": created["threshold"],
                "alpha": config_payload["alpha"],
                "window": config_payload["window"],
                "grace": config_payload["grace"],
            }
        )
        chunk = max(1, ns.chunk_size)
        done = False
        for start in range(0, len(vectors), chunk):
            if done:
                break
            body = client.post(
                f"/detectors/{detector_id}/observe",
                {"vectors": vectors[start : start + chunk]},
            )
            for result in body["results"]:
                if result.get("skipped"):
                    emit({"t": result["t"], "skipped": True})
                    continue
                emit(
                    {
                        "t": result["t"],
                        "log_bf": result["log_bf"],
                        "flagged": result["flagged"],
                    }
                )
                if result["flagged"] and not first:
                    first = result["t"]
                    if ns.exit_on_detect:
                        exit_code = EXIT_DETECTED
                        done = True
                        break
        emit({"first_detection": first})
        if ns.save_state:
            snapshot = client.get(f"/detectors/{detector_id}")
            atomic_write_text(ns.save_state, json.dumps(snapshot) + "\n")
    finally:
        try:
            client.delete(f"/detectors/{detector_id}")
        except CliError:
            log.debug("could not delete detector session %s", detector_id)
    if not streaming:
        atomic_write_text(ns.output, "\n".join(lines) + "\n")
    return exit_code


def cmd_simulate(ns, client: ServiceClient) -> int:
    cfg = _load_config_file(ns)
    scenario = _read_json_file(ns.scenario)
    if not isinstance(scenario, dict):
        raise CliError("scenario file must contain a JSON object")
    if ns.seed is not None:
        scenario["seed"] = ns.seed
    payload: dict = {"scenario": scenario, "emit_traces": bool(ns.emit_traces)}
    if ns.synthetic:
        payload["synthetic"] = {
            "num_templates": int(_opt(ns, cfg, "syn_templates", 10)),
            "lines_per_window": int(_opt(ns, cfg, "syn_lines", 200)),
            "pool_size": int(_opt(ns, cfg, "syn_pool_size", 200)),
            "overlap": float(_opt(ns, cfg, "syn_overlap", 0.0)),
            "seed": int(_opt(ns, cfg, "syn_seed", 0)),
        }
    elif ns.pool_n and ns.pool_a:
        payload["normal_pool"] = _vectors_payload(read_count_vectors(ns.pool_n))
        payload["anomalous_pool"] = _vectors_payload(read_count_vectors(ns.pool_a))
    else:
        raise CliError("simulate requires --pool-n/--pool-a or --synthetic")
    body = client.post("/simulate", payload)
    out = "\n".join(json.dumps({"r": d["r"], "d": d["d"]}) for d in body["detections"]) + "\n"
    _write_output(ns.output, out)
    if ns.emit_traces:
        directory = Path(ns.emit_traces)
        directory.mkdir(parents=True, exist_ok=True)
        for detection, trace in zip(body["detections"], body["traces"]):
            text = "\n".join(
                json.dumps({"t": e["t"], "log_bf": e["log_bf"], "flagged": e["flagged"]})
                for e in trace
            )
            atomic_write_text(directory / f"run_{detection['r']:04d}.jsonl", text + "\n")
    return EXIT_OK


def _read_detections(path: str) -> list[int]:
    detections = []
    for line in _read_text_file(path).splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            value = json.loads(line)
        except ValueError as exc:
            raise CliError(f"bad detections line {line!r}: {exc}")
        if isinstance(value, dict):
            if "d" not in value:
                raise CliError(f"detections record missing 'd': {line!r}")
            detections.append(int(value["d"]))
        elif isinstance(value, int):
            detections.append(value)
        else:
            raise CliError(f"bad detections line {line!r}")
    if not detections:
        raise CliError(f"no detections in {path}")
    return detections


def cmd_eval(ns, client: ServiceClient) -> int:
    cfg = _load_config_file(ns)
    drift_start = _opt(ns, cfg, "drift_start", None)
    if drift_start is None:
        raise CliError("--drift-start is required")
    payload = {
        "detections": _read_detections(ns.detections),
        "drift_start": int(drift_start),
        "grace": int(_opt(ns, cfg, "grace", 100)),
    }
    body = client.post("/evaluate", payload)
    _write_output(ns.output, json.dumps(body, indent=2) + "\n")
    return EXIT_OK


def cmd_serve(ns, client: ServiceClient) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=ns.host, port=ns.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--server", help="service URL (default: run in-process)")
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--quiet", action="store_true", help="log errors only")
    parser.add_argument("--verbose", action="store_true", help="debug logging")


def _add_log_options(parser: argparse.ArgumentParser):
    parser.add_argument("--log-format", choices=["text", "jsonl"], default=None,
                        help="raw log format (default: sniffed)")
    parser.add_argument("--ts-pattern", default=None,
                        help="regex with named groups 'ts' and 'msg' for text logs")
    parser.add_argument("--prefix-pattern", action="append", default=None,
                        help="prefix regex stripped during preprocessing (repeatable)")
    parser.add_argument("--no-preprocess", action="store_true",
                        help="feed messages through without cleaning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logdrift",
        description="Log template count vectors and windowed Bayes-factor drift monitoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("templates", help="mine a template set from raw logs")
    _add_common(p)
    _add_log_options(p)
    p.add_argument("--input", required=True, help="raw log file")
    p.add_argument("--similarity-threshold", type=float, default=None)
    p.add_argument("--error-keywords", default=None, help="comma-separated keyword list")
    p.add_argument("--output", required=True, help="template set JSON path")
    p.add_argument("--report", help="mining report path (default: stdout)")
    p.set_defaults(func=cmd_templates)

    p = sub.add_parser("vectors", help="extract windowed count vectors from raw logs")
    _add_common(p)
    _add_log_options(p)
    p.add_argument("--input", required=True, help="raw log file")
    p.add_argument("--templates", required=True, help="template set JSON")
    p.add_argument("--window-seconds", type=float, default=None)
    p.add_argument("--training", action="store_true",
                   help="require zero unknown-slot counts (exit 3 otherwise)")
    p.add_argument("--assume-sorted", action="store_true",
                   help="trust input order; error on regressions instead of sorting")
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("fit", help="chi-squared multinomial fit test on raw count vectors")
    _add_common(p)
    p.add_argument("--input", required=True, help="count vector CSV/JSONL (raw integer counts)")
    p.add_argument("--templates", help="template set JSON for length validation")
    p.add_argument("--output", help="fit report JSON path (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("monitor", help="stream count vectors through a drift detector")
    _add_common(p)
    _add_log_options(p)
    p.add_argument("--input", help="count vector CSV/JSONL")
    p.add_argument("--raw-logs", help="raw log file (routed through vector extraction)")
    p.add_argument("--templates", help="template set JSON")
    p.add_argument("--window-seconds", type=float, default=None)
    p.add_argument("--assume-sorted", action="store_true")
    p.add_argument("--prior", help="prior JSON: {'alpha': [...]} or {'probs': [...]}")
    p.add_argument("--kappa-prior", type=float, default=None)
    p.add_argument("--window", default=None, help="window size or 'inf'")
    p.add_argument("--kappa-count", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--grace", type=int, default=None)
    p.add_argument("--b0", type=float, default=None, help="log prior odds")
    p.add_argument("--lag-compat", action="store_true",
                   help="replay the one-step-delayed emission order")
    p.add_argument("--exit-on-detect", action="store_true",
                   help="stop and exit 4 at the first flagged step")
    p.add_argument("--save-state", help="write detector checkpoint JSON on completion")
    p.add_argument("--load-state", help="resume from a detector checkpoint JSON")
    p.add_argument("--chunk-size", type=int, default=500)
    p.add_argument("--output", help="trace JSONL path (default: stream to stdout)")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", help="run contamination scenarios against the detector")
    _add_common(p)
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--pool-n", help="baseline pool count vectors")
    p.add_argument("--pool-a", help="anomalous pool count vectors")
    p.add_argument("--synthetic", action="store_true",
                   help="generate pools from two multinomials instead of files")
    p.add_argument("--syn-templates", type=int, default=None)
    p.add_argument("--syn-lines", type=int, default=None)
    p.add_argument("--syn-pool-size", type=int, default=None)
    p.add_argument("--syn-overlap", type=float, default=None)
    p.add_argument("--syn-seed", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--emit-traces", help="directory for per-run trace JSONL files")
    p.add_argument("--output", help="detections JSONL path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="detection-quality metrics from a detections file")
    _add_common(p)
    p.add_argument("--detections", required=True, help="JSONL of {'r':..,'d':..} records")
    p.add_argument("--drift-start", type=int, default=None, help="contamination onset window")
    p.add_argument("--grace", type=int, default=None)
    p.add_argument("--output", help="metrics JSON path (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    level = logging.DEBUG if getattr(ns, "verbose", False) else (
        logging.ERROR if getattr(ns, "quiet", False) else logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    if not getattr(ns, "verbose", False):
        logging.getLogger("httpx").setLevel(logging.WARNING)
    client = None
    try:
        if ns.func is not cmd_serve:
            client = ServiceClient(getattr(ns, "server", None))
        return ns.func(ns, client)
    except CliError as exc:
        log.error(str(exc))
        return exc.code
    except BrokenPipeError:
        # Downstream consumer (e.g. head) closed the stream; not an error.
        import os

        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except FormatError as exc:
        log.error(str(exc))
        return EXIT_INPUT
    except DriftError as exc:
        log.error(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        log.error(str(exc))
        return EXIT_INPUT
    finally:
        if client is not None:
            client.close()


if __name__ == "__main__":
    sys.exit(main())
