import math

import numpy as np
import pytest

from logdrift import CountVector, DetectorConfig, DirichletState, run, first_detection


def vector_models(vectors):
    return [{"t": v.t, "counts": v.values.tolist()} for v in vectors]


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"


class TestMine:
    def test_mine_and_report(self, client):
        payload = {
            "lines": [
                "2020-01-02T03:04:05Z get user 1",
                "2020-01-02T03:04:06Z get user 2",
                "2020-01-02T03:04:07Z put item x y",
                "   ",
            ],
            "similarity_threshold": 0.5,
        }
        body = client.post("/templates/mine", json=payload).json()
        patterns = [t["pattern"] for t in body["template_set"]["templates"]]
        assert "<TS> get user <*>" in patterns
        assert body["report"]["k"] == 2
        assert body["report"]["lines_dropped"] == 1
        assert sum(t["count"] for t in body["report"]["templates"]) == 3

    def test_empty_corpus_maps_to_422(self, client):
        response = client.post("/templates/mine", json={"lines": ["   "]})
        assert response.status_code == 422
        assert response.json()["error"] == "EmptyCorpus"


class TestVectors:
    def template_set(self):
        return {
            "templates": [{"id": 1, "pattern": "request served <*>"}],
            "error_keywords": ["error"],
        }

    def test_extraction(self, client):
        records = [
            {"ts": 0, "msg": "request served user-1"},
            {"ts": 5000, "msg": "request served user-2"},
            {"ts": 12_000, "msg": "request served user-3"},
        ]
        body = client.post(
            "/vectors",
            json={"records": records, "template_set": self.template_set(), "preprocess": False},
        ).json()
        assert [v["t"] for v in body["vectors"]] == [0, 1]
        assert body["vectors"][0]["counts"] == [2.0, 0.0, 0.0]

    def test_training_violation_is_409(self, client):
        records = [{"ts": 0, "msg": "totally unseen line"}]
        response = client.post(
            "/vectors",
            json={
                "records": records,
                "template_set": self.template_set(),
                "preprocess": False,
                "training": True,
            },
        )
        assert response.status_code == 409
        assert response.json()["error"] == "TrainingUnknownViolation"

    def test_unsorted_without_sort_is_422(self, client):
        records = [
            {"ts": 5000, "msg": "request served user-1"},
            {"ts": 0, "msg": "request served user-2"},
        ]
        response = client.post(
            "/vectors",
            json={
                "records": records,
                "template_set": self.template_set(),
                "preprocess": False,
                "sort": False,
            },
        )
        assert response.status_code == 422
        assert response.json()["error"] == "UnsortedInput"

    def test_sort_default_handles_unordered(self, client):
        records = [
            {"ts": 5000, "msg": "request served user-1"},
            {"ts": 0, "msg": "request served user-2"},
        ]
        body = client.post(
            "/vectors",
            json={"records": records, "template_set": self.template_set(), "preprocess": False},
        ).json()
        assert body["vectors"][0]["counts"][0] == 2.0


class TestFit:
    def test_fit(self, client):
        body = client.post(
            "/fit",
            json={"vectors": vector_models([CountVector([1, 1]), CountVector([2, 2])])},
        ).json()
        assert body["statistic"] == 0.0
        assert body["df"] == 1
        assert body["p_value"] == 1.0

    def test_degenerate_is_422(self, client):
        response = client.post(
            "/fit", json={"vectors": vector_models([CountVector([1, 2])])}
        )
        assert response.status_code == 422
        assert response.json()["error"] == "DegenerateSample"


class TestDetectorSessions:
    def create(self, client, **config):
        payload = {
            "prior": {"probs": [0.5, 0.5, 0.0, 0.0], "kappa_prior": 10.0},
            "config": {"window": 10, "grace": 0, "kappa_prior": 10.0, **config},
        }
        body = client.post("/detectors", json=payload).json()
        return body["detector_id"], body

    def test_create_reports_threshold(self, client):
        _, body = self.create(client, alpha=0.05)
        assert body["threshold"] == pytest.approx(math.log(20.0), abs=1e-9)
        assert body["dim"] == 4

    def test_observe_and_skip(self, client):
        detector_id, _ = self.create(client)
        vectors = vector_models(
            [CountVector([1, 0, 0, 0]), CountVector([0, 0, 0, 0]), CountVector([0, 1, 0, 0])]
        )
        body = client.post(f"/detectors/{detector_id}/observe", json={"vectors": vectors}).json()
        results = body["results"]
        assert [r["t"] for r in results] == [1, 2, 3]
        assert results[1]["skipped"] is True
        assert results[0]["skipped"] is False
        assert isinstance(results[0]["log_bf"], float)

    def test_checkpoint_restore_matches_uninterrupted(self, client):
        rng = np.random.default_rng(6)
        stream = [CountVector(rng.uniform(0.05, 1.0, 4)) for _ in range(30)]

        detector_id, _ = self.create(client)
        first_half = client.post(
            f"/detectors/{detector_id}/observe",
            json={"vectors": vector_models(stream[:15])},
        ).json()["results"]
        snapshot = client.get(f"/detectors/{detector_id}").json()
        assert snapshot["t"] == 15

        restored = client.post("/detectors", json={"checkpoint": snapshot}).json()
        second_half = client.post(
            f"/detectors/{restored['detector_id']}/observe",
            json={"vectors": vector_models(stream[15:])},
        ).json()["results"]

        uninterrupted_id, _ = self.create(client)
        full = client.post(
            f"/detectors/{uninterrupted_id}/observe",
            json={"vectors": vector_models(stream)},
        ).json()["results"]
        assert [r["log_bf"] for r in first_half + second_half] == [r["log_bf"] for r in full]

    def test_delete_and_404(self, client):
        detector_id, _ = self.create(client)
        assert client.delete(f"/detectors/{detector_id}").status_code == 200
        assert client.get(f"/detectors/{detector_id}").status_code == 404
        assert client.delete(f"/detectors/{detector_id}").status_code == 404

    def test_create_requires_prior_or_checkpoint(self, client):
        response = client.post("/detectors", json={})
        assert response.status_code == 422


class TestRunEndpoint:
    def test_matches_library(self, client):
        rng = np.random.default_rng(12)
        stream = [CountVector(rng.uniform(0.05, 1.0, 3)) for _ in range(25)]
        prior_alpha = [2.0, 1.0, 0.5]
        config = DetectorConfig(window=8, grace=2)
        body = client.post(
            "/run",
            json={
                "prior": {"alpha": prior_alpha},
                "config": {"window": 8, "grace": 2},
                "vectors": vector_models(stream),
            },
        ).json()
        trace = run(DirichletState(np.array(prior_alpha)), stream, config)
        assert [e["log_bf"] for e in body["trace"]] == [e.log_bf for e in trace]
        assert body["first_detection"] == first_detection(trace, config)


class TestSimulateAndEvaluate:
    def scenario(self):
        return {
            "level": 0.3,
            "total_windows": 60,
            "drift_start": 31,
            "duration": None,
            "repetitions": 3,
            "seed": 5,
            "detector": {"window": 20, "grace": 10, "kappa_prior": 50.0},
        }

    def test_simulate_synthetic_deterministic(self, client):
        payload = {
            "scenario": self.scenario(),
            "synthetic": {"num_templates": 8, "lines_per_window": 150, "pool_size": 50,
                          "overlap": 0.0, "seed": 3},
            "emit_traces": True,
        }
        a = client.post("/simulate", json=payload).json()
        b = client.post("/simulate", json=payload).json()
        assert a["detections"] == b["detections"]
        assert a["traces"] == b["traces"]
        assert len(a["detections"]) == 3
        assert all(d["d"] >= 31 for d in a["detections"])
        assert len(a["traces"][0]) == 60

    def test_simulate_requires_pools_or_synthetic(self, client):
        response = client.post("/simulate", json={"scenario": self.scenario()})
        assert response.status_code == 422

    def test_evaluate(self, client):
        body = client.post(
            "/evaluate",
            json={"detections": [0, 450, 520, 700], "drift_start": 501, "grace": 100},
        ).json()
        assert body == {"tpr": 0.5, "fpr": 0.25, "fnr": 0.25, "add": 109.0}

    def test_evaluate_add_null(self, client):
        body = client.post(
            "/evaluate", json={"detections": [0, 0], "drift_start": 501, "grace": 100}
        ).json()
        assert body["add"] is None

    def test_invalid_detection_is_422(self, client):
        response = client.post(
            "/evaluate", json={"detections": [50], "drift_start": 501, "grace": 100}
        )
        assert response.status_code == 422
        assert response.json()["error"] == "InvalidDetection"
