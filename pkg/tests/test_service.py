import json
import time

import pytest
from fastapi.testclient import TestClient

from scholareval.config import build_environment
from scholareval.jobs import JobRunner, JobStore
from scholareval.service import create_app

from conftest import make_config
import corpusgen


@pytest.fixture()
def client(bundle, tmp_path):
    config = make_config(
        bundle["transcript"], bundle["corpus"], tmp_path / "jobs"
    )
    app = create_app(config)
    with TestClient(app) as test_client:
        yield test_client
    app.state.runner.shutdown()


def _submit(client, **overrides):
    payload = {
        "idea_text": corpusgen.IDEA_TEXT,
        "idea_id": "idea",
        "cutoff_date": "2024-06-01",
        "modules": ["soundness", "contribution"],
    }
    payload.update(overrides)
    return client.post("/evaluations", json=payload)


def _wait_done(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/evaluations/{job_id}").json()["state"]
        if state in ("done", "failed"):
            return state
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


class TestSubmit:
    def test_valid_submission_queues_job(self, client):
        response = _submit(client)
        assert response.status_code == 202
        job_id = response.json()["job_id"]
        assert _wait_done(client, job_id) == "done"

    def test_empty_idea_rejected(self, client):
        response = _submit(client, idea_text="   ")
        assert response.status_code == 400

    def test_invalid_date_rejected(self, client):
        response = _submit(client, cutoff_date="June 2024")
        assert response.status_code == 400

    def test_unknown_module_rejected(self, client):
        response = _submit(client, modules=["soundness", "novelty"])
        assert response.status_code == 400

    def test_idempotent_resubmission_returns_same_job(self, client):
        first = _submit(client).json()["job_id"]
        second = _submit(client).json()["job_id"]
        assert first == second

    def test_cache_disabled_returns_fresh_job(self, client):
        first = _submit(client, use_cache=False).json()["job_id"]
        second = _submit(client, use_cache=False).json()["job_id"]
        assert first != second


class TestJobState:
    def test_unknown_job_404(self, client):
        assert client.get("/evaluations/nope").status_code == 404

    def test_state_payload_fields(self, client):
        job_id = _submit(client).json()["job_id"]
        _wait_done(client, job_id)
        payload = client.get(f"/evaluations/{job_id}").json()
        assert payload["idea_id"] == "idea"
        assert payload["modules"] == ["soundness", "contribution"]
        assert payload["finished_at"] is not None


class TestEvents:
    def test_replay_after_completion_covers_stages(self, client):
        job_id = _submit(client).json()["job_id"]
        _wait_done(client, job_id)
        response = client.get(f"/evaluations/{job_id}/events")
        assert response.status_code == 200
        stages = [
            json.loads(line[len("data: "):])["stage"]
            for line in response.text.splitlines()
            if line.startswith("data: ")
        ]
        for expected in (
            "soundness:method_extraction",
            "soundness:retrieval",
            "soundness:summarization",
            "soundness:synthesis",
            "contribution:dimension_extraction",
            "contribution:discovery",
            "contribution:relevance",
            "contribution:augmentation",
            "contribution:filtering",
            "contribution:comparison",
            "contribution:synthesis",
            "citation_audit",
        ):
            assert any(s.startswith(expected) for s in stages), expected
        assert stages[-1] == "terminal"
        # Two methods ran, so the retrieval stage appears once per method.
        assert sum(1 for s in stages if s == "soundness:retrieval") == 2

    def test_events_for_unknown_job_404(self, client):
        assert client.get("/evaluations/nope/events").status_code == 404

    def test_failed_run_has_terminal_failed_event(self, client, bundle, tmp_path):
        job_id = _submit(client, modules=["soundness"], idea_text="no methods here").json()["job_id"]
        assert _wait_done(client, job_id) == "failed"
        response = client.get(f"/evaluations/{job_id}/events")
        lines = [l for l in response.text.splitlines() if l.startswith("data: ")]
        last = json.loads(lines[-1][len("data: "):])
        assert last["stage"] == "terminal"
        assert "failed" in last["detail"]


class TestReport:
    def test_markdown_and_structured_forms(self, client):
        job_id = _submit(client).json()["job_id"]
        _wait_done(client, job_id)
        markdown = client.get(f"/evaluations/{job_id}/report?format=markdown")
        assert markdown.status_code == 200
        assert "## Soundness" in markdown.text
        structured = client.get(f"/evaluations/{job_id}/report?format=structured")
        assert structured.status_code == 200
        body = structured.json()
        assert body["idea_id"] == "idea"
        assert body["run_manifest"]["ablations"] == {"mre": False, "pa": False, "pc": False}
        assert len(body["soundness_sections"]) == 2

    def test_pending_job_conflicts(self, bundle, tmp_path):
        config = make_config(bundle["transcript"], bundle["corpus"], tmp_path / "jobs2")

        class StalledRunner:
            def submit(self, job_id):
                return None

            def shutdown(self):
                return None

        store = JobStore(tmp_path / "jobs2")
        app = create_app(config, store=store, runner=StalledRunner())
        with TestClient(app) as test_client:
            job_id = _submit(test_client).json()["job_id"]
            response = test_client.get(f"/evaluations/{job_id}/report")
            assert response.status_code == 409

    def test_unknown_job_404(self, client):
        assert client.get("/evaluations/nope/report").status_code == 404

    def test_unknown_format_400(self, client):
        job_id = _submit(client).json()["job_id"]
        _wait_done(client, job_id)
        assert client.get(f"/evaluations/{job_id}/report?format=pdf").status_code == 400
