"""Shared fixtures: fixture corpora, recorded transcripts, configs, and a
local status-code HTTP server.

Transcripts are recorded once per session by running the real pipeline with a
deterministic scripted responder; every test after that replays them through
the read-only fixture backend.
"""

from __future__ import annotations

import http.server
import json
import threading
import time
from pathlib import Path

import pytest
import yaml

from scholareval.config import AppConfig, build_environment
from scholareval.gateway import BackendDescriptor, BackendKind, LlmGateway
from scholareval.models import ResearchIdea, parse_partial_date
from scholareval.runner import run_evaluation

import corpusgen
from scripted import respond

CUTOFF = corpusgen.CUTOFF


def make_config(
    transcript: Path,
    corpus: Path,
    jobs_dir: Path,
    **overrides,
) -> AppConfig:
    base = AppConfig(
        llm=BackendDescriptor(
            kind=BackendKind.FIXTURE_REPLAY,
            model="scripted-v1",
            transcript_path=str(transcript),
        ),
        corpus_kind="fixture",
        corpus_path=str(corpus),
        parser_kind="fixture",
        embedding_kind="fixture",
        embedding_dimension=16,
        jobs_dir=str(jobs_dir),
        max_parallel=4,
    )
    return base.with_overrides(**overrides)


@pytest.fixture(scope="session")
def bundle(tmp_path_factory) -> dict:
    """Corpora, idea file, recorded transcript, and a CLI config file."""
    root = tmp_path_factory.mktemp("fixture-bundle")
    corpus_path = corpusgen.build_e2e_corpus().write(root / "corpus.json")
    oversupply_path = corpusgen.build_oversupply_corpus().write(root / "oversupply.json")
    idea_path = root / "idea.txt"
    idea_path.write_text(corpusgen.IDEA_TEXT, encoding="utf-8")
    transcript = root / "transcript.jsonl"

    idea = ResearchIdea(
        id="idea", text=corpusgen.IDEA_TEXT, cutoff_date=parse_partial_date(CUTOFF)
    )
    recording_gateway = LlmGateway(fixture_responder=respond)

    def record(corpus: Path, **overrides) -> None:
        config = make_config(transcript, corpus, root / "jobs", **overrides)
        env = build_environment(config, gateway=recording_gateway)
        run_evaluation(idea, ["soundness", "contribution"], env)

    record(corpus_path)
    record(corpus_path, ablate_mre=True)
    record(corpus_path, ablate_pa=True)
    record(corpus_path, ablate_pc=True)
    record(oversupply_path)

    config_path = root / "config.yaml"
    config_path.write_text(
        yaml.safe_dump(
            {
                "llm": {
                    "kind": "fixture_replay",
                    "model": "scripted-v1",
                    "transcript": str(transcript),
                },
                "corpus": {"kind": "fixture", "path": str(corpus_path)},
                "parser": {"kind": "fixture"},
                "embedding": {"kind": "fixture", "dimension": 16},
            }
        ),
        encoding="utf-8",
    )
    return {
        "root": root,
        "corpus": corpus_path,
        "oversupply": oversupply_path,
        "idea_path": idea_path,
        "idea": idea,
        "transcript": transcript,
        "config_path": config_path,
    }


@pytest.fixture()
def replay_env_factory(bundle, tmp_path):
    """Build a fresh replay environment (read-only transcript) per call."""

    def factory(corpus: Path | None = None, gateway: LlmGateway | None = None, **overrides):
        config = make_config(
            bundle["transcript"],
            corpus or bundle["corpus"],
            tmp_path / "jobs",
            **overrides,
        )
        return build_environment(config, gateway=gateway)

    return factory


@pytest.fixture()
def scripted_gateway(tmp_path):
    """Gateway whose fixture backend answers any prompt via the scripted model,
    recording into a test-local transcript."""
    transcript = tmp_path / "scratch-transcript.jsonl"
    gateway = LlmGateway(fixture_responder=respond)
    backend = BackendDescriptor(
        kind=BackendKind.FIXTURE_REPLAY,
        model="scripted-v1",
        transcript_path=str(transcript),
    )
    return gateway, backend


class StatusHandler(http.server.BaseHTTPRequestHandler):
    """Serves /NNN as status NNN, /timeout as a slow response, /redirect404
    as a redirect chain ending in 404, /head405 as HEAD-rejecting."""

    def _respond(self):
        path = self.path.strip("/").split("?")[0]
        if path == "timeout":
            time.sleep(2.0)
            self.send_response(200)
            self.end_headers()
            return
        if path == "redirect404":
            self.send_response(302)
            self.send_header("Location", "/404")
            self.end_headers()
            return
        if path == "head405":
            self.send_response(405 if self.command == "HEAD" else 200)
            self.end_headers()
            return
        self.send_response(int(path))
        self.end_headers()

    do_GET = _respond
    do_HEAD = _respond

    def log_message(self, *args):
        pass


@pytest.fixture(scope="session")
def status_server():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), StatusHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


@pytest.fixture()
def canned_gateway(tmp_path):
    """Factory for a gateway+backend that replays explicit canned responses."""
    counter = iter(range(10_000))

    def factory(responses: list[str]):
        transcript = tmp_path / f"canned-{next(counter)}.jsonl"
        queue = list(responses)

        def responder(prompt: str) -> str:
            if not queue:
                raise AssertionError("canned responder exhausted")
            return queue.pop(0)

        gateway = LlmGateway(fixture_responder=responder)
        backend = BackendDescriptor(
            kind=BackendKind.FIXTURE_REPLAY,
            model="canned",
            transcript_path=str(transcript),
        )
        return gateway, backend

    return factory
