"""Configuration: file + environment + CLI flag precedence, and construction
of the shared clients (gateway, corpus, parser, embeddings) from one config.

Secrets are only ever read from environment variables.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .documents import (
    DocumentPipeline,
    FixturePdfFetcher,
    FixtureStructureParser,
    GrobidParser,
    GROBID_URL_ENV,
    HttpPdfFetcher,
    SectionHeuristics,
)
from .embeddings import EmbeddingBackend, FixtureEmbeddingBackend, RemoteEmbeddingBackend
from .errors import ValidationError
from .gateway import BackendDescriptor, BackendKind, LlmGateway
from .ratelimit import NullLimiter, RateLimiter
from .retrieval import (
    CallRecorder,
    FixtureCorpusTransport,
    RemoteCorpusTransport,
    ResponseCache,
    RetrievalBudget,
    S2_API_KEY_ENV,
    ScholarlyClient,
    UNPAYWALL_EMAIL_ENV,
)

CONFIG_ENV = "SCHOLAREVAL_CONFIG"


@dataclass(frozen=True)
class AppConfig:
    llm: BackendDescriptor
    corpus_kind: str = "remote"
    corpus_path: Optional[str] = None
    parser_kind: str = "grobid"
    parser_url: Optional[str] = None
    embedding_kind: str = "fixture"
    embedding_url: Optional[str] = None
    embedding_model: str = "fixture"
    embedding_dimension: int = 16
    budgets: RetrievalBudget = field(default_factory=RetrievalBudget)
    ablate_mre: bool = False
    ablate_pa: bool = False
    ablate_pc: bool = False
    relevance_threshold: int = 3
    embedding_top_n: int = 50
    rate_limit: int = 10
    rate_window: float = 1.0
    cache_dir: Optional[str] = None
    jobs_dir: str = "jobs"
    max_parallel: int = 4
    job_timeout: float = 1800.0
    heuristics_path: Optional[str] = None

    def with_overrides(self, **overrides: Any) -> "AppConfig":
        supplied = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **supplied) if supplied else self


def _backend_from_mapping(data: Mapping[str, Any]) -> BackendDescriptor:
    kind = BackendKind(data.get("kind", "remote_chat_api"))
    return BackendDescriptor(
        kind=kind,
        model=data.get("model", "unspecified"),
        timeout=float(data.get("timeout", 120.0)),
        max_retries=int(data.get("max_retries", 3)),
        temperature=float(data.get("temperature", 0.0)),
        max_tokens=data.get("max_tokens"),
        base_url=data.get("base_url"),
        api_key_env=data.get("api_key_env", "SCHOLAREVAL_LLM_API_KEY"),
        transcript_path=data.get("transcript"),
        max_in_flight=int(data.get("max_in_flight", 8)),
    )


def load_config(path: Optional[str | Path] = None) -> AppConfig:
    """Read the YAML config file; falls back to $SCHOLAREVAL_CONFIG."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        raise ValidationError(
            "no configuration supplied: pass --config or set SCHOLAREVAL_CONFIG"
        )
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}

    llm = _backend_from_mapping(data.get("llm", {}))
    corpus = data.get("corpus", {})
    parser = data.get("parser", {})
    embedding = data.get("embedding", {})
    budgets = RetrievalBudget(**data.get("budgets", {}))
    ablations = data.get("ablations", {})
    rate = data.get("rate_limit", {})
    return AppConfig(
        llm=llm,
        corpus_kind=corpus.get("kind", "remote"),
        corpus_path=corpus.get("path"),
        parser_kind=parser.get("kind", "grobid"),
        parser_url=parser.get("url"),
        embedding_kind=embedding.get("kind", "fixture"),
        embedding_url=embedding.get("base_url"),
        embedding_model=embedding.get("model", "fixture"),
        embedding_dimension=int(embedding.get("dimension", 16)),
        budgets=budgets,
        ablate_mre=bool(ablations.get("mre", False)),
        ablate_pa=bool(ablations.get("pa", False)),
        ablate_pc=bool(ablations.get("pc", False)),
        relevance_threshold=int(data.get("relevance_threshold", 3)),
        embedding_top_n=int(data.get("embedding_top_n", 50)),
        rate_limit=int(rate.get("limit", 10)),
        rate_window=float(rate.get("window", 1.0)),
        cache_dir=data.get("cache_dir"),
        jobs_dir=data.get("jobs_dir", "jobs"),
        max_parallel=int(data.get("max_parallel", 4)),
        job_timeout=float(data.get("job_timeout", 1800.0)),
        heuristics_path=data.get("heuristics_path"),
    )


@dataclass
class RunEnvironment:
    """Shared, thread-safe clients plus the run policy derived from config."""

    config: AppConfig
    gateway: LlmGateway
    scholarly: ScholarlyClient
    documents: DocumentPipeline
    embedding: EmbeddingBackend
    recorder: CallRecorder


def build_environment(
    config: AppConfig,
    gateway: Optional[LlmGateway] = None,
    recorder: Optional[CallRecorder] = None,
) -> RunEnvironment:
    recorder = recorder or CallRecorder()
    limiter: RateLimiter | NullLimiter
    if config.corpus_kind == "fixture":
        if not config.corpus_path:
            raise ValidationError("fixture corpus requires corpus.path")
        transport = FixtureCorpusTransport(config.corpus_path)
        limiter = NullLimiter()
    else:
        cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        transport = RemoteCorpusTransport(
            api_key=os.environ.get(S2_API_KEY_ENV, ""),
            contact_email=os.environ.get(UNPAYWALL_EMAIL_ENV, ""),
            cache=cache,
        )
        limiter = RateLimiter(config.rate_limit, config.rate_window)
    scholarly = ScholarlyClient(transport, limiter, recorder)

    heuristics = (
        SectionHeuristics.from_file(config.heuristics_path)
        if config.heuristics_path
        else SectionHeuristics()
    )
    if config.parser_kind == "fixture":
        if not isinstance(transport, FixtureCorpusTransport):
            raise ValidationError("fixture parser requires a fixture corpus")
        sections = {
            pid: record.get("fulltext", {})
            for pid, record in transport.papers.items()
            if record.get("fulltext")
        }
        documents_pipeline = DocumentPipeline(
            fetcher=FixturePdfFetcher(
                {
                    record.get("open_access_url"): FixtureStructureParser.encode(pid)
                    for pid, record in transport.papers.items()
                    if record.get("open_access_url")
                }
            ),
            parser=FixtureStructureParser(sections),
            heuristics=heuristics,
        )
    else:
        url = config.parser_url or os.environ.get(GROBID_URL_ENV, "")
        if not url:
            raise ValidationError(
                "structure-extraction service URL missing: set parser.url or GROBID_URL"
            )
        documents_pipeline = DocumentPipeline(
            fetcher=HttpPdfFetcher(),
            parser=GrobidParser(url, cache_dir=config.cache_dir),
            heuristics=heuristics,
        )

    if config.embedding_kind == "remote":
        if not config.embedding_url:
            raise ValidationError("remote embedding requires embedding.base_url")
        embedding: EmbeddingBackend = RemoteEmbeddingBackend(
            config.embedding_url,
            config.embedding_model,
            api_key=os.environ.get("SCHOLAREVAL_EMBEDDING_API_KEY", ""),
        )
    else:
        embedding = FixtureEmbeddingBackend(dimension=config.embedding_dimension)

    return RunEnvironment(
        config=config,
        gateway=gateway or LlmGateway(),
        scholarly=scholarly,
        documents=documents_pipeline,
        embedding=embedding,
        recorder=recorder,
    )


def parse_judge_descriptor(descriptor: str) -> BackendDescriptor:
    """``fixture:<transcript>[:model]`` or ``remote:<model>[:base_url]``."""
    parts = descriptor.split(":", 2)
    if parts[0] == "fixture":
        if len(parts) < 2:
            raise ValidationError("fixture judge needs a transcript path")
        return BackendDescriptor(
            kind=BackendKind.FIXTURE_REPLAY,
            model=parts[2] if len(parts) > 2 else "fixture-judge",
            transcript_path=parts[1],
        )
    if parts[0] == "remote":
        if len(parts) < 2:
            raise ValidationError("remote judge needs a model name")
        return BackendDescriptor(
            kind=BackendKind.REMOTE_CHAT_API,
            model=parts[1],
            base_url=parts[2] if len(parts) > 2 else None,
        )
    raise ValidationError(f"unknown judge descriptor kind: {parts[0]!r}")
