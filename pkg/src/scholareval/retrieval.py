"""Clients for the scholarly-corpus endpoints: snippet search, paper relevance
search, recommendations, references, paper details, and open-access fallback.

A transport fetches raw records (remote HTTP or a local fixture corpus); the
client owns cutoff filtering, truncation to budget, provenance stamping,
deduplication, rate limiting and caching, so those behaviors are identical
online and offline.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Protocol, Sequence

import requests

from .errors import (
    NotFoundError,
    RateLimitExceededError,
    RetrievalError,
    ValidationError,
)
from .models import PaperEvidence, Provenance, parse_partial_date
from .ratelimit import NullLimiter, RateLimiter

log = logging.getLogger(__name__)

S2_API_KEY_ENV = "S2_API_KEY"
UNPAYWALL_EMAIL_ENV = "UNPAYWALL_EMAIL"

DEFAULT_S2_BASE = "https://api.semanticscholar.org"
DEFAULT_UNPAYWALL_BASE = "https://api.unpaywall.org/v2"

PAPER_FIELDS = "title,authors,abstract,publicationDate,year,url,openAccessPdf,externalIds"


@dataclass(frozen=True)
class SnippetHit:
    """One passage hit plus the papers it references."""

    snippet: str
    source_paper_id: str
    referenced_paper_ids: tuple[str, ...] = ()
    source_date: Optional[dt.date] = None

    def __post_init__(self):
        if not self.snippet or not self.snippet.strip():
            raise ValidationError("snippet text must be non-empty")
        seen: dict[str, None] = {}
        for pid in self.referenced_paper_ids:
            seen.setdefault(pid)
        object.__setattr__(self, "referenced_paper_ids", tuple(seen))


@dataclass(frozen=True)
class RetrievalBudget:
    """Per-stage retrieval ceilings."""

    snippet_queries_per_method: int = 1
    snippets_per_query: int = 20
    paper_queries_per_statement: int = 3
    papers_per_query: int = 20
    recommendations_per_seed: int = 8
    references_per_seed: int = 10
    comparison_sample: int = 25

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if value < 1:
                raise ValidationError(f"budget {name} must be >= 1, got {value}")

    def as_dict(self) -> dict[str, int]:
        return {
            "snippet_queries_per_method": self.snippet_queries_per_method,
            "snippets_per_query": self.snippets_per_query,
            "paper_queries_per_statement": self.paper_queries_per_statement,
            "papers_per_query": self.papers_per_query,
            "recommendations_per_seed": self.recommendations_per_seed,
            "references_per_seed": self.references_per_seed,
            "comparison_sample": self.comparison_sample,
        }


@dataclass
class CallRecord:
    operation: str
    argument: str
    returned: int


class CallRecorder:
    """Thread-safe instrumentation of client calls, for budget assertions."""

    def __init__(self):
        self._lock = threading.Lock()
        self.records: list[CallRecord] = []

    def note(self, operation: str, argument: str, returned: int) -> None:
        with self._lock:
            self.records.append(CallRecord(operation, argument, returned))

    def count(self, operation: str) -> int:
        with self._lock:
            return sum(1 for r in self.records if r.operation == operation)

    def max_returned(self, operation: str) -> int:
        with self._lock:
            sizes = [r.returned for r in self.records if r.operation == operation]
        return max(sizes, default=0)


class CorpusTransport(Protocol):
    """Raw access to corpus records; limits are fetch hints, dates are strings."""

    def snippet_search(self, query: str, limit: int) -> list[dict]: ...

    def paper_search(self, query: str, limit: int) -> list[dict]: ...

    def recommendations(self, paper_id: str, limit: int) -> list[dict]: ...

    def references(self, paper_id: str, limit: int) -> list[dict]: ...

    def paper_details(self, paper_id: str) -> dict: ...

    def open_access_link(self, doi: str) -> Optional[str]: ...


def normalize_doi(doi: str) -> str:
    doi = doi.strip().lower()
    doi = re.sub(r"^https?://(dx\.)?doi\.org/", "", doi)
    return doi


def normalize_title(title: str) -> str:
    return re.sub(r"[^a-z0-9]+", " ", title.lower()).strip()


def dedup_key(record: PaperEvidence | dict) -> str:
    """Corpus id, else normalized DOI, else normalized title."""
    if isinstance(record, PaperEvidence):
        pid, doi, title = record.paper_id, "", record.title
    else:
        pid = str(record.get("paper_id") or record.get("corpusId") or "")
        doi = str(record.get("doi") or "")
        title = str(record.get("title") or "")
    if pid:
        return f"id:{pid}"
    if doi:
        return f"doi:{normalize_doi(doi)}"
    return f"title:{normalize_title(title)}"


def dedup_evidence(items: Iterable[PaperEvidence]) -> list[PaperEvidence]:
    """Order-preserving dedup by dedup_key; first occurrence wins."""
    seen: set[str] = set()
    out: list[PaperEvidence] = []
    for item in items:
        key = dedup_key(item)
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def evidence_from_record(record: dict, provenance: Provenance) -> PaperEvidence:
    """Normalize a raw corpus record into PaperEvidence."""
    date_raw = record.get("publicationDate") or record.get("date") or record.get("year")
    date = None
    if date_raw not in (None, ""):
        try:
            date = parse_partial_date(str(date_raw))
        except ValidationError:
            date = None
    authors = record.get("authors") or ()
    names = tuple(
        a["name"] if isinstance(a, dict) else str(a) for a in authors
    )
    oa = record.get("openAccessPdf")
    if isinstance(oa, dict):
        oa = oa.get("url")
    return PaperEvidence(
        paper_id=str(record.get("paper_id") or record.get("corpusId") or ""),
        title=str(record.get("title") or ""),
        authors=names,
        publication_date=date,
        url=str(record.get("url") or ""),
        abstract=record.get("abstract"),
        provenance=provenance,
        open_access_url=oa or record.get("open_access_url"),
    )


class ResponseCache:
    """Content-addressed cache of raw endpoint responses, keyed on
    (endpoint, canonicalized query)."""

    def __init__(self, directory: str | Path):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(endpoint: str, query: str) -> str:
        canonical = re.sub(r"\s+", " ", query.strip().lower())
        digest = hashlib.sha256(f"{endpoint}\x1f{canonical}".encode()).hexdigest()
        return digest

    def get(self, endpoint: str, query: str) -> Optional[Any]:
        path = self._dir / f"{self.key(endpoint, query)}.json"
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return None

    def put(self, endpoint: str, query: str, payload: Any) -> None:
        path = self._dir / f"{self.key(endpoint, query)}.json"
        path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


class RemoteCorpusTransport:
    """HTTP transport for the scholarly corpus plus the open-access resolver."""

    def __init__(
        self,
        session: Optional[requests.Session] = None,
        base_url: str = DEFAULT_S2_BASE,
        unpaywall_base: str = DEFAULT_UNPAYWALL_BASE,
        api_key: str = "",
        contact_email: str = "",
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
        sleeper: Callable[[float], None] = time.sleep,
        cache: Optional[ResponseCache] = None,
    ):
        self._session = session or requests.Session()
        self._base = base_url.rstrip("/")
        self._unpaywall = unpaywall_base.rstrip("/")
        self._api_key = api_key
        self._email = contact_email
        self._timeout = timeout
        self._max_attempts = max_attempts
        self._backoff = backoff_base
        self._sleeper = sleeper
        self._cache = cache

    def _request(self, path: str, params: dict) -> Any:
        cache_query = json.dumps(params, sort_keys=True)
        if self._cache is not None:
            hit = self._cache.get(path, cache_query)
            if hit is not None:
                return hit
        headers = {"x-api-key": self._api_key} if self._api_key else {}
        last: Optional[str] = None
        retry_after: Optional[float] = None
        for attempt in range(self._max_attempts):
            try:
                response = self._session.get(
                    f"{self._base}{path}", params=params, headers=headers,
                    timeout=self._timeout,
                )
            except requests.RequestException as exc:
                last = str(exc)
            else:
                if response.status_code == 200:
                    payload = response.json()
                    if self._cache is not None:
                        self._cache.put(path, cache_query, payload)
                    return payload
                if response.status_code == 404:
                    raise NotFoundError(f"{path}: not found")
                last = f"HTTP {response.status_code}"
                if response.status_code == 429:
                    header = response.headers.get("Retry-After")
                    retry_after = float(header) if header else None
            if attempt < self._max_attempts - 1:
                self._sleeper(self._backoff * (2**attempt))
        if last and last.startswith("HTTP 429"):
            raise RateLimitExceededError(
                f"{path}: quota exceeded", retry_after=retry_after
            )
        raise RetrievalError(f"{path}: failed after {self._max_attempts} attempts: {last}")

    def snippet_search(self, query: str, limit: int) -> list[dict]:
        payload = self._request(
            "/graph/v1/snippet/search", {"query": query, "limit": limit}
        )
        out = []
        for item in payload.get("data", []):
            snippet = item.get("snippet", {})
            paper = item.get("paper", {})
            out.append(
                {
                    "snippet": snippet.get("text", ""),
                    "source_paper_id": str(paper.get("corpusId", "")),
                    "referenced_paper_ids": [
                        str(ref.get("matchedPaperCorpusId"))
                        for ref in snippet.get("refMentions", []) or []
                        if ref.get("matchedPaperCorpusId") is not None
                    ],
                    "date": paper.get("publicationDate"),
                }
            )
        return out

    def paper_search(self, query: str, limit: int) -> list[dict]:
        payload = self._request(
            "/graph/v1/paper/search",
            {"query": query, "limit": limit, "fields": PAPER_FIELDS},
        )
        return [self._paper_record(p) for p in payload.get("data", [])]

    def recommendations(self, paper_id: str, limit: int) -> list[dict]:
        payload = self._request(
            f"/recommendations/v1/papers/forpaper/CorpusId:{paper_id}",
            {"limit": limit, "fields": PAPER_FIELDS},
        )
        return [self._paper_record(p) for p in payload.get("recommendedPapers", [])]

    def references(self, paper_id: str, limit: int) -> list[dict]:
        payload = self._request(
            f"/graph/v1/paper/CorpusId:{paper_id}/references",
            {"limit": limit, "fields": PAPER_FIELDS},
        )
        return [
            self._paper_record(item.get("citedPaper", {}))
            for item in payload.get("data", [])
        ]

    def paper_details(self, paper_id: str) -> dict:
        payload = self._request(
            f"/graph/v1/paper/CorpusId:{paper_id}", {"fields": PAPER_FIELDS}
        )
        return self._paper_record(payload)

    def open_access_link(self, doi: str) -> Optional[str]:
        if not self._email:
            return None
        try:
            response = self._session.get(
                f"{self._unpaywall}/{doi}",
                params={"email": self._email},
                timeout=self._timeout,
            )
            if response.status_code != 200:
                return None
            location = (response.json() or {}).get("best_oa_location") or {}
            return location.get("url_for_pdf") or location.get("url")
        except requests.RequestException as exc:
            log.warning("open-access resolver failed for %s: %s", doi, exc)
            return None

    @staticmethod
    def _paper_record(p: dict) -> dict:
        external = p.get("externalIds") or {}
        return {
            "paper_id": p.get("corpusId"),
            "title": p.get("title"),
            "authors": p.get("authors"),
            "abstract": p.get("abstract"),
            "publicationDate": p.get("publicationDate") or p.get("year"),
            "url": p.get("url"),
            "openAccessPdf": p.get("openAccessPdf"),
            "doi": external.get("DOI"),
        }


class FixtureCorpusTransport:
    """Offline corpus backed by one JSON document.

    Schema: ``papers`` maps paper_id to a record (title, authors, abstract,
    date, url, doi, open_access_url, recommendations, references, sections);
    ``snippets`` maps a query key to a list of snippet records, with an
    optional ``default`` list used for unmatched queries; ``paper_results``
    does the same for relevance-search queries.
    """

    def __init__(self, source: str | Path | dict):
        if isinstance(source, (str, Path)):
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        else:
            data = source
        self.papers: dict[str, dict] = {
            str(pid): dict(record, paper_id=str(pid))
            for pid, record in data.get("papers", {}).items()
        }
        self.snippets: dict[str, list[dict]] = data.get("snippets", {})
        self.paper_results: dict[str, list[str]] = data.get("paper_results", {})

    def _match(self, table: dict, query: str) -> list:
        if query in table:
            return table[query]
        lowered = query.lower()
        for key, value in table.items():
            if key != "default" and key.lower() in lowered:
                return value
        return table.get("default", [])

    def snippet_search(self, query: str, limit: int) -> list[dict]:
        hits = self._match(self.snippets, query)
        out = []
        for hit in hits[:limit]:
            source = self.papers.get(str(hit.get("source_paper_id")), {})
            out.append(
                {
                    "snippet": hit.get("snippet", ""),
                    "source_paper_id": str(hit.get("source_paper_id", "")),
                    "referenced_paper_ids": [
                        str(pid) for pid in hit.get("referenced_paper_ids", [])
                    ],
                    "date": hit.get("date") or source.get("date"),
                }
            )
        return out

    def paper_search(self, query: str, limit: int) -> list[dict]:
        ids = self._match(self.paper_results, query)
        return [self.papers[str(pid)] for pid in ids[:limit] if str(pid) in self.papers]

    def recommendations(self, paper_id: str, limit: int) -> list[dict]:
        record = self._known(paper_id)
        ids = record.get("recommendations", [])
        return [self.papers[str(pid)] for pid in ids[:limit] if str(pid) in self.papers]

    def references(self, paper_id: str, limit: int) -> list[dict]:
        record = self._known(paper_id)
        ids = record.get("references", [])
        return [self.papers[str(pid)] for pid in ids[:limit] if str(pid) in self.papers]

    def paper_details(self, paper_id: str) -> dict:
        return self._known(paper_id)

    def open_access_link(self, doi: str) -> Optional[str]:
        doi = normalize_doi(doi)
        for record in self.papers.values():
            if normalize_doi(str(record.get("doi") or "")) == doi:
                return record.get("open_access_url")
        return None

    def _known(self, paper_id: str) -> dict:
        record = self.papers.get(str(paper_id))
        if record is None:
            raise NotFoundError(f"unknown paper id: {paper_id}")
        return record


class ScholarlyClient:
    """Budget- and cutoff-aware facade over a corpus transport.

    Safe for concurrent use; all outbound calls pass through one shared rate
    limiter so quota is respected across pipeline branches.
    """

    def __init__(
        self,
        transport: CorpusTransport,
        limiter: RateLimiter | NullLimiter | None = None,
        recorder: Optional[CallRecorder] = None,
    ):
        self.transport = transport
        self.limiter = limiter or NullLimiter()
        self.recorder = recorder

    def _note(self, operation: str, argument: str, returned: int) -> None:
        if self.recorder is not None:
            self.recorder.note(operation, argument, returned)

    def snippet_search(
        self, query: str, cutoff: Optional[dt.date], budget: RetrievalBudget
    ) -> list[SnippetHit]:
        if not query or not query.strip():
            raise ValidationError("query must be non-empty")
        self.limiter.acquire()
        raw = self.transport.snippet_search(query, budget.snippets_per_query)
        hits: list[SnippetHit] = []
        for record in raw[: budget.snippets_per_query]:
            date = None
            if record.get("date"):
                try:
                    date = parse_partial_date(str(record["date"]))
                except ValidationError:
                    date = None
            if cutoff is not None and (date is None or date > cutoff):
                continue
            hits.append(
                SnippetHit(
                    snippet=record["snippet"],
                    source_paper_id=record["source_paper_id"],
                    referenced_paper_ids=tuple(record.get("referenced_paper_ids", [])),
                    source_date=date,
                )
            )
        self._note("snippet_search", query, len(hits))
        return hits

    def paper_search(
        self, query: str, cutoff: Optional[dt.date], budget: RetrievalBudget
    ) -> list[PaperEvidence]:
        if not query or not query.strip():
            raise ValidationError("query must be non-empty")
        self.limiter.acquire()
        raw = self.transport.paper_search(query, budget.papers_per_query)
        papers = self._normalize(raw[: budget.papers_per_query],
                                 Provenance.DIRECT_SEARCH, cutoff)
        self._note("paper_search", query, len(papers))
        return papers

    def recommend_similar(
        self, seed: str, cutoff: Optional[dt.date], budget: RetrievalBudget
    ) -> list[PaperEvidence]:
        self.limiter.acquire()
        raw = self.transport.recommendations(seed, budget.recommendations_per_seed)
        papers = self._normalize(raw[: budget.recommendations_per_seed],
                                 Provenance.RECOMMENDATION, cutoff)
        self._note("recommend_similar", seed, len(papers))
        return papers

    def fetch_references(
        self, seed: str, cutoff: Optional[dt.date], budget: RetrievalBudget
    ) -> list[PaperEvidence]:
        self.limiter.acquire()
        raw = self.transport.references(seed, budget.references_per_seed)
        papers = self._normalize(raw[: budget.references_per_seed],
                                 Provenance.CITED_BY_SEED, cutoff)
        self._note("fetch_references", seed, len(papers))
        return papers

    def fetch_paper_details(
        self, paper_id: str, provenance: Provenance = Provenance.SNIPPET_REFERENCE
    ) -> PaperEvidence:
        if not paper_id:
            raise ValidationError("paper_id must be non-empty")
        self.limiter.acquire()
        record = self.transport.paper_details(paper_id)
        self._note("fetch_paper_details", paper_id, 1)
        return evidence_from_record(record, provenance)

    def resolve_fulltext_fallback(self, identifier: str) -> Optional[str]:
        """Best-effort open-access resolution; never raises."""
        try:
            doi = identifier
            if not re.match(r"^10\.", identifier):
                record = self.transport.paper_details(identifier)
                doi = record.get("doi") or ""
            if not doi:
                return None
            self.limiter.acquire()
            link = self.transport.open_access_link(normalize_doi(doi))
            self._note("resolve_fulltext_fallback", identifier, int(link is not None))
            return link
        except Exception as exc:
            log.warning("open-access fallback failed for %s: %s", identifier, exc)
            return None

    @staticmethod
    def _normalize(
        raw: Sequence[dict], provenance: Provenance, cutoff: Optional[dt.date]
    ) -> list[PaperEvidence]:
        papers = [evidence_from_record(record, provenance) for record in raw]
        papers = [p for p in papers if p.within_cutoff(cutoff)]
        return dedup_evidence(papers)
