"""Full-text handling: PDF download, structure extraction via an external
parser service, and abstract/methods/results triplet extraction.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Protocol

import requests

from .errors import (
    CapacityError,
    DependencyUnavailableError,
    DocumentParseError,
    DownloadError,
    ValidationError,
)

log = logging.getLogger(__name__)

GROBID_URL_ENV = "GROBID_URL"
DEFAULT_SIZE_CAP = 50 * 1024 * 1024
TEI_NS = "{http://www.tei-c.org/ns/1.0}"

DEFAULT_METHODS_TITLES = (
    "method",
    "methods",
    "methodology",
    "materials and methods",
    "experimental setup",
    "protocol",
    "approach",
)
DEFAULT_RESULTS_TITLES = (
    "result",
    "results",
    "findings",
    "experiments",
    "evaluation",
)


@dataclass(frozen=True)
class SectionHeuristics:
    """Lowercase title patterns that locate methods and results sections."""

    methods_titles: tuple[str, ...] = DEFAULT_METHODS_TITLES
    results_titles: tuple[str, ...] = DEFAULT_RESULTS_TITLES

    def __post_init__(self):
        if not self.methods_titles or not self.results_titles:
            raise ValidationError("heuristic pattern lists must be non-empty")

    @classmethod
    def from_file(cls, path: str | Path) -> "SectionHeuristics":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            methods_titles=tuple(data["methods_titles"]),
            results_titles=tuple(data["results_titles"]),
        )


@dataclass(frozen=True)
class StructuredDocument:
    """Parser output normalized to (title, text) pairs in reading order."""

    title: str
    abstract: Optional[str]
    sections: tuple[tuple[str, str], ...]


def _normalize_title(title: str) -> str:
    title = re.sub(r"^[\divxlc]+[.):\s]+", "", title.strip().lower())
    return re.sub(r"[^a-z0-9]+", " ", title).strip()


def _matches(title: str, patterns: tuple[str, ...]) -> bool:
    normalized = _normalize_title(title)
    for pattern in patterns:
        if re.search(rf"\b{re.escape(pattern)}\b", normalized):
            return True
    return False


def extract_triplet(
    document: StructuredDocument, heuristics: SectionHeuristics
) -> tuple[Optional[str], Optional[str], Optional[str]]:
    """(abstract, methods_text, results_text); earliest matching section wins.

    Pure and total: absence of a matching section is a value, not an error.
    """
    methods_text: Optional[str] = None
    results_text: Optional[str] = None
    for title, text in document.sections:
        if methods_text is None and _matches(title, heuristics.methods_titles):
            methods_text = text
        if results_text is None and _matches(title, heuristics.results_titles):
            results_text = text
    return document.abstract, methods_text, results_text


class PdfFetcher(Protocol):
    def fetch(self, url: str) -> bytes: ...


class HttpPdfFetcher:
    """Downloads PDFs over HTTP with a hard size cap."""

    def __init__(
        self,
        session: Optional[requests.Session] = None,
        size_cap: int = DEFAULT_SIZE_CAP,
        timeout: float = 60.0,
    ):
        self._session = session or requests.Session()
        self.size_cap = size_cap
        self._timeout = timeout

    def fetch(self, url: str) -> bytes:
        if not re.match(r"^https?://", url):
            raise DownloadError(f"malformed link: {url!r}")
        try:
            response = self._session.get(url, timeout=self._timeout, stream=True)
        except requests.RequestException as exc:
            raise DownloadError(f"download failed for {url}: {exc}") from exc
        if response.status_code != 200:
            raise DownloadError(f"HTTP {response.status_code} for {url}")
        chunks: list[bytes] = []
        size = 0
        for chunk in response.iter_content(chunk_size=1 << 16):
            size += len(chunk)
            if size > self.size_cap:
                raise CapacityError(
                    f"document at {url} exceeds size cap of {self.size_cap} bytes"
                )
            chunks.append(chunk)
        return b"".join(chunks)


class FixturePdfFetcher:
    """Serves canned document bytes by URL; size cap enforced like HTTP."""

    def __init__(self, documents: Mapping[str, bytes], size_cap: int = DEFAULT_SIZE_CAP):
        self._documents = dict(documents)
        self.size_cap = size_cap

    def fetch(self, url: str) -> bytes:
        if url not in self._documents:
            raise DownloadError(f"no document at {url}")
        data = self._documents[url]
        if len(data) > self.size_cap:
            raise CapacityError(
                f"document at {url} exceeds size cap of {self.size_cap} bytes"
            )
        return data


def download_pdf(link: str, fetcher: PdfFetcher) -> bytes:
    return fetcher.fetch(link)


class StructureParser(Protocol):
    def parse(self, data: bytes) -> StructuredDocument: ...


class GrobidParser:
    """Client for the external structure-extraction service.

    Pools a bounded number of simultaneous requests; parsed results are cached
    on the document digest so a paper is only ever sent once per run.
    """

    def __init__(
        self,
        base_url: str,
        session: Optional[requests.Session] = None,
        timeout: float = 120.0,
        max_concurrent: int = 4,
        cache_dir: Optional[str | Path] = None,
    ):
        self._base = base_url.rstrip("/")
        self._session = session or requests.Session()
        self._timeout = timeout
        self._gate = threading.BoundedSemaphore(max_concurrent)
        self._cache_dir = Path(cache_dir) if cache_dir else None
        if self._cache_dir:
            self._cache_dir.mkdir(parents=True, exist_ok=True)

    def parse(self, data: bytes) -> StructuredDocument:
        digest = hashlib.sha256(data).hexdigest()
        if self._cache_dir:
            cached = self._cache_dir / f"{digest}.json"
            if cached.exists():
                payload = json.loads(cached.read_text(encoding="utf-8"))
                return StructuredDocument(
                    title=payload["title"],
                    abstract=payload["abstract"],
                    sections=tuple((t, x) for t, x in payload["sections"]),
                )
        with self._gate:
            try:
                response = self._session.post(
                    f"{self._base}/api/processFulltextDocument",
                    files={"input": ("paper.pdf", data, "application/pdf")},
                    timeout=self._timeout,
                )
            except requests.RequestException as exc:
                raise DependencyUnavailableError(
                    f"structure-extraction service unreachable: {exc}"
                ) from exc
        if response.status_code != 200:
            raise DocumentParseError(
                f"structure-extraction service rejected document: "
                f"HTTP {response.status_code}"
            )
        document = parse_tei(response.text)
        if self._cache_dir:
            payload = {
                "title": document.title,
                "abstract": document.abstract,
                "sections": [list(pair) for pair in document.sections],
            }
            (self._cache_dir / f"{digest}.json").write_text(
                json.dumps(payload, ensure_ascii=False), encoding="utf-8"
            )
        return document


def parse_tei(xml_text: str) -> StructuredDocument:
    """Normalize a TEI response into title/abstract/ordered sections."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise DocumentParseError(f"unparseable service response: {exc}") from exc
    title_el = root.find(f".//{TEI_NS}titleStmt/{TEI_NS}title")
    title = "".join(title_el.itertext()).strip() if title_el is not None else ""
    abstract_el = root.find(f".//{TEI_NS}abstract")
    abstract = None
    if abstract_el is not None:
        abstract = " ".join("".join(abstract_el.itertext()).split()) or None
    sections: list[tuple[str, str]] = []
    body = root.find(f".//{TEI_NS}body")
    if body is not None:
        for div in body.findall(f"{TEI_NS}div"):
            head = div.find(f"{TEI_NS}head")
            heading = "".join(head.itertext()).strip() if head is not None else ""
            paragraphs = [
                " ".join("".join(p.itertext()).split())
                for p in div.findall(f"{TEI_NS}p")
            ]
            sections.append((heading, "\n".join(x for x in paragraphs if x)))
    return StructuredDocument(title=title, abstract=abstract, sections=tuple(sections))


class FixtureStructureParser:
    """Resolves fake document bytes to canned section trees.

    Fixture bytes embed a lookup key as ``%PDF-FIXTURE <key>``; the sections
    table maps the key to {title, abstract, sections: [[title, text], ...]}.
    """

    MARKER = b"%PDF-FIXTURE "

    def __init__(self, sections: Mapping[str, dict]):
        self._sections = dict(sections)

    @classmethod
    def encode(cls, key: str) -> bytes:
        return cls.MARKER + key.encode("utf-8")

    def parse(self, data: bytes) -> StructuredDocument:
        if not data.startswith(self.MARKER):
            raise DocumentParseError("service rejected document: not a parseable PDF")
        key = data[len(self.MARKER):].decode("utf-8").strip()
        record = self._sections.get(key)
        if record is None:
            raise DocumentParseError(f"service produced no structure for {key!r}")
        return StructuredDocument(
            title=record.get("title", ""),
            abstract=record.get("abstract"),
            sections=tuple((t, x) for t, x in record.get("sections", [])),
        )


class DocumentPipeline:
    """Download + parse + triplet extraction with call instrumentation."""

    def __init__(
        self,
        fetcher: PdfFetcher,
        parser: StructureParser,
        heuristics: Optional[SectionHeuristics] = None,
    ):
        self.fetcher = fetcher
        self.parser = parser
        self.heuristics = heuristics or SectionHeuristics()
        self._lock = threading.Lock()
        self.download_calls = 0
        self.parse_calls = 0

    def full_text_triplet(
        self, link: str
    ) -> tuple[Optional[str], Optional[str], Optional[str]]:
        data = download_pdf(link, self.fetcher)
        with self._lock:
            self.download_calls += 1
        document = self.parser.parse(data)
        with self._lock:
            self.parse_calls += 1
        return extract_triplet(document, self.heuristics)
