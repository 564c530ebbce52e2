"""Citation integrity: evidence-store keyed citations, marker normalization,
link-validity classification, and the reference-invalidity metric.

The zero-invalidity guarantee rests on one rule enforced here: a report may
only ever link URLs observed in the run's evidence store.
"""

from __future__ import annotations

import concurrent.futures
import logging
import re
import threading
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence
from urllib.parse import urlparse

import requests

from .errors import UndefinedRateError, ValidationError
from .gateway import BackendDescriptor, LlmGateway, OutputShape, extract_structured, render_prompt
from .models import EvaluationReport, PaperEvidence

log = logging.getLogger(__name__)

# [label](url) markdown links; label may itself be parenthesized.
LINK_RE = re.compile(r"\[([^\[\]]+)\]\((\S+?)\)")
# Bare bracketed citations like [Smith 2020] or [(Smith, 2020-01)]: a bracket
# with a year inside, not followed by a link target.
BARE_CITE_RE = re.compile(r"\[([^\[\]]*\b(?:1[89]|20)\d{2}[^\[\]]*)\](?!\()")
_YEAR_RE = re.compile(r"\b((?:1[89]|20)\d{2})\b")


def citation_key(evidence: PaperEvidence) -> str:
    """Human-readable author/date key, e.g. ``(Rivera et al., 2023-04)``."""
    names = [a.split()[-1] for a in evidence.authors if a.strip()]
    if not names:
        head = evidence.title.split()[0] if evidence.title else evidence.paper_id
    elif len(names) == 1:
        head = names[0]
    elif len(names) == 2:
        head = f"{names[0]} and {names[1]}"
    else:
        head = f"{names[0]} et al."
    if evidence.publication_date is not None:
        stamp = evidence.publication_date.strftime("%Y-%m")
        return f"({head}, {stamp})"
    return f"({head}, n.d.)"


def render_marker(key: str, url: str) -> str:
    return f"[{key}]({url})"


class EvidenceStore:
    """Per-run registry of every retrieved paper, keyed for citation.

    Thread-safe and append-only; key collisions get a deterministic numeric
    suffix so bibliography keys stay unique.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._by_key: dict[str, PaperEvidence] = {}
        self._key_by_paper: dict[str, str] = {}
        self._by_url: dict[str, str] = {}
        self._author_year: dict[tuple[str, str], str] = {}

    def register(self, evidence: PaperEvidence) -> str:
        """Add a paper (idempotent per paper_id); returns its citation key."""
        with self._lock:
            existing = self._key_by_paper.get(evidence.paper_id)
            if existing is not None:
                return existing
            base = citation_key(evidence)
            key = base
            suffix = 2
            while key in self._by_key:
                key = f"{base[:-1]}-{suffix})"
                suffix += 1
            self._by_key[key] = evidence
            self._key_by_paper[evidence.paper_id] = key
            if evidence.url:
                self._by_url.setdefault(evidence.url, key)
            year = (
                str(evidence.publication_date.year)
                if evidence.publication_date
                else ""
            )
            surname = ""
            if evidence.authors:
                surname = evidence.authors[0].split()[-1].lower()
            if surname:
                self._author_year.setdefault((surname, year), key)
                self._author_year.setdefault((surname, ""), key)
            return key

    def update(self, evidence: PaperEvidence) -> str:
        """Replace the stored record for a paper (e.g. after full-text extraction)."""
        with self._lock:
            key = self._key_by_paper.get(evidence.paper_id)
        if key is None:
            return self.register(evidence)
        with self._lock:
            self._by_key[key] = evidence
            if evidence.url:
                self._by_url.setdefault(evidence.url, key)
        return key

    def __contains__(self, key: str) -> bool:
        return key in self._by_key

    def __len__(self) -> int:
        return len(self._by_key)

    def get(self, key: str) -> Optional[PaperEvidence]:
        return self._by_key.get(key)

    def key_for_paper(self, paper_id: str) -> Optional[str]:
        return self._key_by_paper.get(paper_id)

    def key_for_url(self, url: str) -> Optional[str]:
        return self._by_url.get(url)

    def urls(self) -> set[str]:
        with self._lock:
            return {ev.url for ev in self._by_key.values() if ev.url}

    def items(self) -> list[tuple[str, PaperEvidence]]:
        with self._lock:
            return list(self._by_key.items())

    def resolve_label(self, label: str) -> Optional[str]:
        """Map free-form citation text to a store key via exact or author/year match."""
        text = label.strip()
        if text in self._by_key:
            return text
        if f"({text})" in self._by_key:
            return f"({text})"
        year_match = _YEAR_RE.search(text)
        year = year_match.group(1) if year_match else ""
        words = re.findall(r"[A-Za-z][A-Za-z'-]+", text)
        for word in words:
            if word.lower() in ("et", "al", "and", "n", "d"):
                continue
            key = self._author_year.get((word.lower(), year))
            if key is None and year:
                key = self._author_year.get((word.lower(), ""))
            if key is not None:
                return key
        return None


def audit_citations(
    section_text: str,
    store: EvidenceStore,
    backend: Optional[BackendDescriptor] = None,
    gateway: Optional[LlmGateway] = None,
    repairs: Optional[list[str]] = None,
) -> str:
    """Normalize every citation marker against the evidence store.

    When a backend is supplied, an editing pass first asks it to attach
    citations to citation-worthy statements; its output is subject to the same
    normalization, so links can still only come from the store. Repairs are
    recorded, never fatal; claims are kept even when their markers are dropped.
    """
    repairs = repairs if repairs is not None else []
    text = section_text
    if backend is not None and gateway is not None:
        text = _llm_citation_pass(text, store, backend, gateway, repairs)

    def _replace_link(match: re.Match) -> str:
        label, url = match.group(1), match.group(2)
        key = store.key_for_url(url)
        if key is None:
            key = store.resolve_label(label)
        if key is not None:
            evidence = store.get(key)
            if evidence is not None and evidence.url:
                return render_marker(key, evidence.url)
            repairs.append(f"dropped marker without stored link: {match.group(0)}")
            return ""
        if _looks_like_citation(label):
            repairs.append(f"removed citation of unknown paper: {match.group(0)}")
            return ""
        repairs.append(f"unlinked non-store URL: {url}")
        return label

    def _replace_bare(match: re.Match) -> str:
        label = match.group(1)
        key = store.resolve_label(label)
        if key is not None:
            evidence = store.get(key)
            if evidence is not None and evidence.url:
                return render_marker(key, evidence.url)
        repairs.append(f"removed citation of unknown paper: [{label}]")
        return ""

    text = LINK_RE.sub(_replace_link, text)
    text = BARE_CITE_RE.sub(_replace_bare, text)
    return _tidy_whitespace(text)


def _looks_like_citation(label: str) -> bool:
    stripped = label.strip()
    return bool(_YEAR_RE.search(stripped)) or (
        stripped.startswith("(") and stripped.endswith(")")
    )


def _tidy_whitespace(text: str) -> str:
    text = re.sub(r" {2,}", " ", text)
    text = re.sub(r" ([.,;:])", r"\1", text)
    return text.strip()


def _llm_citation_pass(
    text: str,
    store: EvidenceStore,
    backend: BackendDescriptor,
    gateway: LlmGateway,
    repairs: list[str],
) -> str:
    from .prompts import CITATION_AUDIT

    citable = "\n".join(
        f"- {render_marker(key, ev.url)} {ev.title}".rstrip()
        for key, ev in store.items()
        if ev.url
    )
    prompt = render_prompt(
        CITATION_AUDIT,
        {"citable_papers": citable or "(none)", "section_text": text},
    )
    try:
        raw = gateway.complete(backend, prompt, tag=CITATION_AUDIT.name)
        revised = extract_structured(raw, OutputShape.JSON_BLOCK)
        if isinstance(revised, dict) and isinstance(revised.get("text"), str):
            if revised["text"].strip():
                return revised["text"]
        repairs.append("citation editing pass returned no usable text; kept original")
    except Exception as exc:
        repairs.append(f"citation editing pass failed ({exc}); kept original")
    return text


def extract_links(text: str) -> list[str]:
    """All markdown link targets in document order (with duplicates)."""
    return [m.group(2) for m in LINK_RE.finditer(text)]


class LinkClass(str, Enum):
    PROVABLY_INVALID = "provably_invalid"
    NOT_PROVABLY_INVALID = "not_provably_invalid"
    UNREACHABLE = "unreachable"


def _classify_status(status: int) -> LinkClass:
    if status in (404, 410) or 500 <= status <= 599:
        return LinkClass.PROVABLY_INVALID
    return LinkClass.NOT_PROVABLY_INVALID


@dataclass(frozen=True)
class LinkVerdict:
    url: str
    status_code: Optional[int]
    classification: LinkClass

    def __post_init__(self):
        if self.status_code is not None:
            expected = _classify_status(self.status_code)
            if expected is not self.classification:
                raise ValidationError(
                    f"status {self.status_code} must classify as {expected.value}"
                )
        elif self.classification is not LinkClass.UNREACHABLE:
            raise ValidationError("statusless verdicts must be unreachable")


class LinkChecker:
    """HEAD-based link classification, memoized per URL within a run.

    HEAD gets one GET fallback on 405; network failures and redirect loops
    classify as unreachable (never counted invalid).
    """

    def __init__(
        self,
        http_client: Optional[requests.Session] = None,
        timeout: float = 10.0,
        max_redirects: int = 5,
    ):
        self._client = http_client or requests.Session()
        self._timeout = timeout
        self._max_redirects = max_redirects
        self._lock = threading.Lock()
        self._cache: dict[str, LinkVerdict] = {}

    def check(self, url: str) -> LinkVerdict:
        if not urlparse(url).scheme:
            raise ValidationError(f"not a syntactically valid URL: {url!r}")
        with self._lock:
            if url in self._cache:
                return self._cache[url]
        verdict = self._probe(url)
        with self._lock:
            self._cache.setdefault(url, verdict)
        return verdict

    def _probe(self, url: str) -> LinkVerdict:
        if hasattr(self._client, "max_redirects"):
            self._client.max_redirects = self._max_redirects
        try:
            response = self._client.head(
                url, allow_redirects=True, timeout=self._timeout
            )
            if response.status_code == 405:
                response = self._client.get(
                    url, allow_redirects=True, timeout=self._timeout
                )
            status = response.status_code
            return LinkVerdict(url, status, _classify_status(status))
        except requests.RequestException as exc:
            log.debug("link unreachable: %s (%s)", url, exc)
            return LinkVerdict(url, None, LinkClass.UNREACHABLE)


def check_link(url: str, http_client) -> LinkVerdict:
    return LinkChecker(http_client).check(url)


def invalidity_rate(
    source: EvaluationReport | str | Sequence[str],
    http_client,
    max_in_flight: int = 8,
    per_host: int = 2,
) -> float:
    """Lower-bound invalid fraction: provably invalid links / all links.

    Unreachable links stay in the denominator but never count as invalid.
    """
    if isinstance(source, EvaluationReport):
        urls: list[str] = []
        for text in source.all_section_texts():
            urls.extend(extract_links(text))
        urls.extend(ev.url for _, ev in source.bibliography if ev.url)
    elif isinstance(source, str):
        urls = extract_links(source)
    else:
        urls = list(source)
    unique = list(dict.fromkeys(urls))
    if not unique:
        raise UndefinedRateError("invalidity rate undefined over zero references")

    checker = LinkChecker(http_client)
    host_gates: dict[str, threading.Semaphore] = defaultdict(
        lambda: threading.Semaphore(per_host)
    )

    def _check(url: str) -> LinkVerdict:
        gate = host_gates[urlparse(url).netloc]
        with gate:
            return checker.check(url)

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        verdicts = list(pool.map(_check, unique))
    invalid = sum(1 for v in verdicts if v.classification is LinkClass.PROVABLY_INVALID)
    return invalid / len(unique)
