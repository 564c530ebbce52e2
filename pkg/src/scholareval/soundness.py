"""Method-level soundness evaluation.

Flow per extracted method: snippet query, snippet search, harvest of the
papers referenced inside snippets, full-text triplet extraction, relevance-
gated summarization, then synthesis of support/contradictions/suggestions
with a 0-10 score. With the methods-and-results-extraction ablation on, the
snippet source papers are summarized directly at abstract level and the
document pipeline is never touched.
"""

from __future__ import annotations

import concurrent.futures
import logging
import re
from dataclasses import dataclass, field

from .citations import EvidenceStore, render_marker
from .documents import DocumentPipeline
from .errors import (
    ContractError,
    EvidenceUnavailableError,
    ExtractionEmptyError,
    FormatError,
    ScholarEvalError,
    ValidationError,
)
from .events import EmitFn, null_emit
from .gateway import BackendDescriptor, LlmGateway, OutputShape, extract_structured, render_prompt
from .models import (
    EvidenceSummary,
    MethodUnit,
    PaperEvidence,
    ResearchIdea,
    SoundnessSection,
    truncate_to_budget,
)
from .prompts import (
    EVIDENCE_SUMMARY,
    METHOD_EXTRACTION,
    SNIPPET_QUERY,
    SOUNDNESS_SYNTHESIS,
    SPARSE_EVIDENCE_NOTE,
    TLDR_SUMMARY,
)
from .retrieval import RetrievalBudget, ScholarlyClient

log = logging.getLogger(__name__)

MAX_QUERY_WORDS = 70
_OPERATOR_RE = re.compile(r"\b(AND|OR|NOT)\b")
# Fewer relevant summaries than this triggers the sparse-evidence annotation.
SPARSE_FLOOR = 2


@dataclass(frozen=True)
class SoundnessConfig:
    backend: BackendDescriptor
    budget: RetrievalBudget = field(default_factory=RetrievalBudget)
    ablate_mre: bool = False
    max_parallel_methods: int = 4


@dataclass
class SoundnessResult:
    sections: list[SoundnessSection]
    tldr: str
    notes: list[str] = field(default_factory=list)


def _query_violations(query: str) -> list[str]:
    problems = []
    if len(query.split()) > MAX_QUERY_WORDS:
        problems.append(f"query exceeds {MAX_QUERY_WORDS} words")
    if _OPERATOR_RE.search(query):
        problems.append("query contains a boolean operator")
    return problems


class SoundnessEngine:
    def __init__(
        self,
        gateway: LlmGateway,
        scholarly: ScholarlyClient,
        documents: DocumentPipeline,
        store: EvidenceStore,
    ):
        self.gateway = gateway
        self.scholarly = scholarly
        self.documents = documents
        self.store = store

    # -- stage operations ---------------------------------------------------

    def extract_methods(
        self, idea: ResearchIdea, backend: BackendDescriptor
    ) -> list[MethodUnit]:
        prompt = render_prompt(METHOD_EXTRACTION, {"research_idea": idea.text})
        raw = self.gateway.complete(backend, prompt, tag=METHOD_EXTRACTION.name)
        items = extract_structured(raw, OutputShape.PYTHON_LIST_BLOCK)
        descriptions = [str(item).strip() for item in items if str(item).strip()]
        if not descriptions:
            raise ExtractionEmptyError(
                f"no methods extracted from idea {idea.id}; idea may be too thin"
            )
        return [MethodUnit(index=i, description=d) for i, d in enumerate(descriptions)]

    def generate_method_query(
        self, unit: MethodUnit, idea: ResearchIdea, backend: BackendDescriptor
    ) -> str:
        prompt = render_prompt(
            SNIPPET_QUERY, {"method": unit.description, "research_idea": idea.text}
        )
        query = self._ask_for_query(backend, prompt)
        problems = _query_violations(query)
        if not problems:
            return query
        corrective = (
            prompt
            + "\nYour previous query was rejected: "
            + "; ".join(problems)
            + f". Output one natural-language query of at most {MAX_QUERY_WORDS} "
            "words with no boolean operators.\n"
        )
        query = self._ask_for_query(backend, corrective)
        problems = _query_violations(query)
        if problems:
            raise FormatError(
                f"query for method {unit.index} still invalid after retry: "
                + "; ".join(problems)
            )
        return query

    def _ask_for_query(self, backend: BackendDescriptor, prompt: str) -> str:
        raw = self.gateway.complete(backend, prompt, tag=SNIPPET_QUERY.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict) or not str(parsed.get("query", "")).strip():
            raise FormatError("query generation returned no 'query' field")
        return str(parsed["query"]).strip()

    def gather_evidence(
        self,
        unit: MethodUnit,
        idea: ResearchIdea,
        config: SoundnessConfig,
        notes: list[str] | None = None,
    ) -> list[PaperEvidence]:
        notes = notes if notes is not None else []
        query = self.generate_method_query(unit, idea, config.backend)
        try:
            hits = self.scholarly.snippet_search(query, idea.cutoff_date, config.budget)
            if not hits:
                # One reformulation: fall back to the raw method description.
                notes.append(
                    f"method {unit.index}: empty snippet results; retried with raw description"
                )
                hits = self.scholarly.snippet_search(
                    " ".join(unit.description.split()[:MAX_QUERY_WORDS]),
                    idea.cutoff_date,
                    config.budget,
                )
        except ScholarEvalError as exc:
            raise EvidenceUnavailableError(
                f"retrieval failed for method {unit.index}: {exc}"
            ) from exc

        if config.ablate_mre:
            return self._abstract_level_sources(hits, idea, notes)
        return self._full_text_references(hits, idea, unit, notes)

    def _abstract_level_sources(
        self, hits, idea: ResearchIdea, notes: list[str]
    ) -> list[PaperEvidence]:
        evidence: list[PaperEvidence] = []
        seen: set[str] = set()
        for hit in hits:
            pid = hit.source_paper_id
            if not pid or pid in seen:
                continue
            seen.add(pid)
            try:
                paper = self.scholarly.fetch_paper_details(pid)
            except ScholarEvalError as exc:
                notes.append(f"skipped snippet source {pid}: {exc}")
                continue
            if not paper.within_cutoff(idea.cutoff_date) or not paper.abstract:
                continue
            self.store.register(paper)
            evidence.append(paper)
        return evidence

    def _full_text_references(
        self, hits, idea: ResearchIdea, unit: MethodUnit, notes: list[str]
    ) -> list[PaperEvidence]:
        referenced: list[str] = []
        seen: set[str] = set()
        for hit in hits:
            for pid in hit.referenced_paper_ids:
                if pid not in seen:
                    seen.add(pid)
                    referenced.append(pid)
        evidence: list[PaperEvidence] = []
        for pid in referenced:
            try:
                paper = self.scholarly.fetch_paper_details(pid)
            except ScholarEvalError as exc:
                notes.append(f"skipped referenced paper {pid}: {exc}")
                continue
            if not paper.within_cutoff(idea.cutoff_date):
                continue
            link = paper.open_access_url or self.scholarly.resolve_fulltext_fallback(pid)
            if not link:
                notes.append(f"no open-access full text for {pid}; skipped")
                continue
            try:
                abstract, methods_text, results_text = self.documents.full_text_triplet(link)
            except ScholarEvalError as exc:
                notes.append(f"full-text extraction failed for {pid}: {exc}")
                continue
            if methods_text is None and results_text is None:
                notes.append(f"no methods/results sections found for {pid}; skipped")
                continue
            if abstract is None and paper.abstract is not None:
                notes.append(f"parser returned no abstract for {pid}; used corpus abstract")
                abstract = paper.abstract
            enriched = PaperEvidence(
                paper_id=paper.paper_id,
                title=paper.title,
                authors=paper.authors,
                publication_date=paper.publication_date,
                url=paper.url,
                abstract=abstract,
                methods_text=methods_text,
                results_text=results_text,
                provenance=paper.provenance,
                open_access_url=link,
            )
            self.store.update(enriched)
            evidence.append(enriched)
        return evidence

    def summarize_evidence(
        self,
        unit: MethodUnit,
        idea: ResearchIdea,
        evidence: PaperEvidence,
        backend: BackendDescriptor,
    ) -> EvidenceSummary:
        if not evidence.abstract and not evidence.methods_text and not evidence.results_text:
            raise ValidationError(
                f"paper {evidence.paper_id} has no abstract or extracted sections"
            )
        parts = []
        if evidence.abstract:
            parts.append(f"Abstract:\n{evidence.abstract}")
        if evidence.methods_text:
            parts.append(f"Methods section:\n{evidence.methods_text}")
        if evidence.results_text:
            parts.append(f"Results section:\n{evidence.results_text}")
        prompt = render_prompt(
            EVIDENCE_SUMMARY,
            {
                "paper_text": "\n\n".join(parts),
                "method": unit.description,
                "research_idea": idea.text,
            },
        )
        raw = self.gateway.complete(backend, prompt, tag=EVIDENCE_SUMMARY.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict):
            raise ContractError("evidence summary must be a JSON object")
        if not parsed:
            return EvidenceSummary(paper_id=evidence.paper_id, relevant=False)
        return EvidenceSummary(
            paper_id=evidence.paper_id,
            relevant=True,
            method_summary=truncate_to_budget(str(parsed.get("method", ""))) or None,
            results_summary=truncate_to_budget(str(parsed.get("results", ""))) or None,
            context_summary=truncate_to_budget(str(parsed.get("context", ""))) or None,
        )

    def synthesize_soundness(
        self,
        unit: MethodUnit,
        idea: ResearchIdea,
        summaries: list[EvidenceSummary],
        backend: BackendDescriptor,
    ) -> SoundnessSection:
        relevant = [s for s in summaries if s.relevant]
        blocks = []
        for summary in relevant:
            key = self.store.key_for_paper(summary.paper_id)
            paper = self.store.get(key) if key else None
            marker = render_marker(key, paper.url) if paper and paper.url else summary.paper_id
            blocks.append(
                f"{marker}\n"
                f"Method: {summary.method_summary or '(not reported)'}\n"
                f"Results: {summary.results_summary or '(not reported)'}\n"
                f"Context: {summary.context_summary or '(not reported)'}"
            )
        prompt = render_prompt(
            SOUNDNESS_SYNTHESIS,
            {
                "related_work": "\n\n".join(blocks) or "(no relevant literature retrieved)",
                "method": unit.description,
                "research_idea": idea.text,
                "sparsity_note": SPARSE_EVIDENCE_NOTE if len(relevant) < SPARSE_FLOOR else "",
            },
        )
        raw = self.gateway.complete(backend, prompt, tag=SOUNDNESS_SYNTHESIS.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict):
            raise ContractError("soundness synthesis must be a JSON object")
        score_raw = parsed.get("soundness_score")
        try:
            score = int(str(score_raw).strip())
        except (TypeError, ValueError):
            raise ContractError(f"soundness_score not an integer: {score_raw!r}")
        if not 0 <= score <= 10:
            raise ContractError(f"soundness_score {score} outside [0, 10]")
        try:
            return SoundnessSection(
                method=unit,
                support=str(parsed.get("support", "")),
                contradictions=str(parsed.get("contradictions", "")),
                suggestions=str(parsed.get("suggested_action", "")),
                soundness_score=score,
            )
        except ValidationError as exc:
            raise ContractError(str(exc)) from exc

    def tldr(
        self, sections: list[SoundnessSection], backend: BackendDescriptor
    ) -> str:
        if not sections:
            raise ValidationError("TL;DR requires at least one soundness section")
        reviews = "\n\n".join(
            f"Method {s.method.index + 1}: {s.method.description}\n"
            f"Score: {s.soundness_score}/10\n"
            f"Support: {s.support}\n"
            f"Contradictions: {s.contradictions}\n"
            f"Suggestions: {s.suggestions}"
            for s in sections
        )
        prompt = render_prompt(TLDR_SUMMARY, {"reviews": reviews})
        raw = self.gateway.complete(backend, prompt, tag=TLDR_SUMMARY.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict):
            raise ContractError("TL;DR must be a JSON object")
        lines: list[str] = []
        for label, field_name in (
            ("Top strengths", "strengths"),
            ("Top weaknesses", "weaknesses"),
            ("Top suggestions", "suggestions"),
        ):
            items = [str(x) for x in parsed.get(field_name, [])][:3]
            if items:
                lines.append(f"{label}:")
                lines.extend(f"- {item}" for item in items)
        return "\n".join(lines)

    # -- orchestration ------------------------------------------------------

    def evaluate(
        self, idea: ResearchIdea, config: SoundnessConfig, emit: EmitFn = null_emit
    ) -> SoundnessResult:
        emit("soundness:method_extraction", idea.id)
        methods = self.extract_methods(idea, config.backend)
        emit("soundness:method_extraction:done", idea.id, methods=len(methods))

        def _run(unit: MethodUnit) -> tuple[SoundnessSection, list[str]]:
            notes: list[str] = []
            emit("soundness:retrieval", f"method {unit.index}", method=unit.index)
            evidence = self.gather_evidence(unit, idea, config, notes)
            emit(
                "soundness:summarization",
                f"method {unit.index}",
                method=unit.index,
                papers=len(evidence),
            )
            summaries = [
                self.summarize_evidence(unit, idea, paper, config.backend)
                for paper in evidence
            ]
            emit(
                "soundness:synthesis",
                f"method {unit.index}",
                method=unit.index,
                relevant=sum(1 for s in summaries if s.relevant),
            )
            section = self.synthesize_soundness(unit, idea, summaries, config.backend)
            return section, notes

        sections: list[SoundnessSection] = []
        notes: list[str] = []
        with concurrent.futures.ThreadPoolExecutor(
            max_workers=max(config.max_parallel_methods, 1)
        ) as pool:
            for section, unit_notes in pool.map(_run, methods):
                sections.append(section)
                notes.extend(unit_notes)
        sections.sort(key=lambda s: s.method.index)

        emit("soundness:tldr", idea.id, sections=len(sections))
        summary = self.tldr(sections, config.backend)
        return SoundnessResult(sections=sections, tldr=summary, notes=notes)
