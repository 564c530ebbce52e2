"""Dimension-level contribution evaluation.

Flow: dimension extraction, multi-query abstract discovery, 0-5 relevance
gating, seed-based augmentation (recommendations plus cited references),
embedding top-n filtering, a second relevance screen, deterministic
downsampling to the comparison budget, per-paper pairwise comparison across
all dimensions, and per-dimension synthesis.
"""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .citations import EvidenceStore, render_marker
from .embeddings import EmbeddingBackend, embedding_filter, embedding_rank
from .errors import (
    ContractError,
    ExtractionEmptyError,
    FormatError,
    ScholarEvalError,
    ValidationError,
)
from .events import EmitFn, null_emit
from .gateway import BackendDescriptor, LlmGateway, OutputShape, extract_structured, render_prompt
from .models import (
    ContributionDimension,
    ContributionSection,
    PairwiseComparison,
    PaperEvidence,
    ResearchIdea,
    truncate_to_budget,
)
from .prompts import (
    CONTRIBUTION_QUERIES,
    CONTRIBUTION_SYNTHESIS,
    DIMENSION_EXTRACTION,
    PAIRWISE_COMPARISON,
    RELEVANCE_ASSESSMENT,
)
from .retrieval import RetrievalBudget, ScholarlyClient, dedup_key
from .soundness import MAX_QUERY_WORDS

log = logging.getLogger(__name__)

MAX_DIMENSION_QUERY_WORDS = 7


@dataclass(frozen=True)
class RelevanceJudgment:
    paper_id: str
    rationale: str
    score: int

    def __post_init__(self):
        if not self.rationale or not self.rationale.strip():
            raise ValidationError("relevance rationale must be non-empty")
        if not isinstance(self.score, int) or isinstance(self.score, bool):
            raise ValidationError("relevance score must be an integer")
        if not 0 <= self.score <= 5:
            raise ValidationError(f"relevance score {self.score} outside [0, 5]")


@dataclass(frozen=True)
class ContributionConfig:
    backend: BackendDescriptor
    embedding_backend: EmbeddingBackend = None
    budget: RetrievalBudget = field(default_factory=RetrievalBudget)
    ablate_pa: bool = False
    ablate_pc: bool = False
    relevance_threshold: int = 3
    embedding_top_n: int = 50
    max_parallel: int = 4

    def __post_init__(self):
        if not 0 <= self.relevance_threshold <= 5:
            raise ValidationError("relevance_threshold must be within [0, 5]")
        if self.embedding_top_n < 1:
            raise ValidationError("embedding_top_n must be >= 1")


@dataclass
class ContributionResult:
    sections: list[ContributionSection]
    notes: list[str] = field(default_factory=list)


def is_seed(judgment: RelevanceJudgment, threshold: int = 3) -> bool:
    """A paper enters augmentation iff its relevance score meets the threshold."""
    return judgment.score >= threshold


class ContributionEngine:
    def __init__(
        self,
        gateway: LlmGateway,
        scholarly: ScholarlyClient,
        store: EvidenceStore,
    ):
        self.gateway = gateway
        self.scholarly = scholarly
        self.store = store

    # -- stage operations ---------------------------------------------------

    def extract_dimensions(
        self, idea: ResearchIdea, backend: BackendDescriptor
    ) -> list[ContributionDimension]:
        prompt = render_prompt(DIMENSION_EXTRACTION, {"research_idea": idea.text})
        raw = self.gateway.complete(backend, prompt, tag=DIMENSION_EXTRACTION.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict) or not parsed:
            raise ExtractionEmptyError(f"no contribution dimensions extracted for {idea.id}")
        # Duplicate names are merged rather than rejected: the prompt asks for
        # non-redundant dimensions but cannot guarantee it.
        merged: dict[str, list[str]] = {}
        for name, statements in parsed.items():
            clean = str(name).strip()
            if isinstance(statements, str):
                statements = [statements]
            texts = [str(s).strip() for s in statements if str(s).strip()]
            merged.setdefault(clean, []).extend(texts)
        dimensions = [
            ContributionDimension(name=name, statements=tuple(statements))
            for name, statements in merged.items()
            if statements
        ]
        if not dimensions:
            raise ExtractionEmptyError(f"no usable contribution statements for {idea.id}")
        return dimensions

    def generate_dimension_queries(
        self,
        statement: str,
        idea: ResearchIdea,
        backend: BackendDescriptor,
        budget: RetrievalBudget,
    ) -> list[str]:
        if not statement or not statement.strip():
            raise ValidationError("contribution statement must be non-empty")
        prompt = render_prompt(
            CONTRIBUTION_QUERIES,
            {
                "n_queries": str(budget.paper_queries_per_statement),
                "contribution": statement,
                "research_idea": idea.text,
            },
        )
        queries = self._ask_for_queries(backend, prompt, budget)
        over = [q for q in queries if len(q.split()) > MAX_DIMENSION_QUERY_WORDS]
        if not over:
            return queries
        corrective = (
            prompt
            + f"\nYour previous queries were rejected: each query must not exceed "
            f"{MAX_DIMENSION_QUERY_WORDS} words.\n"
        )
        queries = self._ask_for_queries(backend, corrective, budget)
        over = [q for q in queries if len(q.split()) > MAX_DIMENSION_QUERY_WORDS]
        if over:
            raise FormatError(
                f"dimension query still over {MAX_DIMENSION_QUERY_WORDS} words "
                f"after retry: {over[0]!r}"
            )
        return queries

    def _ask_for_queries(
        self, backend: BackendDescriptor, prompt: str, budget: RetrievalBudget
    ) -> list[str]:
        raw = self.gateway.complete(backend, prompt, tag=CONTRIBUTION_QUERIES.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if isinstance(parsed, dict):
            parsed = parsed.get("queries", [])
        if not isinstance(parsed, list):
            raise FormatError("query generation returned no query list")
        queries: list[str] = []
        for query in parsed:
            text = str(query).strip()
            if text and text not in queries:
                queries.append(text)
        return queries[: budget.paper_queries_per_statement]

    def judge_relevance(
        self, idea: ResearchIdea, candidate: PaperEvidence, backend: BackendDescriptor
    ) -> RelevanceJudgment:
        if not candidate.abstract:
            raise ValidationError(f"candidate {candidate.paper_id} has no abstract")
        prompt = render_prompt(
            RELEVANCE_ASSESSMENT,
            {"research_idea": idea.text, "abstract": candidate.abstract},
        )
        raw = self.gateway.complete(backend, prompt, tag=RELEVANCE_ASSESSMENT.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict):
            raise ContractError("relevance judgment must be a JSON object")
        try:
            score = int(str(parsed.get("score")).strip())
        except (TypeError, ValueError):
            raise ContractError(f"relevance score not an integer: {parsed.get('score')!r}")
        try:
            return RelevanceJudgment(
                paper_id=candidate.paper_id,
                rationale=str(parsed.get("rationale", "")),
                score=score,
            )
        except ValidationError as exc:
            raise ContractError(str(exc)) from exc

    def augment_candidates(
        self,
        seeds: Sequence[PaperEvidence],
        config: ContributionConfig,
        cutoff,
        notes: Optional[list[str]] = None,
    ) -> list[PaperEvidence]:
        """Recommendations plus cited references of every seed, deduplicated
        against the seeds and each other. Skipped entirely under the paper-
        augmentation ablation."""
        notes = notes if notes is not None else []
        if config.ablate_pa or not seeds:
            return []
        seen = {dedup_key(seed) for seed in seeds}
        out: list[PaperEvidence] = []
        for seed in seeds:
            for fetch, label in (
                (self.scholarly.recommend_similar, "recommendations"),
                (self.scholarly.fetch_references, "references"),
            ):
                try:
                    batch = fetch(seed.paper_id, cutoff, config.budget)
                except ScholarEvalError as exc:
                    notes.append(f"{label} failed for seed {seed.paper_id}: {exc}")
                    continue
                for paper in batch:
                    key = dedup_key(paper)
                    if key not in seen:
                        seen.add(key)
                        out.append(paper)
        return out

    def embedding_filter(
        self,
        idea: ResearchIdea,
        candidates: Sequence[PaperEvidence],
        backend: EmbeddingBackend,
        n: int,
    ) -> list[PaperEvidence]:
        return embedding_filter(idea.text, candidates, backend, n)

    def downsample_for_comparison(
        self,
        papers: Sequence[PaperEvidence],
        config: ContributionConfig,
        relevance: dict[str, int],
        embedding_ranks: dict[str, int],
    ) -> list[PaperEvidence]:
        """Deterministic sample: highest relevance first, ties by embedding
        rank, then paper id."""
        ranked = sorted(
            papers,
            key=lambda p: (
                -relevance.get(p.paper_id, 0),
                embedding_ranks.get(p.paper_id, len(papers)),
                p.paper_id,
            ),
        )
        return ranked[: config.budget.comparison_sample]

    def pairwise_compare(
        self,
        idea: ResearchIdea,
        paper: PaperEvidence,
        dimensions: Sequence[ContributionDimension],
        backend: BackendDescriptor,
    ) -> PairwiseComparison:
        if not paper.abstract:
            raise ValidationError(f"paper {paper.paper_id} has no abstract")
        if not dimensions:
            raise ValidationError("pairwise comparison needs at least one dimension")
        names = [d.name for d in dimensions]
        prompt = render_prompt(
            PAIRWISE_COMPARISON,
            {
                "research_idea": idea.text,
                "abstract": paper.abstract,
                "dimensions": ", ".join(names),
            },
        )
        comparison = self._ask_for_comparison(backend, prompt, paper, names)
        if comparison is not None:
            return comparison
        corrective = (
            prompt
            + "\nYour previous output did not cover every listed dimension. "
            "Include every dimension name exactly as given.\n"
        )
        comparison = self._ask_for_comparison(backend, corrective, paper, names)
        if comparison is None:
            raise ContractError(
                f"pairwise comparison for {paper.paper_id} missing dimensions after retry"
            )
        return comparison

    def _ask_for_comparison(
        self,
        backend: BackendDescriptor,
        prompt: str,
        paper: PaperEvidence,
        names: list[str],
    ) -> Optional[PairwiseComparison]:
        raw = self.gateway.complete(backend, prompt, tag=PAIRWISE_COMPARISON.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict):
            raise ContractError("pairwise comparison must be a JSON object")
        table = parsed.get("dimension_comparisons", {})
        if not isinstance(table, dict):
            raise ContractError("dimension_comparisons must be an object")
        missing = [name for name in names if name not in table]
        if missing:
            return None
        per_dimension: dict[str, tuple[str, int]] = {}
        for name in names:
            entry = table[name]
            if not isinstance(entry, dict):
                raise ContractError(f"comparison for dimension {name!r} must be an object")
            score = entry.get("score")
            if score not in (-1, 0, 1):
                raise ContractError(
                    f"pairwise score {score!r} for dimension {name!r} outside {{-1, 0, 1}}"
                )
            per_dimension[name] = (str(entry.get("comparison", "")), int(score))
        extras = set(table) - set(names)
        if extras:
            log.warning(
                "dropping pairwise output for unknown dimensions %s on %s",
                sorted(extras), paper.paper_id,
            )
        return PairwiseComparison(
            paper_id=paper.paper_id,
            overall=str(parsed.get("overall_comparison", "")),
            per_dimension=per_dimension,
        )

    def synthesize_contribution(
        self,
        idea: ResearchIdea,
        dimension: ContributionDimension,
        comparisons: Sequence[PairwiseComparison],
        backend: BackendDescriptor,
        sampled: Sequence[PaperEvidence] = (),
    ) -> ContributionSection:
        """Synthesize one dimension section. With no comparisons (pairwise
        ablated), abstract digests of the sampled papers are substituted."""
        blocks: list[str] = []
        if comparisons:
            for comparison in comparisons:
                marker = self._marker_for(comparison.paper_id)
                text, score = comparison.per_dimension.get(dimension.name, ("", 0))
                blocks.append(
                    f"{marker}\n"
                    f"Overall: {comparison.overall}\n"
                    f"{dimension.name}: {text} (score {score})"
                )
        else:
            for paper in sampled:
                marker = self._marker_for(paper.paper_id)
                blocks.append(
                    f"{marker}\nAbstract: {truncate_to_budget(paper.abstract or '')}"
                )
        prompt = render_prompt(
            CONTRIBUTION_SYNTHESIS,
            {
                "research_idea": idea.text,
                "dimension": dimension.name,
                "comparisons": "\n\n".join(blocks) or "(no related papers retrieved)",
            },
        )
        raw = self.gateway.complete(backend, prompt, tag=CONTRIBUTION_SYNTHESIS.name)
        parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
        if not isinstance(parsed, dict):
            raise ContractError("contribution synthesis must be a JSON object")
        try:
            return ContributionSection(
                dimension=dimension,
                strengths=str(parsed.get("strengths", "")),
                weaknesses=str(parsed.get("weaknesses", "")),
                suggestions=str(parsed.get("suggestions", "")),
            )
        except ValidationError as exc:
            raise ContractError(str(exc)) from exc

    def _marker_for(self, paper_id: str) -> str:
        key = self.store.key_for_paper(paper_id)
        paper = self.store.get(key) if key else None
        if paper is not None and paper.url:
            return render_marker(key, paper.url)
        return paper_id

    # -- orchestration ------------------------------------------------------

    def evaluate(
        self, idea: ResearchIdea, config: ContributionConfig, emit: EmitFn = null_emit
    ) -> ContributionResult:
        notes: list[str] = []
        emit("contribution:dimension_extraction", idea.id)
        dimensions = self.extract_dimensions(idea, config.backend)
        emit(
            "contribution:dimension_extraction:done",
            idea.id,
            dimensions=len(dimensions),
        )

        emit("contribution:discovery", idea.id)
        candidates = self._discover(idea, dimensions, config)
        emit("contribution:discovery:done", idea.id, candidates=len(candidates))

        emit("contribution:relevance", idea.id, candidates=len(candidates))
        judged = self._judge_all(idea, candidates, config)
        seeds = [
            paper
            for paper, judgment in judged
            if is_seed(judgment, config.relevance_threshold)
        ]
        relevance = {paper.paper_id: j.score for paper, j in judged}
        for paper in seeds:
            self.store.register(paper)
        emit("contribution:relevance:done", idea.id, seeds=len(seeds))

        emit("contribution:augmentation", idea.id, seeds=len(seeds))
        augmented = self.augment_candidates(seeds, config, idea.cutoff_date, notes)
        emit("contribution:augmentation:done", idea.id, augmented=len(augmented))

        emit("contribution:filtering", idea.id, candidates=len(augmented))
        screened_augmented: list[PaperEvidence] = []
        if augmented:
            with_abstracts = [p for p in augmented if p.abstract]
            top_n = self.embedding_filter(
                idea, with_abstracts, config.embedding_backend, config.embedding_top_n
            )
            # Second relevance screen over the embedding-filtered candidates,
            # same judge and threshold as the first pass.
            second = self._judge_all(idea, top_n, config)
            for paper, judgment in second:
                relevance[paper.paper_id] = judgment.score
                if is_seed(judgment, config.relevance_threshold):
                    screened_augmented.append(paper)
                    self.store.register(paper)
        pool = seeds + [
            p for p in screened_augmented
            if dedup_key(p) not in {dedup_key(s) for s in seeds}
        ]
        emit("contribution:filtering:done", idea.id, pool=len(pool))

        ranks = (
            embedding_rank(idea.text, pool, config.embedding_backend) if pool else {}
        )
        sampled = self.downsample_for_comparison(pool, config, relevance, ranks)

        comparisons: list[PairwiseComparison] = []
        if not config.ablate_pc and sampled:
            emit("contribution:comparison", idea.id, papers=len(sampled))
            with concurrent.futures.ThreadPoolExecutor(
                max_workers=max(config.max_parallel, 1)
            ) as executor:
                comparisons = list(
                    executor.map(
                        lambda paper: self.pairwise_compare(
                            idea, paper, dimensions, config.backend
                        ),
                        sampled,
                    )
                )
            emit("contribution:comparison:done", idea.id, comparisons=len(comparisons))
        elif config.ablate_pc:
            notes.append("pairwise comparison ablated; synthesized from sampled abstracts")

        sections: list[ContributionSection] = []
        for dimension in dimensions:
            emit("contribution:synthesis", dimension.name)
            sections.append(
                self.synthesize_contribution(
                    idea, dimension, comparisons, config.backend, sampled
                )
            )
        return ContributionResult(sections=sections, notes=notes)

    def _discover(
        self,
        idea: ResearchIdea,
        dimensions: Sequence[ContributionDimension],
        config: ContributionConfig,
    ) -> list[PaperEvidence]:
        candidates: list[PaperEvidence] = []
        seen: set[str] = set()
        for dimension in dimensions:
            for statement in dimension.statements:
                queries = self.generate_dimension_queries(
                    statement, idea, config.backend, config.budget
                )
                for query in queries:
                    results = self.scholarly.paper_search(
                        query, idea.cutoff_date, config.budget
                    )
                    for paper in results:
                        key = dedup_key(paper)
                        if key not in seen and paper.abstract:
                            seen.add(key)
                            candidates.append(paper)
        return candidates

    def _judge_all(
        self,
        idea: ResearchIdea,
        candidates: Sequence[PaperEvidence],
        config: ContributionConfig,
    ) -> list[tuple[PaperEvidence, RelevanceJudgment]]:
        if not candidates:
            return []
        with concurrent.futures.ThreadPoolExecutor(
            max_workers=max(config.max_parallel, 1)
        ) as executor:
            judgments = list(
                executor.map(
                    lambda paper: self.judge_relevance(idea, paper, config.backend),
                    candidates,
                )
            )
        return list(zip(candidates, judgments))
