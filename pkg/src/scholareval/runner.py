"""End-to-end orchestration: run the requested modules on one idea, audit
citations, and assemble the final report."""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence

from .citations import LINK_RE, EvidenceStore, audit_citations
from .config import RunEnvironment
from .contribution import ContributionConfig, ContributionEngine
from .errors import ValidationError
from .events import EmitFn, null_emit
from .models import (
    ContributionSection,
    EvaluationReport,
    ResearchIdea,
    RunManifest,
    SoundnessSection,
)
from .soundness import SoundnessConfig, SoundnessEngine

MODULES = ("soundness", "contribution")


def run_evaluation(
    idea: ResearchIdea,
    modules: Sequence[str],
    env: RunEnvironment,
    emit: EmitFn = null_emit,
    store: Optional[EvidenceStore] = None,
) -> EvaluationReport:
    requested = [m for m in MODULES if m in modules]
    if not requested:
        raise ValidationError(f"no known modules requested: {modules!r}")
    unknown = set(modules) - set(MODULES)
    if unknown:
        raise ValidationError(f"unknown modules requested: {sorted(unknown)}")

    config = env.config
    store = store if store is not None else EvidenceStore()
    repairs: list[str] = []
    notes: list[str] = []

    soundness_sections: list[SoundnessSection] = []
    tldr: Optional[str] = None
    if "soundness" in requested:
        engine = SoundnessEngine(env.gateway, env.scholarly, env.documents, store)
        result = engine.evaluate(
            idea,
            SoundnessConfig(
                backend=config.llm,
                budget=config.budgets,
                ablate_mre=config.ablate_mre,
                max_parallel_methods=config.max_parallel,
            ),
            emit,
        )
        soundness_sections = result.sections
        tldr = result.tldr
        notes.extend(result.notes)

    contribution_sections: list[ContributionSection] = []
    if "contribution" in requested:
        engine = ContributionEngine(env.gateway, env.scholarly, store)
        result = engine.evaluate(
            idea,
            ContributionConfig(
                backend=config.llm,
                embedding_backend=env.embedding,
                budget=config.budgets,
                ablate_pa=config.ablate_pa,
                ablate_pc=config.ablate_pc,
                relevance_threshold=config.relevance_threshold,
                embedding_top_n=config.embedding_top_n,
                max_parallel=config.max_parallel,
            ),
            emit,
        )
        contribution_sections = result.sections
        notes.extend(result.notes)

    emit("citation_audit", idea.id)

    def _audit(text: str) -> str:
        return audit_citations(text, store, config.llm, env.gateway, repairs)

    soundness_sections = [
        dataclasses.replace(
            section,
            support=_audit(section.support),
            contradictions=_audit(section.contradictions),
            suggestions=_audit(section.suggestions),
        )
        for section in soundness_sections
    ]
    contribution_sections = [
        dataclasses.replace(
            section,
            strengths=_audit(section.strengths),
            weaknesses=_audit(section.weaknesses),
            suggestions=_audit(section.suggestions),
        )
        for section in contribution_sections
    ]
    if tldr is not None:
        tldr = _audit(tldr)

    bibliography = _collect_bibliography(
        soundness_sections, contribution_sections, tldr, store
    )
    manifest = RunManifest(
        idea_id=idea.id,
        modules=tuple(requested),
        backends={
            "llm": config.llm.identity,
            "embedding": env.embedding.identity,
        },
        budgets=config.budgets.as_dict(),
        ablations={
            "mre": config.ablate_mre,
            "pa": config.ablate_pa,
            "pc": config.ablate_pc,
        },
        parameters={
            "relevance_threshold": config.relevance_threshold,
            "embedding_top_n": config.embedding_top_n,
            "downsample_rule": "relevance_desc,embedding_rank,paper_id",
            "cutoff_date": idea.cutoff_date.isoformat() if idea.cutoff_date else None,
            "sampling": config.llm.sampling_parameters(),
        },
        repairs=tuple(repairs),
        notes=tuple(notes),
    )
    report = EvaluationReport(
        idea_id=idea.id,
        soundness_sections=tuple(soundness_sections),
        contribution_sections=tuple(contribution_sections),
        bibliography=bibliography,
        run_manifest=manifest,
        soundness_tldr=tldr,
    )
    emit("done", idea.id, citations=len(bibliography))
    return report


def _collect_bibliography(
    soundness_sections: Sequence[SoundnessSection],
    contribution_sections: Sequence[ContributionSection],
    tldr: Optional[str],
    store: EvidenceStore,
) -> tuple:
    """Cited keys in order of first appearance across the report."""
    ordered: list[str] = []
    seen: set[str] = set()
    texts: list[str] = []
    if tldr:
        texts.append(tldr)
    for section in soundness_sections:
        texts.extend(section.texts)
    for section in contribution_sections:
        texts.extend(section.texts)
    for text in texts:
        for match in LINK_RE.finditer(text):
            label = match.group(1)
            if label in seen:
                continue
            if store.get(label) is not None:
                seen.add(label)
                ordered.append(label)
    return tuple((key, store.get(key)) for key in ordered)
