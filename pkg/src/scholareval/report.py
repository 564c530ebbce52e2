"""Markdown serialization of evaluation reports.

Serialization is a pure function of the report value: no timestamps, no
randomness, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
from typing import Any

from .citations import BARE_CITE_RE, LINK_RE, _looks_like_citation
from .errors import CitationIntegrityError
from .models import EvaluationReport, PaperEvidence

_HEADING_EXCERPT = 100


def _method_heading(index: int, description: str) -> str:
    first_line = description.strip().splitlines()[0]
    if len(first_line) > _HEADING_EXCERPT:
        first_line = first_line[: _HEADING_EXCERPT - 1] + "…"
    return f"### Method {index + 1}: {first_line}"


def verify_citations(report: EvaluationReport) -> None:
    """Reject any citation marker that does not resolve to the bibliography."""
    keys = report.bibliography_keys()
    urls = report.bibliography_urls()
    bad: list[str] = []
    for text in report.all_section_texts():
        for match in LINK_RE.finditer(text):
            label, url = match.group(1), match.group(2)
            if url not in urls or (label.startswith("(") and label not in keys):
                bad.append(match.group(0))
        for match in BARE_CITE_RE.finditer(text):
            if _looks_like_citation(match.group(1)):
                bad.append(f"[{match.group(1)}]")
    if bad:
        raise CitationIntegrityError(
            "unresolved citation markers: " + ", ".join(sorted(set(bad))), markers=bad
        )


def _bibliography_line(key: str, evidence: PaperEvidence) -> str:
    parts = [f"- [{key}]({evidence.url})" if evidence.url else f"- {key}"]
    if evidence.title:
        parts.append(evidence.title)
    if evidence.publication_date:
        parts.append(evidence.publication_date.strftime("%Y-%m"))
    return " ".join(parts) + "."


def serialize_report(report: EvaluationReport) -> str:
    """Render the full report as UTF-8 markdown.

    Section order: per-method soundness (Support, Contradictions, Suggestions),
    per-dimension contribution (Strengths, Weaknesses, Suggestions), then the
    bibliography.
    """
    verify_citations(report)
    lines: list[str] = [f"# Evaluation Report: {report.idea_id}", ""]
    manifest = report.run_manifest
    lines.append(f"_Modules: {', '.join(manifest.modules)}._")
    active = sorted(name for name, on in manifest.ablations.items() if on)
    if active:
        lines.append(f"_Ablations: {', '.join(active)}._")
    lines.append("")

    if report.soundness_sections:
        lines.extend(["## Soundness", ""])
        if report.soundness_tldr:
            lines.extend(["**TL;DR**", "", report.soundness_tldr.strip(), ""])
        for section in report.soundness_sections:
            lines.append(_method_heading(section.method.index, section.method.description))
            lines.extend(["", f"**Soundness score:** {section.soundness_score}/10", ""])
            for title, text in (
                ("Support", section.support),
                ("Contradictions", section.contradictions),
                ("Suggestions", section.suggestions),
            ):
                lines.extend([f"**{title}**", "", text.strip(), ""])

    if report.contribution_sections:
        lines.extend(["## Contribution", ""])
        for section in report.contribution_sections:
            lines.extend([f"### Dimension: {section.dimension.name}", ""])
            for title, text in (
                ("Strengths", section.strengths),
                ("Weaknesses", section.weaknesses),
                ("Suggestions", section.suggestions),
            ):
                lines.extend([f"**{title}**", "", text.strip(), ""])

    lines.extend(["## Bibliography", ""])
    for key, evidence in report.bibliography:
        lines.append(_bibliography_line(key, evidence))
    lines.append("")
    return "\n".join(lines)


def report_to_dict(report: EvaluationReport) -> dict[str, Any]:
    """Structured form of the report, JSON-serializable and deterministic."""
    return {
        "idea_id": report.idea_id,
        "soundness_tldr": report.soundness_tldr,
        "soundness_sections": [
            {
                "method_index": s.method.index,
                "method": s.method.description,
                "support": s.support,
                "contradictions": s.contradictions,
                "suggestions": s.suggestions,
                "soundness_score": s.soundness_score,
                "tldr": s.tldr,
            }
            for s in report.soundness_sections
        ],
        "contribution_sections": [
            {
                "dimension": s.dimension.name,
                "statements": list(s.dimension.statements),
                "strengths": s.strengths,
                "weaknesses": s.weaknesses,
                "suggestions": s.suggestions,
            }
            for s in report.contribution_sections
        ],
        "bibliography": [
            {
                "key": key,
                "paper_id": ev.paper_id,
                "title": ev.title,
                "authors": list(ev.authors),
                "date": ev.publication_date.isoformat() if ev.publication_date else None,
                "url": ev.url,
            }
            for key, ev in report.bibliography
        ],
        "run_manifest": report.run_manifest.to_dict(),
    }


def report_to_json(report: EvaluationReport) -> str:
    return json.dumps(report_to_dict(report), ensure_ascii=False, indent=2, sort_keys=True)
