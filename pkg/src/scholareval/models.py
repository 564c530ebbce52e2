"""Domain types shared across the pipeline.

All types are immutable after construction and validate their invariants
eagerly, so a value that exists is a value that is well-formed.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

from .errors import ValidationError

# Per-field ceiling for evidence summaries; bounds synthesis-prompt growth.
SUMMARY_CHAR_BUDGET = 4000
TRUNCATION_MARKER = " [truncated]"


def parse_partial_date(raw: str) -> dt.date:
    """Parse 'YYYY', 'YYYY-MM' or 'YYYY-MM-DD' into a date.

    Missing components default to the first month/day, which keeps cutoff
    comparisons conservative for coarse-dated records.
    """
    raw = raw.strip()
    m = re.fullmatch(r"(\d{4})(?:-(\d{1,2}))?(?:-(\d{1,2}))?", raw)
    if not m:
        raise ValidationError(f"unparseable date: {raw!r}")
    year, month, day = int(m.group(1)), int(m.group(2) or 1), int(m.group(3) or 1)
    try:
        return dt.date(year, month, day)
    except ValueError as exc:
        raise ValidationError(f"invalid calendar date: {raw!r}") from exc


class Provenance(str, Enum):
    """How a paper entered the run's evidence pool."""

    SNIPPET_REFERENCE = "snippet_reference"
    DIRECT_SEARCH = "direct_search"
    RECOMMENDATION = "recommendation"
    CITED_BY_SEED = "cited_by_seed"


class RubricType(str, Enum):
    STRENGTH = "strength"
    WEAKNESS = "weakness"


class RubricAxis(str, Enum):
    SOUNDNESS = "soundness"
    CONTRIBUTION = "contribution"


class RubricSeverity(str, Enum):
    MAJOR = "major"
    MINOR = "minor"


@dataclass(frozen=True)
class ResearchIdea:
    """An input idea: free text covering problem, method and experiments."""

    id: str
    text: str
    cutoff_date: Optional[dt.date] = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("idea id must be non-empty")
        if not self.text or not self.text.strip():
            raise ValidationError("idea text must be non-empty")
        if self.cutoff_date is not None and not isinstance(self.cutoff_date, dt.date):
            raise ValidationError("cutoff_date must be a calendar date")


@dataclass(frozen=True)
class MethodUnit:
    """One extracted method, ranked by importance (index 0 = most important)."""

    index: int
    description: str

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError("method index must be >= 0")
        if not self.description or not self.description.strip():
            raise ValidationError("method description must be non-empty")


@dataclass(frozen=True)
class ContributionDimension:
    """A facet of potential novelty plus the statements that seed its queries."""

    name: str
    statements: tuple[str, ...]

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ValidationError("dimension name must be non-empty")
        if not self.statements:
            raise ValidationError(f"dimension {self.name!r} has no statements")
        for s in self.statements:
            if not s or not s.strip():
                raise ValidationError(f"dimension {self.name!r} has an empty statement")


@dataclass(frozen=True)
class PaperEvidence:
    """One retrieved paper with provenance and optional extracted sections."""

    paper_id: str
    title: str = ""
    authors: tuple[str, ...] = ()
    publication_date: Optional[dt.date] = None
    url: str = ""
    abstract: Optional[str] = None
    methods_text: Optional[str] = None
    results_text: Optional[str] = None
    provenance: Provenance = Provenance.DIRECT_SEARCH
    open_access_url: Optional[str] = None

    def __post_init__(self):
        if not self.paper_id:
            raise ValidationError("paper_id must be non-empty")
        if not isinstance(self.provenance, Provenance):
            raise ValidationError(f"unknown provenance: {self.provenance!r}")

    def within_cutoff(self, cutoff: Optional[dt.date]) -> bool:
        """False when a cutoff is active and this paper is dated after it or undated.

        Undated papers are excluded under an active cutoff so the evaluated
        idea's own paper can never leak into its evidence.
        """
        if cutoff is None:
            return True
        if self.publication_date is None:
            return False
        return self.publication_date <= cutoff


@dataclass(frozen=True)
class EvidenceSummary:
    """Condensed method/results/context for one paper, or a non-relevant marker."""

    paper_id: str
    relevant: bool
    method_summary: Optional[str] = None
    results_summary: Optional[str] = None
    context_summary: Optional[str] = None

    def __post_init__(self):
        if not self.paper_id:
            raise ValidationError("paper_id must be non-empty")
        summaries = (self.method_summary, self.results_summary, self.context_summary)
        if not self.relevant and any(s is not None for s in summaries):
            raise ValidationError("non-relevant summary must carry no summary fields")
        for s in summaries:
            if s is not None and len(s) > SUMMARY_CHAR_BUDGET:
                raise ValidationError(
                    f"summary field exceeds {SUMMARY_CHAR_BUDGET} character budget"
                )


def truncate_to_budget(text: str, budget: int = SUMMARY_CHAR_BUDGET) -> str:
    """Clamp text to the budget, appending a marker when anything was cut."""
    if len(text) <= budget:
        return text
    return text[: budget - len(TRUNCATION_MARKER)] + TRUNCATION_MARKER


@dataclass(frozen=True)
class SoundnessSection:
    """Per-method review: support, contradictions, suggestions and a 0-10 score."""

    method: MethodUnit
    support: str
    contradictions: str
    suggestions: str
    soundness_score: int
    tldr: Optional[str] = None

    def __post_init__(self):
        for name in ("support", "contradictions", "suggestions"):
            if not getattr(self, name) or not getattr(self, name).strip():
                raise ValidationError(f"soundness section field {name!r} is empty")
        if not isinstance(self.soundness_score, int) or isinstance(self.soundness_score, bool):
            raise ValidationError("soundness_score must be an integer")
        if not 0 <= self.soundness_score <= 10:
            raise ValidationError(
                f"soundness_score {self.soundness_score} outside [0, 10]"
            )

    @property
    def texts(self) -> tuple[str, str, str]:
        return (self.support, self.contradictions, self.suggestions)


@dataclass(frozen=True)
class PairwiseComparison:
    """Idea-vs-paper novelty contrast, scored per dimension in {-1, 0, 1}."""

    paper_id: str
    overall: str
    per_dimension: Mapping[str, tuple[str, int]]

    def __post_init__(self):
        if not self.paper_id:
            raise ValidationError("paper_id must be non-empty")
        for name, (_, score) in self.per_dimension.items():
            if score not in (-1, 0, 1):
                raise ValidationError(
                    f"pairwise score {score} for dimension {name!r} outside {{-1, 0, 1}}"
                )
        object.__setattr__(self, "per_dimension", dict(self.per_dimension))

    def covers(self, dimensions: Sequence[ContributionDimension]) -> bool:
        return {d.name for d in dimensions} == set(self.per_dimension)


@dataclass(frozen=True)
class ContributionSection:
    """Per-dimension review: strengths, weaknesses, suggestions."""

    dimension: ContributionDimension
    strengths: str
    weaknesses: str
    suggestions: str

    def __post_init__(self):
        for name in ("strengths", "weaknesses", "suggestions"):
            if not getattr(self, name) or not getattr(self, name).strip():
                raise ValidationError(f"contribution section field {name!r} is empty")

    @property
    def texts(self) -> tuple[str, str, str]:
        return (self.strengths, self.weaknesses, self.suggestions)


@dataclass(frozen=True)
class RubricItem:
    """One expert review statement with its type/axis/severity labels."""

    statement: str
    type: RubricType
    axis: RubricAxis
    severity: RubricSeverity
    discipline: Optional[str] = None

    def __post_init__(self):
        if not self.statement or not self.statement.strip():
            raise ValidationError("rubric statement must be non-empty")
        for enum_cls, value in (
            (RubricType, self.type),
            (RubricAxis, self.axis),
            (RubricSeverity, self.severity),
        ):
            if not isinstance(value, enum_cls):
                raise ValidationError(
                    f"{enum_cls.__name__} does not admit {value!r}"
                )


@dataclass(frozen=True)
class RunManifest:
    """Deterministic record of how a report was produced.

    Wall-clock timestamps live on the job record, not here, so that a report
    rendered from identical inputs is identical bytes.
    """

    idea_id: str
    modules: tuple[str, ...]
    backends: Mapping[str, str] = field(default_factory=dict)
    budgets: Mapping[str, int] = field(default_factory=dict)
    ablations: Mapping[str, bool] = field(default_factory=dict)
    parameters: Mapping[str, Any] = field(default_factory=dict)
    repairs: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "backends", dict(self.backends))
        object.__setattr__(self, "budgets", dict(self.budgets))
        object.__setattr__(self, "ablations", dict(self.ablations))
        object.__setattr__(self, "parameters", dict(self.parameters))

    def to_dict(self) -> dict[str, Any]:
        return {
            "idea_id": self.idea_id,
            "modules": list(self.modules),
            "backends": dict(self.backends),
            "budgets": dict(self.budgets),
            "ablations": dict(self.ablations),
            "parameters": dict(self.parameters),
            "repairs": list(self.repairs),
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class EvaluationReport:
    """The full evaluation: soundness sections, contribution sections, bibliography."""

    idea_id: str
    soundness_sections: tuple[SoundnessSection, ...]
    contribution_sections: tuple[ContributionSection, ...]
    bibliography: tuple[tuple[str, PaperEvidence], ...]
    run_manifest: RunManifest
    soundness_tldr: Optional[str] = None

    def __post_init__(self):
        keys = [key for key, _ in self.bibliography]
        if len(keys) != len(set(keys)):
            raise ValidationError("bibliography keys must be unique")

    def bibliography_keys(self) -> set[str]:
        return {key for key, _ in self.bibliography}

    def bibliography_urls(self) -> set[str]:
        return {ev.url for _, ev in self.bibliography if ev.url}

    def all_section_texts(self) -> list[str]:
        texts: list[str] = []
        for section in self.soundness_sections:
            texts.extend(section.texts)
        for section in self.contribution_sections:
            texts.extend(section.texts)
        if self.soundness_tldr:
            texts.append(self.soundness_tldr)
        return texts
