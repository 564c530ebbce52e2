"""Literature-grounded evaluation of research ideas: per-method soundness and
per-dimension contribution reviews with verified citations, plus a metrics
harness for rubric-based scoring of generated reports."""

from .models import (
    ContributionDimension,
    ContributionSection,
    EvaluationReport,
    EvidenceSummary,
    MethodUnit,
    PairwiseComparison,
    PaperEvidence,
    Provenance,
    ResearchIdea,
    RubricAxis,
    RubricItem,
    RubricSeverity,
    RubricType,
    RunManifest,
    SoundnessSection,
)
from .dataset import load_scholarideas, write_scholarideas
from .report import serialize_report

__version__ = "0.1.0"

__all__ = [
    "ContributionDimension",
    "ContributionSection",
    "EvaluationReport",
    "EvidenceSummary",
    "MethodUnit",
    "PairwiseComparison",
    "PaperEvidence",
    "Provenance",
    "ResearchIdea",
    "RubricAxis",
    "RubricItem",
    "RubricSeverity",
    "RubricType",
    "RunManifest",
    "SoundnessSection",
    "load_scholarideas",
    "write_scholarideas",
    "serialize_report",
    "__version__",
]
