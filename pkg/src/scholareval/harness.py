"""Metrics over generated reports: rubric coverage via an LLM judge,
reference-invalidity aggregation, and pairwise report judging with
order-swap debiasing.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from statistics import fmean
from typing import Optional, Sequence

from .errors import ContractError, UndefinedRateError, ValidationError
from .gateway import BackendDescriptor, LlmGateway, OutputShape, extract_structured, render_prompt
from .models import RubricItem
from .prompts import COVERAGE_JUDGE, REPORT_JUDGE


@dataclass(frozen=True)
class CoverageScore:
    rubric: RubricItem
    score: int
    judge_rationale: str

    def __post_init__(self):
        if not isinstance(self.score, int) or isinstance(self.score, bool):
            raise ValidationError("coverage score must be an integer")
        if not 1 <= self.score <= 5:
            raise ValidationError(f"coverage score {self.score} outside [1, 5]")


class Winner(str, Enum):
    A = "A"
    B = "B"
    TIE = "Tie"


_SWAPPED = {Winner.A: Winner.B, Winner.B: Winner.A, Winner.TIE: Winner.TIE}

CRITERIA = ("evidence_support", "actionability", "depth")


@dataclass(frozen=True)
class PairwiseVerdict:
    evidence_support: Winner
    actionability: Winner
    depth: Winner
    rationales: dict[str, str]

    def winners(self) -> dict[str, Winner]:
        return {
            "evidence_support": self.evidence_support,
            "actionability": self.actionability,
            "depth": self.depth,
        }


def score_coverage(
    review: str,
    rubric: RubricItem,
    judge_backend: BackendDescriptor,
    gateway: LlmGateway,
) -> CoverageScore:
    """1-5 judge score of how well the review expresses one rubric statement."""
    if not review or not review.strip():
        raise ValidationError("review must be non-empty")
    prompt = render_prompt(
        COVERAGE_JUDGE,
        {"rubric_statement": rubric.statement, "review": review},
    )
    raw = gateway.complete(judge_backend, prompt, tag=COVERAGE_JUDGE.name)
    parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
    if not isinstance(parsed, dict):
        raise ContractError("coverage judge must return a JSON object")
    try:
        score = int(str(parsed.get("score")).strip())
    except (TypeError, ValueError):
        raise ContractError(f"coverage score not an integer: {parsed.get('score')!r}")
    if not 1 <= score <= 5:
        raise ContractError(f"coverage score {score} outside [1, 5]")
    return CoverageScore(
        rubric=rubric, score=score, judge_rationale=str(parsed.get("rationale", ""))
    )


def aggregate_coverage(scores: Sequence[CoverageScore]) -> float:
    """Arithmetic mean over all rubric scores; undefined on empty input."""
    if not scores:
        raise UndefinedRateError("coverage aggregate undefined over zero scores")
    return fmean(score.score for score in scores)


def aggregate_coverage_by_discipline(
    scores: Sequence[CoverageScore],
) -> dict[str, float]:
    """Per-discipline means for rubrics that carry a discipline tag."""
    groups: dict[str, list[int]] = defaultdict(list)
    for score in scores:
        if score.rubric.discipline:
            groups[score.rubric.discipline].append(score.score)
    return {name: fmean(values) for name, values in sorted(groups.items())}


def _judge_once(
    report_a: str,
    report_b: str,
    judge_backend: BackendDescriptor,
    gateway: LlmGateway,
) -> dict[str, tuple[Winner, str]]:
    prompt = render_prompt(
        REPORT_JUDGE, {"report_a": report_a, "report_b": report_b}
    )
    try:
        return _parse_judgment(gateway.complete(judge_backend, prompt, tag=REPORT_JUDGE.name))
    except ContractError:
        corrective = (
            prompt
            + "\nYour previous output was missing a criterion. Provide all six "
            "fields with winners among A, B, or Tie.\n"
        )
        return _parse_judgment(
            gateway.complete(judge_backend, corrective, tag=REPORT_JUDGE.name)
        )


def _parse_judgment(raw: str) -> dict[str, tuple[Winner, str]]:
    parsed = extract_structured(raw, OutputShape.JSON_BLOCK)
    if not isinstance(parsed, dict):
        raise ContractError("report judge must return a JSON object")
    fields = {
        "evidence_support": "Evidence-support",
        "actionability": "Actionability",
        "depth": "Depth",
    }
    out: dict[str, tuple[Winner, str]] = {}
    for criterion, prefix in fields.items():
        raw_winner = str(parsed.get(f"{prefix}-winner", "")).strip()
        if raw_winner.upper() == "A":
            winner = Winner.A
        elif raw_winner.upper() == "B":
            winner = Winner.B
        elif raw_winner.lower() == "tie":
            winner = Winner.TIE
        else:
            raise ContractError(
                f"report judge returned no valid winner for {criterion}: {raw_winner!r}"
            )
        out[criterion] = (winner, str(parsed.get(f"{prefix}-rationale", "")))
    return out


def judge_pairwise(
    report_a: str,
    report_b: str,
    judge_backend: BackendDescriptor,
    gateway: LlmGateway,
) -> PairwiseVerdict:
    """Judge both orders and reconcile; disagreement downgrades to Tie.

    The judged result is therefore invariant under swapping the report labels.
    """
    if not report_a.strip() or not report_b.strip():
        raise ValidationError("both reports must be non-empty")
    forward = _judge_once(report_a, report_b, judge_backend, gateway)
    backward = _judge_once(report_b, report_a, judge_backend, gateway)

    final: dict[str, tuple[Winner, str]] = {}
    for criterion in CRITERIA:
        winner_fwd, rationale_fwd = forward[criterion]
        winner_bwd, rationale_bwd = backward[criterion]
        normalized_bwd = _SWAPPED[winner_bwd]
        if winner_fwd is normalized_bwd:
            final[criterion] = (winner_fwd, rationale_fwd)
        else:
            final[criterion] = (
                Winner.TIE,
                "order-swap disagreement; downgraded to Tie. "
                f"Forward: {rationale_fwd} Backward: {rationale_bwd}",
            )
    return PairwiseVerdict(
        evidence_support=final["evidence_support"][0],
        actionability=final["actionability"][0],
        depth=final["depth"][0],
        rationales={criterion: final[criterion][1] for criterion in CRITERIA},
    )
