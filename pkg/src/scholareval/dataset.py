"""Loading and writing of idea/rubric datasets.

On-disk layout: one idea text file (``<stem>.txt``) paired by stem with one
line-delimited rubric file (``<stem>.jsonl``), optionally grouped under one
directory per discipline. The loader accepts both the grouped and the flat
layout; pairing is purely by stem.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

from .errors import DatasetNotFoundError, DatasetParseError
from .models import ResearchIdea, RubricAxis, RubricItem, RubricSeverity, RubricType

RUBRIC_FIELDS = ("statement", "type", "axis", "severity")


def parse_rubric_line(line: str, path: str = "<memory>", line_no: int = 1,
                      discipline: Optional[str] = None) -> RubricItem:
    """Parse one JSON rubric record, rejecting unknown enum values."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(f"invalid JSON: {exc.msg}", path, line_no) from exc
    if not isinstance(record, dict):
        raise DatasetParseError("rubric record must be an object", path, line_no)
    for name in RUBRIC_FIELDS:
        if name not in record:
            raise DatasetParseError(f"missing field {name!r}", path, line_no)
    try:
        rubric_type = RubricType(record["type"])
        axis = RubricAxis(record["axis"])
        severity = RubricSeverity(record["severity"])
    except ValueError as exc:
        raise DatasetParseError(str(exc), path, line_no) from exc
    statement = record["statement"]
    if not isinstance(statement, str) or not statement.strip():
        raise DatasetParseError("statement must be non-empty text", path, line_no)
    return RubricItem(
        statement=statement,
        type=rubric_type,
        axis=axis,
        severity=severity,
        discipline=discipline,
    )


def serialize_rubric(item: RubricItem) -> str:
    """One rubric as a single JSON line (no trailing newline)."""
    return json.dumps(
        {
            "statement": item.statement,
            "type": item.type.value,
            "axis": item.axis.value,
            "severity": item.severity.value,
        },
        ensure_ascii=False,
        sort_keys=True,
    )


def _load_rubric_file(path: Path, discipline: Optional[str]) -> list[RubricItem]:
    items: list[RubricItem] = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            items.append(parse_rubric_line(line, str(path), line_no, discipline))
    return items


def _iter_idea_files(root: Path) -> Iterable[tuple[Optional[str], Path]]:
    """Yield (discipline, idea_text_path) pairs in deterministic order."""
    for txt in sorted(root.glob("*.txt")):
        yield None, txt
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for txt in sorted(sub.glob("*.txt")):
            yield sub.name, txt


def load_scholarideas(path: str | Path) -> list[tuple[ResearchIdea, list[RubricItem]]]:
    """Load every (idea, rubrics) pair under ``path``.

    Raises DatasetNotFoundError when the root or a paired rubric file is
    missing, DatasetParseError (naming file and line) on malformed records.
    """
    root = Path(path)
    if not root.exists():
        raise DatasetNotFoundError(f"dataset path does not exist: {root}")
    if not root.is_dir():
        raise DatasetNotFoundError(f"dataset path is not a directory: {root}")

    pairs: list[tuple[ResearchIdea, list[RubricItem]]] = []
    for discipline, txt in _iter_idea_files(root):
        rubric_path = txt.with_suffix(".jsonl")
        if not rubric_path.exists():
            raise DatasetNotFoundError(
                f"idea {txt.name} has no paired rubric file {rubric_path.name}"
            )
        text = txt.read_text(encoding="utf-8")
        if not text.strip():
            raise DatasetParseError("idea text file is empty", str(txt))
        idea_id = f"{discipline}/{txt.stem}" if discipline else txt.stem
        idea = ResearchIdea(id=idea_id, text=text)
        pairs.append((idea, _load_rubric_file(rubric_path, discipline)))
    return pairs


def write_scholarideas(
    path: str | Path,
    pairs: Iterable[tuple[ResearchIdea, list[RubricItem]]],
) -> None:
    """Write pairs in the on-disk layout; idea ids become discipline/stem paths."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for idea, rubrics in pairs:
        if "/" in idea.id:
            discipline, stem = idea.id.split("/", 1)
            target = root / discipline
            target.mkdir(parents=True, exist_ok=True)
        else:
            stem, target = idea.id, root
        (target / f"{stem}.txt").write_text(idea.text, encoding="utf-8")
        lines = "".join(serialize_rubric(item) + "\n" for item in rubrics)
        (target / f"{stem}.jsonl").write_text(lines, encoding="utf-8")


def dataset_counts(path: str | Path) -> tuple[int, int]:
    """(idea count, total rubric count) for a dataset tree."""
    pairs = load_scholarideas(path)
    return len(pairs), sum(len(rubrics) for _, rubrics in pairs)
