"""Structured progress events emitted by the engines and consumed by the
service layer."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping


@dataclass(frozen=True)
class ProgressEvent:
    stage: str
    detail: str = ""
    counts: Mapping[str, int] = field(default_factory=dict)
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "detail": self.detail,
            "counts": dict(self.counts),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "ProgressEvent":
        return cls(
            stage=payload["stage"],
            detail=payload.get("detail", ""),
            counts=dict(payload.get("counts", {})),
            timestamp=payload.get("timestamp", 0.0),
        )


EmitFn = Callable[..., None]


def null_emit(stage: str, detail: str = "", **counts: int) -> None:
    return None
