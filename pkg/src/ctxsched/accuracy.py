"""Per-(context, label) accuracy tables and the synthetic size-monotone model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .catalog import ContextCatalog
from .errors import ValidationError


@dataclass(frozen=True)
class AccuracyTable:
    """Accuracy values a in [0, 1] keyed by (context id, label id).

    Entries exist only for labels that belong to the keyed context. A missing
    entry means the context never qualifies for that label.
    """

    entries: Mapping[tuple[int, int], float]

    def __post_init__(self):
        for (context_id, label), value in self.entries.items():
            if not 0.0 <= value <= 1.0:
                raise ValidationError(
                    f"accuracy for context {context_id}, label {label} is {value}, outside [0, 1]"
                )

    def get(self, context_id: int, label: int) -> float | None:
        return self.entries.get((context_id, label))

    def qualifies(self, context_id: int, label: int, tau: float) -> bool:
        value = self.entries.get((context_id, label))
        return value is not None and value >= tau

    def validate_for(self, catalog: ContextCatalog, *, require_complete: bool = False) -> None:
        """Check that every key's label belongs to its context (and optionally
        that every (context, member) pair has an entry)."""
        by_id = {context.id: context.label_set for context in catalog.contexts}
        for context_id, label in self.entries:
            members = by_id.get(context_id)
            if members is None:
                raise ValidationError(f"accuracy entry references unknown context {context_id}")
            if label not in members:
                raise ValidationError(
                    f"accuracy entry for context {context_id} names label {label}, "
                    "which the context does not contain"
                )
        if require_complete:
            for context in catalog.contexts:
                for label in context.labels:
                    if (context.id, label) not in self.entries:
                        raise ValidationError(
                            f"missing accuracy entry for context {context.id}, label {label}"
                        )


def synthetic_accuracy(
    catalog: ContextCatalog, a_max: float = 0.9, size_slope: float = 0.02
) -> AccuracyTable:
    """Size-monotone model: a = clamp(a_max - size_slope*(|C|-1), 0, 1).

    Smaller contexts score higher, mirroring the observation that narrower
    specialists are more accurate on their own labels.
    """
    if not 0.0 <= a_max <= 1.0:
        raise ValidationError("a_max must lie in [0, 1]")
    if size_slope < 0.0:
        raise ValidationError("size_slope must be non-negative")
    entries: dict[tuple[int, int], float] = {}
    for context in catalog.contexts:
        value = min(1.0, max(0.0, a_max - size_slope * (context.size - 1)))
        for label in context.labels:
            entries[(context.id, label)] = value
    return AccuracyTable(entries)


def save_accuracy(table: AccuracyTable, path: str | Path) -> None:
    records = [
        {"context": context_id, "label": label, "accuracy": value}
        for (context_id, label), value in sorted(table.entries.items())
    ]
    Path(path).write_text(
        json.dumps({"entries": records}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_accuracy(path: str | Path) -> AccuracyTable:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = {
            (int(item["context"]), int(item["label"])): float(item["accuracy"])
            for item in payload["entries"]
        }
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed accuracy table file: {exc}") from exc
    return AccuracyTable(entries)
