"""Selection traces: per-frame policy decisions plus JSON/CSV interchange."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .catalog import ContextCatalog, catalog_digest
from .errors import ValidationError

TRACE_FORMAT = "selection-trace/1"


@dataclass(frozen=True)
class FrameRecord:
    """What one frame looked like to the policy and what it selected."""

    index: int
    predicted: frozenset[int]
    truth: frozenset[int]
    selected: frozenset[int]
    changed: bool
    uncovered: frozenset[int] = frozenset()


@dataclass(frozen=True)
class SelectionTrace:
    """A full per-frame run of one selection policy over one stream.

    Construction enforces the trace invariants: selected ids belong to the
    catalog, frame indices are contiguous, and ``changed`` flags agree with
    consecutive set differences (the first frame compares against the empty
    set).
    """

    records: tuple[FrameRecord, ...]
    catalog: ContextCatalog
    policy: str
    tau: float
    context_copy: bool = False

    def __post_init__(self):
        known = self.catalog.context_ids()
        previous: frozenset[int] = frozenset()
        for expected, record in enumerate(self.records):
            if record.index != expected:
                raise ValidationError(
                    f"trace frame indices must be contiguous: expected {expected}, "
                    f"found {record.index}"
                )
            stray = record.selected - known
            if stray:
                raise ValidationError(
                    f"frame {record.index} selects unknown context ids {sorted(stray)}"
                )
            if record.changed != (record.selected != previous):
                raise ValidationError(
                    f"frame {record.index} changed flag is inconsistent with the selection"
                )
            previous = record.selected

    @property
    def frame_count(self) -> int:
        return len(self.records)

    def selected_sizes(self) -> list[int]:
        return [len(record.selected) for record in self.records]

    def selections(self) -> list[frozenset[int]]:
        return [record.selected for record in self.records]


def trace_to_dict(trace: SelectionTrace) -> dict:
    return {
        "header": {
            "format": TRACE_FORMAT,
            "policy": trace.policy,
            "tau": trace.tau,
            "context_copy": trace.context_copy,
            "catalog_sha256": catalog_digest(trace.catalog),
            "frame_count": trace.frame_count,
        },
        "frames": [
            {
                "t": record.index,
                "pred": sorted(record.predicted),
                "truth": sorted(record.truth),
                "S": sorted(record.selected),
                "changed": record.changed,
                "uncovered": sorted(record.uncovered),
            }
            for record in trace.records
        ],
    }


def write_trace(trace: SelectionTrace, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(trace_to_dict(trace), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_trace(path: str | Path, catalog: ContextCatalog) -> SelectionTrace:
    """Load a trace written by :func:`write_trace`, bound to its catalog.

    The stored catalog hash must match the supplied catalog; a mismatch means
    the trace was produced against different contexts and is rejected.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        header = payload["header"]
        frames = payload["frames"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"malformed trace file: {exc}") from exc
    if header.get("format") != TRACE_FORMAT:
        raise ValidationError(f"unsupported trace format {header.get('format')!r}")
    if header.get("catalog_sha256") != catalog_digest(catalog):
        raise ValidationError("trace catalog hash does not match the supplied catalog")
    try:
        records = tuple(
            FrameRecord(
                index=int(item["t"]),
                predicted=frozenset(int(x) for x in item["pred"]),
                truth=frozenset(int(x) for x in item["truth"]),
                selected=frozenset(int(x) for x in item["S"]),
                changed=bool(item["changed"]),
                uncovered=frozenset(int(x) for x in item.get("uncovered", [])),
            )
            for item in frames
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed trace frame record: {exc}") from exc
    return SelectionTrace(
        records=records,
        catalog=catalog,
        policy=str(header.get("policy", "unknown")),
        tau=float(header.get("tau", 0.0)),
        context_copy=bool(header.get("context_copy", False)),
    )


def trace_to_csv(trace: SelectionTrace, path: str | Path) -> None:
    """One row per frame; multi-valued cells are pipe-separated."""

    def pack(values: frozenset[int]) -> str:
        return "|".join(str(v) for v in sorted(values))

    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "pred", "truth", "S", "changed", "uncovered"])
        for record in trace.records:
            writer.writerow(
                [
                    record.index,
                    pack(record.predicted),
                    pack(record.truth),
                    pack(record.selected),
                    int(record.changed),
                    pack(record.uncovered),
                ]
            )
