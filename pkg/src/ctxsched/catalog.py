"""Greedy construction of label contexts from co-occurrence, plus catalog plumbing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cooccurrence import CooccurrenceMatrix, top_neighbors
from .errors import InfeasibleError, ValidationError

VARIANTS = ("basic", "greedy_nonoverlap", "greedy_overlap")


@dataclass(frozen=True)
class Context:
    """A group of labels served together by one specialized adapter."""

    id: int
    labels: tuple[int, ...]

    def __post_init__(self):
        normalized = tuple(sorted(set(self.labels)))
        if not normalized:
            raise ValidationError("a context must contain at least one label")
        object.__setattr__(self, "labels", normalized)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def label_set(self) -> frozenset[int]:
        return frozenset(self.labels)


@dataclass(frozen=True)
class ContextCatalog:
    """The context collection with its size budget B and count budget M_max.

    Construction is permissive so that invalid catalogs (e.g. loaded from
    foreign files) can still be inspected; ``validate_catalog`` reports any
    violations, and ``build_contexts`` never returns a catalog that fails it.
    """

    contexts: tuple[Context, ...]
    max_context_size: int
    max_context_count: int
    variant: str

    def __post_init__(self):
        if self.max_context_size < 1:
            raise ValidationError("max_context_size (B) must be at least 1")
        if self.max_context_count < 1:
            raise ValidationError("max_context_count (M_max) must be at least 1")
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        ids = [context.id for context in self.contexts]
        if len(set(ids)) != len(ids):
            raise ValidationError("context ids must be unique")

    @property
    def context_count(self) -> int:
        return len(self.contexts)

    def context_ids(self) -> frozenset[int]:
        return frozenset(context.id for context in self.contexts)

    def by_id(self, context_id: int) -> Context:
        for context in self.contexts:
            if context.id == context_id:
                return context
        raise ValidationError(f"no context with id {context_id}")

    def union_labels(self) -> frozenset[int]:
        labels: set[int] = set()
        for context in self.contexts:
            labels.update(context.labels)
        return frozenset(labels)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_catalog: empty iff every invariant holds."""

    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def frequent_labels(matrix: CooccurrenceMatrix, min_frequency: float = 0.0) -> frozenset[int]:
    """Labels whose frame frequency strictly exceeds min_frequency.

    The default of 0 keeps any label ever seen.
    """
    return frozenset(
        label for label in range(matrix.label_count) if matrix.frequency(label) > min_frequency
    )


def build_contexts(
    matrix: CooccurrenceMatrix,
    valid_labels: Iterable[int],
    B: int,
    M_max: int,
    variant: str,
    *,
    shuffle_seed: int | None = None,
) -> ContextCatalog:
    """Construct a context catalog covering ``valid_labels``.

    Greedy variants seed clusters around labels in descending frame-frequency
    order (ties by ascending id) and grow each cluster with the seed's
    strongest co-occurring neighbors up to size B, keeping only clusters that
    are unique as sets while fewer than M_max exist. The non-overlapping
    variant skips seeds already assigned and restricts neighbors to
    unassigned labels; the overlapping variant lets labels join several
    clusters. Any labels left uncovered afterwards are placed by
    :func:`repair_uncovered`. The basic variant shuffles the valid labels
    with ``shuffle_seed`` and chunks them into size-B groups.

    Raises :class:`InfeasibleError` naming the uncovered labels when coverage
    cannot be achieved within B and M_max.
    """
    valid = sorted(set(valid_labels))
    for label in valid:
        if not 0 <= label < matrix.label_count:
            raise ValidationError(f"valid label {label} out of range [0, {matrix.label_count})")
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if B < 1:
        raise ValidationError("B must be at least 1")
    if M_max < 1:
        raise ValidationError("M_max must be at least 1")

    if variant == "basic":
        catalog = _build_basic(valid, B, M_max, shuffle_seed)
    else:
        catalog = _build_greedy(matrix, valid, B, M_max, overlap=(variant == "greedy_overlap"))
        uncovered = frozenset(valid) - catalog.union_labels()
        catalog = repair_uncovered(catalog, uncovered, matrix)

    report = validate_catalog(catalog, valid)
    if not report.ok:
        raise ValidationError(
            "built catalog failed validation: " + "; ".join(report.violations)
        )
    return catalog


def _build_basic(valid: list[int], B: int, M_max: int, shuffle_seed: int | None) -> ContextCatalog:
    if shuffle_seed is None:
        raise ValidationError("basic variant requires an explicit shuffle_seed")
    rng = np.random.default_rng(shuffle_seed)
    order = list(valid)
    rng.shuffle(order)
    chunks = [order[start : start + B] for start in range(0, len(order), B)]
    if len(chunks) > M_max:
        leftover = sorted(label for chunk in chunks[M_max:] for label in chunk)
        raise InfeasibleError(
            f"cannot cover labels {leftover} within M_max={M_max} contexts of size {B}",
            uncovered=leftover,
        )
    contexts = tuple(Context(i, tuple(chunk)) for i, chunk in enumerate(chunks))
    return ContextCatalog(contexts, B, M_max, "basic")


def _build_greedy(
    matrix: CooccurrenceMatrix,
    valid: list[int],
    B: int,
    M_max: int,
    overlap: bool,
) -> ContextCatalog:
    valid_set = set(valid)
    seeds = sorted(valid, key=lambda label: (-matrix.frequency(label), label))
    assigned: set[int] = set()
    seen_sets: set[frozenset[int]] = set()
    contexts: list[Context] = []
    for seed in seeds:
        if not overlap and seed in assigned:
            continue
        pool = valid_set if overlap else valid_set - assigned
        neighbors = [
            j for j in top_neighbors(matrix, seed, matrix.label_count) if j in pool and j != seed
        ]
        cluster = [seed] + neighbors[: B - 1]
        cluster_set = frozenset(cluster)
        if cluster_set in seen_sets or len(contexts) >= M_max:
            continue
        contexts.append(Context(len(contexts), tuple(cluster)))
        seen_sets.add(cluster_set)
        if not overlap:
            assigned.update(cluster_set)
    variant = "greedy_overlap" if overlap else "greedy_nonoverlap"
    return ContextCatalog(tuple(contexts), B, M_max, variant)


def repair_uncovered(
    catalog: ContextCatalog,
    uncovered: Iterable[int],
    matrix: CooccurrenceMatrix,
) -> ContextCatalog:
    """Insert each uncovered label into the best-fitting context with room.

    Best fit maximizes the summed co-occurrence with the context's current
    members; ties prefer the smallest context, then the lowest context id.
    When no context has space and the catalog is below M_max, a new singleton
    context is created; otherwise the call raises :class:`InfeasibleError`.
    """
    uncovered = sorted(set(uncovered))
    if not uncovered:
        return catalog
    union = catalog.union_labels()
    overlap_found = [label for label in uncovered if label in union]
    if overlap_found:
        raise ValidationError(f"labels {overlap_found} are already covered by the catalog")

    contexts = list(catalog.contexts)
    B = catalog.max_context_size
    existing = {context.label_set for context in contexts}
    for label in uncovered:
        best_position: int | None = None
        best_key: tuple[float, int, int] | None = None
        for position, context in enumerate(contexts):
            if context.size >= B:
                continue
            if frozenset(context.labels) | {label} in existing:
                continue  # insertion would duplicate an existing context
            score = float(sum(matrix.pair(label, member) for member in context.labels))
            key = (-score, context.size, context.id)
            if best_key is None or key < best_key:
                best_key = key
                best_position = position
        if best_position is not None:
            old = contexts[best_position]
            existing.discard(old.label_set)
            updated = Context(old.id, old.labels + (label,))
            contexts[best_position] = updated
            existing.add(updated.label_set)
        elif len(contexts) < catalog.max_context_count:
            fresh = Context(_next_id(contexts), (label,))
            contexts.append(fresh)
            existing.add(fresh.label_set)
        else:
            remaining = [l for l in uncovered if l not in {c for ctx in contexts for c in ctx.labels}]
            raise InfeasibleError(
                f"no room for labels {remaining}: all contexts full and context count at "
                f"M_max={catalog.max_context_count}",
                uncovered=remaining,
            )
    return replace(catalog, contexts=tuple(contexts))


def _next_id(contexts: Sequence[Context]) -> int:
    return max((context.id for context in contexts), default=-1) + 1


def validate_catalog(catalog: ContextCatalog, valid_labels: Iterable[int]) -> ValidationReport:
    """Report violations of the catalog invariants; never raises."""
    violations: list[str] = []
    for context in catalog.contexts:
        if context.size > catalog.max_context_size:
            violations.append(
                f"context {context.id} has {context.size} labels, exceeding B="
                f"{catalog.max_context_size}"
            )
    if catalog.context_count > catalog.max_context_count:
        violations.append(
            f"catalog has {catalog.context_count} contexts, exceeding M_max="
            f"{catalog.max_context_count}"
        )
    seen: dict[frozenset[int], int] = {}
    for context in catalog.contexts:
        if context.label_set in seen:
            violations.append(
                f"contexts {seen[context.label_set]} and {context.id} contain the same labels"
            )
        else:
            seen[context.label_set] = context.id
    if catalog.variant == "greedy_nonoverlap":
        claimed: dict[int, int] = {}
        for context in catalog.contexts:
            for label in context.labels:
                if label in claimed:
                    violations.append(
                        f"label {label} appears in contexts {claimed[label]} and {context.id} "
                        "under the non-overlapping variant"
                    )
                else:
                    claimed[label] = context.id
    missing = sorted(set(valid_labels) - catalog.union_labels())
    if missing:
        violations.append(f"labels {missing} are not covered by any context")
    return ValidationReport(tuple(violations))


def catalog_to_dict(catalog: ContextCatalog) -> dict:
    return {
        "B": catalog.max_context_size,
        "M_max": catalog.max_context_count,
        "variant": catalog.variant,
        "contexts": [
            {"id": context.id, "labels": list(context.labels)} for context in catalog.contexts
        ],
    }


def catalog_from_dict(payload: dict) -> ContextCatalog:
    try:
        contexts = tuple(
            Context(int(item["id"]), tuple(int(x) for x in item["labels"]))
            for item in payload["contexts"]
        )
        return ContextCatalog(
            contexts=contexts,
            max_context_size=int(payload["B"]),
            max_context_count=int(payload["M_max"]),
            variant=str(payload["variant"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed catalog payload: {exc}") from exc


def save_catalog(catalog: ContextCatalog, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(catalog_to_dict(catalog), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_catalog(path: str | Path) -> ContextCatalog:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"catalog file is not valid JSON: {exc}") from exc
    return catalog_from_dict(payload)


def catalog_digest(catalog: ContextCatalog) -> str:
    """Stable content hash used to tie traces to the catalog they were run on."""
    canonical = json.dumps(catalog_to_dict(catalog), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
