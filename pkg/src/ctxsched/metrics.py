"""Clustering and trace metrics: coherence, coverage, switching, score proxy."""

from __future__ import annotations

from dataclasses import dataclass

from .accuracy import AccuracyTable
from .catalog import ContextCatalog
from .cooccurrence import CooccurrenceMatrix
from .errors import ValidationError
from .trace import SelectionTrace


@dataclass(frozen=True)
class CoverageScore:
    """Accuracy-weighted coverage of ground-truth labels, plus the miss count.

    A deterministic proxy for model-quality comparisons between policies;
    real predictive metrics require trained models and are out of scope.
    """

    score: float
    uncovered_label_frames: int


@dataclass(frozen=True)
class MetricsReport:
    intra_coherence: float
    avg_coverage: float
    switch_penalty: int
    switch_cost_symdiff: int
    coverage_weighted_score: float
    uncovered_label_frames: int


def intra_coherence(
    catalog: ContextCatalog, matrix: CooccurrenceMatrix, *, scale: str = "normalized"
) -> float:
    """Mean over contexts of the mean pairwise co-occurrence of their labels.

    Evaluated over ordered pairs with the |C|(|C|-1) divisor; since the
    matrix is symmetric this equals the unordered-pair mean. Singleton
    contexts contribute 0 (the divisor would be zero). ``scale="counts"``
    reports the same quantity on the raw frame-count scale, since published
    coherence magnitudes are not always on the normalized scale and only
    orderings transfer across conventions.
    """
    if catalog.context_count == 0:
        raise ValidationError("intra_coherence is undefined for an empty catalog")
    if scale not in ("normalized", "counts"):
        raise ValidationError(f"unknown scale {scale!r}")
    factor = float(matrix.frame_count) if scale == "counts" else 1.0
    total = 0.0
    for context in catalog.contexts:
        size = context.size
        if size < 2:
            continue
        pair_sum = 0.0
        for i in context.labels:
            for j in context.labels:
                if i != j:
                    pair_sum += matrix.pair(i, j)
        total += pair_sum / (size * (size - 1))
    return factor * total / catalog.context_count


def avg_coverage(trace: SelectionTrace) -> float:
    """Average number of contexts active per frame."""
    if trace.frame_count == 0:
        raise ValidationError("avg_coverage is undefined for an empty trace")
    return sum(trace.selected_sizes()) / trace.frame_count


def switch_penalty(trace: SelectionTrace) -> int:
    """Number of frames (from the second onward) whose selection changed."""
    if trace.frame_count == 0:
        raise ValidationError("switch_penalty is undefined for an empty trace")
    selections = trace.selections()
    return sum(
        1 for previous, current in zip(selections, selections[1:]) if current != previous
    )


def switch_cost_symdiff(trace: SelectionTrace) -> int:
    """Total symmetric-difference switching cost, counting the initial switch-in.

    The selection before the first frame is the empty set, so frame one
    contributes its full size.
    """
    total = 0
    previous: frozenset[int] = frozenset()
    for selection in trace.selections():
        total += len(selection ^ previous)
        previous = selection
    return total


def total_selection_cost(trace: SelectionTrace) -> int:
    """The combined objective: context count plus switching, summed over frames."""
    return sum(trace.selected_sizes()) + switch_cost_symdiff(trace)


def coverage_weighted_score(
    trace: SelectionTrace, accuracy: AccuracyTable, catalog: ContextCatalog
) -> CoverageScore:
    """Mean over (frame, truth label) pairs of the best selected accuracy.

    A pair contributes the maximum a over selected contexts containing the
    label, or 0 when no selected context contains it; such misses are also
    counted in ``uncovered_label_frames``. With nothing demanded anywhere the
    score is vacuously 1.0.
    """
    members = {context.id: context.label_set for context in catalog.contexts}
    total = 0.0
    pairs = 0
    misses = 0
    for record in trace.records:
        for label in record.truth:
            pairs += 1
            best = None
            for cid in record.selected:
                if label in members[cid]:
                    value = accuracy.get(cid, label)
                    if value is not None and (best is None or value > best):
                        best = value
            if best is None:
                misses += 1
            else:
                total += best
    if pairs == 0:
        return CoverageScore(score=1.0, uncovered_label_frames=0)
    return CoverageScore(score=total / pairs, uncovered_label_frames=misses)


def compute_metrics(
    trace: SelectionTrace,
    matrix: CooccurrenceMatrix,
    accuracy: AccuracyTable,
) -> MetricsReport:
    """Bundle the standard per-trace metrics into one report."""
    score = coverage_weighted_score(trace, accuracy, trace.catalog)
    return MetricsReport(
        intra_coherence=intra_coherence(trace.catalog, matrix),
        avg_coverage=avg_coverage(trace),
        switch_penalty=switch_penalty(trace),
        switch_cost_symdiff=switch_cost_symdiff(trace),
        coverage_weighted_score=score.score,
        uncovered_label_frames=score.uncovered_label_frames,
    )
