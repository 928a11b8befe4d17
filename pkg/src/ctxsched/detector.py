"""Per-frame greedy context selection with conditional context copy."""

from __future__ import annotations

from dataclasses import dataclass

from .accuracy import AccuracyTable
from .catalog import ContextCatalog
from .errors import UncoverableLabelError, ValidationError
from .streams import LabelStream
from .trace import FrameRecord, SelectionTrace

UNCOVERABLE_POLICIES = ("error", "best_effort")


@dataclass(frozen=True)
class DetectorConfig:
    """Runtime knobs: accuracy threshold, copy fast path, uncoverable handling.

    ``best_effort`` drops labels no context can serve at tau from the demand
    set and reports them per frame; ``error`` raises instead, since setting
    tau too high can render some labels undetectable.
    """

    tau: float
    context_copy: bool = False
    uncoverable_policy: str = "best_effort"

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError("tau must lie in [0, 1]")
        if self.uncoverable_policy not in UNCOVERABLE_POLICIES:
            raise ValidationError(
                f"unknown uncoverable_policy {self.uncoverable_policy!r}; "
                f"expected one of {UNCOVERABLE_POLICIES}"
            )


def uncoverable_labels(
    labels: frozenset[int] | set[int],
    catalog: ContextCatalog,
    accuracy: AccuracyTable,
    tau: float,
) -> frozenset[int]:
    """Labels for which no context in the whole catalog qualifies at tau."""
    result = set(labels)
    for context in catalog.contexts:
        if not result:
            break
        for label in list(result):
            if label in context.label_set and accuracy.qualifies(context.id, label, tau):
                result.discard(label)
    return frozenset(result)


def detect_contexts(
    labels: frozenset[int] | set[int],
    prev_labels: frozenset[int] | set[int],
    catalog: ContextCatalog,
    accuracy: AccuracyTable,
    config: DetectorConfig,
    prev_selection: frozenset[int] | set[int],
) -> frozenset[int]:
    """Select the active context set for one frame.

    Fast paths first: an unchanged label set keeps the previous selection,
    and with ``context_copy`` enabled the previous selection is also kept
    whenever it still covers every current label at threshold tau. Otherwise
    contexts are taken greedily in order of increasing size, each pick being
    the context that provides the most still-uncovered labels with
    qualifying accuracy (ties by most labels provided, then ascending id),
    stopping once the demand is covered. Smaller contexts are tried first
    because they are generally the more accurate specialists.
    """
    labels = frozenset(labels)
    prev_labels = frozenset(prev_labels)
    prev_selection = frozenset(prev_selection)
    if labels == prev_labels:
        return prev_selection
    if config.context_copy:
        previous = [catalog.by_id(cid) for cid in sorted(prev_selection)]
        if all(
            any(
                label in context.label_set and accuracy.qualifies(context.id, label, config.tau)
                for context in previous
            )
            for label in labels
        ):
            return prev_selection

    demand = set(labels)
    impossible = uncoverable_labels(demand, catalog, accuracy, config.tau)
    if impossible:
        if config.uncoverable_policy == "error":
            raise UncoverableLabelError(
                f"no context reaches tau={config.tau} for labels {sorted(impossible)}",
                labels=impossible,
            )
        demand -= impossible

    selected: set[int] = set()
    ordered = sorted(catalog.contexts, key=lambda context: (context.size, context.id))
    while demand:
        best_context = None
        best_provides: set[int] = set()
        best_key: tuple[int, int, int] | None = None
        for context in ordered:
            if context.id in selected:
                continue
            provides = {
                label
                for label in context.label_set & demand
                if accuracy.qualifies(context.id, label, config.tau)
            }
            if not provides:
                continue
            key = (context.size, -len(provides), context.id)
            if best_key is None or key < best_key:
                best_key = key
                best_context = context
                best_provides = provides
        if best_context is None:
            break
        selected.add(best_context.id)
        demand -= best_provides
    return frozenset(selected)


def run_simulation(
    ground_truth: LabelStream,
    predicted: LabelStream,
    catalog: ContextCatalog,
    accuracy: AccuracyTable,
    config: DetectorConfig,
) -> SelectionTrace:
    """Replay a stream through the greedy detector frame by frame.

    Detection consumes the predicted stream; the ground-truth labels are
    recorded alongside for scoring. The first frame compares against an
    empty previous label set and an empty previous selection.
    """
    if ground_truth.label_count != predicted.label_count:
        raise ValidationError(
            f"stream label counts differ: {ground_truth.label_count} vs {predicted.label_count}"
        )
    if ground_truth.frame_count != predicted.frame_count:
        raise ValidationError(
            f"stream lengths differ: {ground_truth.frame_count} vs {predicted.frame_count}"
        )

    records: list[FrameRecord] = []
    prev_labels: frozenset[int] = frozenset()
    prev_selection: frozenset[int] = frozenset()
    uncoverable_cache: dict[frozenset[int], frozenset[int]] = {}
    for truth_frame, pred_frame in zip(ground_truth.frames, predicted.frames):
        t = pred_frame.index
        labels = pred_frame.labels
        try:
            selection = detect_contexts(
                labels, prev_labels, catalog, accuracy, config, prev_selection
            )
        except UncoverableLabelError as exc:
            raise UncoverableLabelError(
                f"frame {t}: {exc}", labels=exc.labels, frame=t
            ) from exc
        if labels not in uncoverable_cache:
            uncoverable_cache[labels] = uncoverable_labels(labels, catalog, accuracy, config.tau)
        records.append(
            FrameRecord(
                index=t,
                predicted=labels,
                truth=truth_frame.labels,
                selected=selection,
                changed=selection != prev_selection,
                uncovered=uncoverable_cache[labels],
            )
        )
        prev_labels = labels
        prev_selection = selection
    policy = "greedy_copy" if config.context_copy else "greedy"
    return SelectionTrace(
        records=tuple(records),
        catalog=catalog,
        policy=policy,
        tau=config.tau,
        context_copy=config.context_copy,
    )
