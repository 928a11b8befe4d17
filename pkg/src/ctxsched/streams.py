"""Multi-label frame streams: file ingestion, seeded synthesis, prediction noise."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import StreamParseError, ValidationError


@dataclass(frozen=True)
class Frame:
    """One time step: a frame index and the set of labels active in it."""

    index: int
    labels: frozenset[int]

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError(f"frame index must be non-negative, got {self.index}")


@dataclass(frozen=True)
class LabelStream:
    """An ordered, gap-free sequence of frames over the label universe 0..K-1.

    Immutable after construction; safe to share read-only across parallel
    simulations.
    """

    label_count: int
    frames: tuple[Frame, ...]

    def __post_init__(self):
        if self.label_count < 0:
            raise ValidationError(f"label_count must be non-negative, got {self.label_count}")
        for expected, frame in enumerate(self.frames):
            if frame.index != expected:
                raise ValidationError(
                    f"non-contiguous frame indices: expected {expected}, found {frame.index}"
                )
            for label in frame.labels:
                if not 0 <= label < self.label_count:
                    raise ValidationError(
                        f"label {label} out of range [0, {self.label_count}) at frame {frame.index}"
                    )

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def label_sets(self) -> list[frozenset[int]]:
        return [frame.labels for frame in self.frames]

    def total_label_occurrences(self) -> int:
        return sum(len(frame.labels) for frame in self.frames)


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the seeded synthetic stream generator.

    Labels follow independent on/off processes whose dwell time is geometric
    with mean ``mean_dwell_frames``. Arrival probabilities are calibrated so
    the stationary expected number of active labels is ``mean_active_labels``.
    Labels grouped in ``cluster_spec`` arrive preferentially while their
    cluster is active, which plants co-occurrence structure. With
    ``exclusive_clusters`` exactly one cluster is active at a time and labels
    outside it stay off, so labels of different clusters never share a frame.
    """

    label_count: int
    frame_count: int
    cluster_spec: tuple[tuple[int, ...], ...] = ()
    mean_active_labels: float = 2.0
    mean_dwell_frames: float = 5.0
    seed: int = 0
    cluster_boost: float = 4.0
    cluster_active_fraction: float = 0.4
    cluster_dwell_frames: float | None = None
    exclusive_clusters: bool = False

    def __post_init__(self):
        if self.label_count < 0:
            raise ValidationError("label_count must be non-negative")
        if self.frame_count < 0:
            raise ValidationError("frame_count must be non-negative")
        if self.mean_active_labels <= 0:
            raise ValidationError("mean_active_labels must be positive")
        if self.mean_active_labels > self.label_count:
            raise ValidationError("mean_active_labels exceeds K")
        if self.mean_dwell_frames < 1:
            raise ValidationError("mean_dwell_frames must be at least 1")
        if self.cluster_boost < 1:
            raise ValidationError("cluster_boost must be at least 1")
        if not 0 < self.cluster_active_fraction < 1:
            raise ValidationError("cluster_active_fraction must lie in (0, 1)")
        seen: set[int] = set()
        for group in self.cluster_spec:
            for label in group:
                if not 0 <= label < self.label_count:
                    raise ValidationError(f"cluster label {label} out of range")
                if label in seen:
                    raise ValidationError(f"label {label} appears in more than one cluster")
                seen.add(label)
        if self.exclusive_clusters and not self.cluster_spec:
            raise ValidationError("exclusive_clusters requires a non-empty cluster_spec")


@dataclass(frozen=True)
class NoiseConfig:
    """I.i.d. per-(frame, label) drop/insert rates for predicted streams."""

    false_negative_rate: float
    false_positive_rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.false_negative_rate <= 1:
            raise ValidationError("false_negative_rate must lie in [0, 1]")
        if not 0 <= self.false_positive_rate <= 1:
            raise ValidationError("false_positive_rate must lie in [0, 1]")


def _frames_from_records(
    records: list[tuple[int, set[int]]],
    label_count: int | None,
    reindex: bool,
) -> LabelStream:
    records.sort(key=lambda item: item[0])
    seen_indices: set[int] = set()
    for index, _ in records:
        if index in seen_indices:
            raise ValidationError(f"duplicate frame index {index}")
        seen_indices.add(index)
    if reindex:
        records = [(position, labels) for position, (_, labels) in enumerate(records)]
    max_label = max((label for _, labels in records for label in labels), default=-1)
    if label_count is None:
        label_count = max_label + 1
    elif max_label >= label_count:
        raise ValidationError(f"label {max_label} out of range [0, {label_count})")
    frames = tuple(Frame(index, frozenset(labels)) for index, labels in records)
    return LabelStream(label_count=label_count, frames=frames)


def load_stream(
    path: str | Path,
    format: str = "jsonl",
    *,
    label_count: int | None = None,
    reindex: bool = False,
) -> LabelStream:
    """Read a stream file in the JSONL or CSV interchange format.

    K is taken from an explicit ``label_count`` argument, a JSONL header line
    ``{"K": n}``, or inferred as (max label id)+1, in that priority order.
    Duplicate labels within a frame are deduplicated. Frame indices must be
    contiguous from 0 unless ``reindex`` is set, in which case frames are
    renumbered in ascending order of their original indices.
    """
    path = Path(path)
    if format == "jsonl":
        return _load_jsonl(path, label_count, reindex)
    if format == "csv":
        return _load_csv(path, label_count, reindex)
    raise ValidationError(f"unknown stream format {format!r}")


def _load_jsonl(path: Path, label_count: int | None, reindex: bool) -> LabelStream:
    records: list[tuple[int, set[int]]] = []
    header_k: int | None = None
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamParseError(
                    f"line {line_number}: invalid JSON ({exc.msg})", line_number
                ) from exc
            if not isinstance(obj, dict):
                raise StreamParseError(f"line {line_number}: expected an object", line_number)
            if "t" not in obj:
                if line_number == 1 and "K" in obj:
                    header_k = int(obj["K"])
                    continue
                raise StreamParseError(f"line {line_number}: missing key 't'", line_number)
            if "labels" not in obj:
                raise StreamParseError(f"line {line_number}: missing key 'labels'", line_number)
            index = obj["t"]
            labels = obj["labels"]
            if not isinstance(index, int) or isinstance(index, bool):
                raise StreamParseError(f"line {line_number}: 't' must be an integer", line_number)
            if not isinstance(labels, list):
                raise StreamParseError(f"line {line_number}: 'labels' must be a list", line_number)
            label_set: set[int] = set()
            for label in labels:
                if not isinstance(label, int) or isinstance(label, bool):
                    raise StreamParseError(
                        f"line {line_number}: label {label!r} is not an integer", line_number
                    )
                if label < 0:
                    raise ValidationError(f"negative label id {label} at line {line_number}")
                label_set.add(label)
            records.append((index, label_set))
    return _frames_from_records(records, label_count if label_count is not None else header_k, reindex)


def _load_csv(path: Path, label_count: int | None, reindex: bool) -> LabelStream:
    by_frame: dict[int, set[int]] = {}
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        for line_number, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if line_number == 1 and row[0].strip().lower() == "t":
                continue
            if len(row) not in (1, 2):
                raise StreamParseError(
                    f"line {line_number}: expected columns t,label", line_number
                )
            try:
                index = int(row[0])
            except ValueError as exc:
                raise StreamParseError(
                    f"line {line_number}: frame index {row[0]!r} is not an integer", line_number
                ) from exc
            cell = row[1].strip() if len(row) == 2 else ""
            labels = by_frame.setdefault(index, set())
            if cell:
                try:
                    label = int(cell)
                except ValueError as exc:
                    raise StreamParseError(
                        f"line {line_number}: label {cell!r} is not an integer", line_number
                    ) from exc
                if label < 0:
                    raise ValidationError(f"negative label id {label} at line {line_number}")
                labels.add(label)
    records = [(index, labels) for index, labels in by_frame.items()]
    return _frames_from_records(records, label_count, reindex)


def save_stream(stream: LabelStream, path: str | Path, format: str = "jsonl") -> None:
    """Write a stream in canonical form (labels ascending, frames in order).

    JSONL files start with a ``{"K": n}`` header so the label universe
    survives a round trip even when the top label ids are unused. CSV files
    carry a ``t,label`` header row; a frame with no labels is written as a
    single row with an empty label cell so that it is not lost on reload.
    """
    path = Path(path)
    if format == "jsonl":
        with path.open("w", encoding="utf-8") as handle:
            handle.write(json.dumps({"K": stream.label_count}, separators=(",", ":")) + "\n")
            for frame in stream.frames:
                record = {"t": frame.index, "labels": sorted(frame.labels)}
                handle.write(json.dumps(record, separators=(",", ":")) + "\n")
    elif format == "csv":
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["t", "label"])
            for frame in stream.frames:
                if frame.labels:
                    for label in sorted(frame.labels):
                        writer.writerow([frame.index, label])
                else:
                    writer.writerow([frame.index, ""])
    else:
        raise ValidationError(f"unknown stream format {format!r}")


def _arrival_for_target(occupancy: float, departure: float) -> float:
    # Two-state chain: stationary on-probability pi = p / (p + q).
    if occupancy >= 1.0:
        return 1.0
    return departure * occupancy / (1.0 - occupancy)


def generate_synthetic_stream(config: SyntheticConfig) -> LabelStream:
    """Generate a seeded stream exhibiting sparsity, continuity, and co-occurrence.

    Pure function of its config: reruns are bit-identical. See
    :class:`SyntheticConfig` for the generative model.
    """
    rng = np.random.default_rng(config.seed)
    K = config.label_count
    T = config.frame_count
    if T == 0 or K == 0:
        return LabelStream(label_count=K, frames=())
    if config.exclusive_clusters:
        return _generate_exclusive(config, rng)
    return _generate_independent(config, rng)


def _generate_independent(config: SyntheticConfig, rng: np.random.Generator) -> LabelStream:
    K, T = config.label_count, config.frame_count
    departure = 1.0 / config.mean_dwell_frames
    occupancy = config.mean_active_labels / K
    base_arrival = _arrival_for_target(occupancy, departure)

    cluster_of = {label: ci for ci, group in enumerate(config.cluster_spec) for label in group}
    n_clusters = len(config.cluster_spec)
    cluster_dwell = config.cluster_dwell_frames or 4.0 * config.mean_dwell_frames
    cluster_departure = 1.0 / cluster_dwell
    alpha = config.cluster_active_fraction
    cluster_arrival = _arrival_for_target(alpha, cluster_departure)

    # Keep the per-label stationary mean while boosting arrivals during
    # active cluster phases: p_eff = alpha*p_hi + (1-alpha)*p_lo.
    boost = config.cluster_boost
    p_lo = base_arrival / (alpha * boost + (1.0 - alpha))
    p_hi = min(1.0, boost * p_lo)

    cluster_active = rng.random(n_clusters) < alpha
    on = rng.random(K) < occupancy

    frames = []
    for t in range(T):
        for ci in range(n_clusters):
            if cluster_active[ci]:
                if rng.random() < cluster_departure:
                    cluster_active[ci] = False
            elif rng.random() < cluster_arrival:
                cluster_active[ci] = True
        active: list[int] = []
        for label in range(K):
            ci = cluster_of.get(label)
            if on[label]:
                if rng.random() < departure:
                    on[label] = False
            else:
                if ci is None:
                    arrival = base_arrival
                else:
                    arrival = p_hi if cluster_active[ci] else p_lo
                if rng.random() < arrival:
                    on[label] = True
            if on[label]:
                active.append(label)
        frames.append(Frame(t, frozenset(active)))
    return LabelStream(label_count=K, frames=tuple(frames))


def _generate_exclusive(config: SyntheticConfig, rng: np.random.Generator) -> LabelStream:
    K, T = config.label_count, config.frame_count
    departure = 1.0 / config.mean_dwell_frames
    groups = [tuple(sorted(group)) for group in config.cluster_spec]
    cluster_dwell = config.cluster_dwell_frames or 4.0 * config.mean_dwell_frames
    switch_prob = 1.0 / cluster_dwell
    # Per-cluster occupancy so that E|Y_t| matches mean_active_labels.
    occupancy = [min(0.95, config.mean_active_labels / len(group)) for group in groups]
    arrival = [_arrival_for_target(pi, departure) for pi in occupancy]

    current = int(rng.integers(len(groups)))
    on: dict[int, bool] = {}

    def seed_cluster(ci: int) -> None:
        on.clear()
        for label in groups[ci]:
            on[label] = bool(rng.random() < occupancy[ci])

    seed_cluster(current)
    frames = []
    for t in range(T):
        if len(groups) > 1 and rng.random() < switch_prob:
            step = 1 + int(rng.integers(len(groups) - 1))
            current = (current + step) % len(groups)
            seed_cluster(current)
        active: list[int] = []
        for label in groups[current]:
            if on[label]:
                if rng.random() < departure:
                    on[label] = False
            elif rng.random() < arrival[current]:
                on[label] = True
            if on[label]:
                active.append(label)
        frames.append(Frame(t, frozenset(active)))
    return LabelStream(label_count=K, frames=tuple(frames))


def apply_prediction_noise(stream: LabelStream, noise: NoiseConfig) -> LabelStream:
    """Flip labels i.i.d. per (frame, label): drop at p_fn, insert at p_fp.

    Deterministic per seed; preserves K and T; never emits out-of-range labels.
    """
    rng = np.random.default_rng(noise.seed)
    frames = []
    for frame in stream.frames:
        draws = rng.random(stream.label_count)
        active: list[int] = []
        for label in range(stream.label_count):
            if label in frame.labels:
                if draws[label] >= noise.false_negative_rate:
                    active.append(label)
            elif draws[label] < noise.false_positive_rate:
                active.append(label)
        frames.append(Frame(frame.index, frozenset(active)))
    return LabelStream(label_count=stream.label_count, frames=tuple(frames))


def filter_stream(
    stream: LabelStream,
    predicate: Callable[[Frame], bool],
    *,
    reindex: bool = True,
) -> LabelStream:
    """Keep frames satisfying ``predicate``; reindex to restore contiguity."""
    kept = [frame for frame in stream.frames if predicate(frame)]
    if reindex:
        kept = [Frame(position, frame.labels) for position, frame in enumerate(kept)]
    return LabelStream(label_count=stream.label_count, frames=tuple(kept))


def temporal_continuity(stream: LabelStream) -> float:
    """Mean of |Y_t intersect Y_{t+1}| / max(1, |Y_t|) over consecutive frames."""
    if stream.frame_count < 2:
        return 0.0
    total = 0.0
    for previous, current in zip(stream.frames, stream.frames[1:]):
        total += len(previous.labels & current.labels) / max(1, len(previous.labels))
    return total / (stream.frame_count - 1)


def label_shuffled_control(stream: LabelStream, seed: int = 0) -> LabelStream:
    """Replace each frame's labels with a uniform random set of the same size.

    Used as the control when checking that temporal continuity was actually
    planted rather than implied by per-frame label counts alone.
    """
    rng = np.random.default_rng(seed)
    frames = []
    for frame in stream.frames:
        chosen = rng.choice(stream.label_count, size=len(frame.labels), replace=False)
        frames.append(Frame(frame.index, frozenset(int(c) for c in chosen)))
    return LabelStream(label_count=stream.label_count, frames=tuple(frames))
