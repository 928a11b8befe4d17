"""Label co-occurrence statistics and nearest-neighbor queries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .streams import LabelStream


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Symmetric K x K table of frame-normalized pair frequencies.

    ``values[i, j]`` for i != j is the fraction of frames containing both i
    and j; the diagonal holds each label's own frame frequency. Immutable
    after build.
    """

    values: np.ndarray
    frame_count: int

    @property
    def label_count(self) -> int:
        return self.values.shape[0]

    def pair(self, i: int, j: int) -> float:
        return float(self.values[i, j])

    def frequency(self, label: int) -> float:
        return float(self.values[label, label])

    def counts(self) -> np.ndarray:
        """Raw frame counts (the un-normalized scale)."""
        return self.values * self.frame_count


def build_cooccurrence(stream: LabelStream) -> CooccurrenceMatrix:
    """Count, per unordered label pair, the frames containing both, over T.

    A zero-frame stream yields the all-zero matrix with the stream's K.
    """
    K = stream.label_count
    T = stream.frame_count
    indicator = np.zeros((T, K), dtype=np.float64)
    for t, frame in enumerate(stream.frames):
        for label in frame.labels:
            indicator[t, label] = 1.0
    counts = indicator.T @ indicator
    values = counts / T if T > 0 else counts
    values.setflags(write=False)
    return CooccurrenceMatrix(values=values, frame_count=T)


def top_neighbors(matrix: CooccurrenceMatrix, label: int, k: int) -> list[int]:
    """Up to k labels j != label sorted by co(label, j) descending.

    Ties break by ascending label id; labels with zero co-occurrence are
    excluded entirely, so the result may be shorter than k.
    """
    if not 0 <= label < matrix.label_count:
        raise ValidationError(f"label {label} out of range [0, {matrix.label_count})")
    if k < 1:
        raise ValidationError("k must be positive")
    row = matrix.values[label]
    candidates = [j for j in range(matrix.label_count) if j != label and row[j] > 0]
    candidates.sort(key=lambda j: (-row[j], j))
    return candidates[:k]


def save_matrix_csv(matrix: CooccurrenceMatrix, path: str | Path) -> None:
    """Dense CSV export for inspection (header row of label ids, one row per label)."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label"] + [str(j) for j in range(matrix.label_count)])
        for i in range(matrix.label_count):
            writer.writerow([str(i)] + [repr(float(v)) for v in matrix.values[i]])
