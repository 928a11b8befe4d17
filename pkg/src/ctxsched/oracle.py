"""Exact selection baselines: per-frame minimum cover and the sequence optimum.

Both exist as desk-scale verification oracles; the greedy detector remains the
deployable policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .accuracy import AccuracyTable
from .catalog import ContextCatalog
from .errors import InfeasibleError, UncoverableLabelError, ValidationError
from .streams import LabelStream
from .trace import FrameRecord, SelectionTrace

_EXHAUSTIVE_CANDIDATE_CAP = 30


@dataclass(frozen=True)
class OracleConfig:
    """Search bounds for the exact solvers.

    ``s_max`` caps the per-frame selection size enumerated by the sequence
    solver; results are optimal within that cap and exactly optimal when it
    equals the catalog size. ``subset_cap`` bounds the catalog size the
    bitmask dynamic program will accept.
    """

    mode: str = "per_frame"
    s_max: int = 4
    subset_cap: int = 12
    uncoverable_policy: str = "error"

    def __post_init__(self):
        if self.mode not in ("per_frame", "sequence"):
            raise ValidationError(f"unknown oracle mode {self.mode!r}")
        if self.s_max < 1:
            raise ValidationError("s_max must be at least 1")
        if self.subset_cap < 1:
            raise ValidationError("subset_cap must be at least 1")
        if self.uncoverable_policy not in ("error", "best_effort"):
            raise ValidationError(f"unknown uncoverable_policy {self.uncoverable_policy!r}")


def _qualifying_bits(
    catalog: ContextCatalog, accuracy: AccuracyTable, tau: float
) -> dict[int, int]:
    """Per context id, a bitmask over label ids of the labels it serves at tau."""
    bits: dict[int, int] = {}
    for context in catalog.contexts:
        mask = 0
        for label in context.labels:
            if accuracy.qualifies(context.id, label, tau):
                mask |= 1 << label
        bits[context.id] = mask
    return bits


def _label_mask(labels) -> int:
    mask = 0
    for label in labels:
        mask |= 1 << label
    return mask


def _reduce_demand(
    labels: frozenset[int],
    qualifying: dict[int, int],
    policy: str,
    frame: int | None = None,
) -> tuple[int, frozenset[int]]:
    """Demand bitmask after uncoverable handling, plus the dropped labels."""
    all_cover = 0
    for mask in qualifying.values():
        all_cover |= mask
    demand = _label_mask(labels)
    missing = demand & ~all_cover
    if missing == 0:
        return demand, frozenset()
    dropped = frozenset(label for label in labels if not (all_cover >> label) & 1)
    if policy == "error":
        where = "" if frame is None else f"frame {frame}: "
        raise UncoverableLabelError(
            f"{where}no context qualifies for labels {sorted(dropped)}",
            labels=dropped,
            frame=frame,
        )
    return demand & all_cover, dropped


def per_frame_min_cover(
    labels: frozenset[int] | set[int],
    catalog: ContextCatalog,
    accuracy: AccuracyTable,
    tau: float,
    *,
    policy: str = "error",
) -> frozenset[int]:
    """Smallest qualifying cover of the given labels, by exhaustive search.

    Ties break toward the lexicographically smallest context-id set. The
    search enumerates combinations of candidate contexts by increasing size,
    bounded above by a greedy cover, so it stays cheap whenever few contexts
    intersect the demand. Uses ground-truth labels when serving as the
    per-frame selection baseline.
    """
    labels = frozenset(labels)
    qualifying = _qualifying_bits(catalog, accuracy, tau)
    demand, _ = _reduce_demand(labels, qualifying, policy)
    if demand == 0:
        return frozenset()
    candidates = sorted(cid for cid, mask in qualifying.items() if mask & demand)
    if len(candidates) > _EXHAUSTIVE_CANDIDATE_CAP:
        raise ValidationError(
            f"{len(candidates)} candidate contexts exceed the exhaustive search bound "
            f"of {_EXHAUSTIVE_CANDIDATE_CAP}"
        )
    # Greedy cover gives a feasible size; search below it.
    remaining = demand
    upper = 0
    for cid in sorted(candidates, key=lambda cid: (bin(qualifying[cid]).count("1"), cid)):
        if remaining == 0:
            break
        if qualifying[cid] & remaining:
            upper += 1
            remaining &= ~qualifying[cid]
    for size in range(1, upper + 1):
        for combo in combinations(candidates, size):
            covered = 0
            for cid in combo:
                covered |= qualifying[cid]
            if demand & ~covered == 0:
                return frozenset(combo)
    raise InfeasibleError(f"no cover exists for labels {sorted(labels)}")  # pragma: no cover


def per_frame_oracle_trace(
    ground_truth: LabelStream,
    catalog: ContextCatalog,
    accuracy: AccuracyTable,
    tau: float,
    *,
    policy: str = "error",
) -> SelectionTrace:
    """Apply the per-frame minimum cover to every frame of a stream.

    The oracle consumes ground-truth labels, so the trace records them as
    both the driving and the scored label sets.
    """
    records: list[FrameRecord] = []
    prev_selection: frozenset[int] = frozenset()
    cache: dict[frozenset[int], tuple[frozenset[int], frozenset[int]]] = {}
    qualifying = _qualifying_bits(catalog, accuracy, tau)
    for frame in ground_truth.frames:
        if frame.labels not in cache:
            try:
                selection = per_frame_min_cover(
                    frame.labels, catalog, accuracy, tau, policy=policy
                )
            except UncoverableLabelError as exc:
                raise UncoverableLabelError(
                    f"frame {frame.index}: {exc}", labels=exc.labels, frame=frame.index
                ) from exc
            _, dropped = _reduce_demand(frame.labels, qualifying, "best_effort")
            cache[frame.labels] = (selection, dropped)
        selection, dropped = cache[frame.labels]
        records.append(
            FrameRecord(
                index=frame.index,
                predicted=frame.labels,
                truth=frame.labels,
                selected=selection,
                changed=selection != prev_selection,
                uncovered=dropped,
            )
        )
        prev_selection = selection
    return SelectionTrace(
        records=tuple(records), catalog=catalog, policy="oracle_per_frame", tau=tau
    )


def sequence_oracle(
    stream: LabelStream,
    catalog: ContextCatalog,
    accuracy: AccuracyTable,
    tau: float,
    config: OracleConfig | None = None,
) -> SelectionTrace:
    """Minimize sum_t(|S_t| + |S_t symdiff S_{t-1}|) subject to frame coverage.

    Dynamic program over context subsets encoded as bitmasks: per frame the
    candidates are the qualifying covers of size at most ``s_max``, and the
    transition cost between consecutive candidates is the popcount of their
    XOR. The initial selection is compared against the empty set, i.e. the
    first frame pays its full switch-in cost. Optimal within the s_max cap
    and exactly optimal when s_max >= |catalog|.
    """
    config = config or OracleConfig(mode="sequence")
    M = catalog.context_count
    if M > config.subset_cap:
        raise ValidationError(
            f"catalog has {M} contexts, exceeding the sequence-mode cap of {config.subset_cap}"
        )
    if stream.frame_count == 0:
        return SelectionTrace(
            records=(), catalog=catalog, policy="oracle_sequence", tau=tau
        )

    ordered = sorted(catalog.contexts, key=lambda context: context.id)
    ids = [context.id for context in ordered]
    qualifying = _qualifying_bits(catalog, accuracy, tau)
    cover_of = [qualifying[cid] for cid in ids]
    s_max = min(config.s_max, M)

    # Candidate subsets in (size, lexicographic) order; index = position.
    candidate_masks: list[int] = []
    candidate_cover: list[int] = []
    for size in range(0, s_max + 1):
        for combo in combinations(range(M), size):
            mask = 0
            covered = 0
            for position in combo:
                mask |= 1 << position
                covered |= cover_of[position]
            candidate_masks.append(mask)
            candidate_cover.append(covered)
    masks_arr = np.array(candidate_masks, dtype=np.int64)
    sizes_arr = np.array([bin(mask).count("1") for mask in candidate_masks], dtype=np.int64)
    popcount = np.array([bin(value).count("1") for value in range(1 << M)], dtype=np.int64)

    demands: list[int] = []
    for frame in stream.frames:
        demand, _ = _reduce_demand(
            frame.labels, qualifying, config.uncoverable_policy, frame=frame.index
        )
        demands.append(demand)

    feasible_per_frame: list[np.ndarray] = []
    demand_cache: dict[int, np.ndarray] = {}
    for t, demand in enumerate(demands):
        if demand not in demand_cache:
            indices = np.array(
                [i for i, covered in enumerate(candidate_cover) if demand & ~covered == 0],
                dtype=np.int64,
            )
            demand_cache[demand] = indices
        indices = demand_cache[demand]
        if indices.size == 0:
            raise InfeasibleError(
                f"frame {t}: no selection of size <= {s_max} covers the demanded labels"
            )
        feasible_per_frame.append(indices)

    # Forward pass: dp[i] = best cost ending at candidate i for this frame.
    parents: list[np.ndarray] = []
    first = feasible_per_frame[0]
    dp = sizes_arr[first] + popcount[masks_arr[first]]
    parents.append(np.full(first.size, -1, dtype=np.int64))
    for t in range(1, len(demands)):
        current = feasible_per_frame[t]
        previous = feasible_per_frame[t - 1]
        switch = popcount[np.bitwise_xor.outer(masks_arr[previous], masks_arr[current])]
        total = dp[:, None] + switch
        best_prev = np.argmin(total, axis=0)
        dp = total[best_prev, np.arange(current.size)] + sizes_arr[current]
        parents.append(best_prev)

    # Backtrack the (deterministically first) optimal sequence.
    position = int(np.argmin(dp))
    chosen: list[int] = []
    for t in range(len(demands) - 1, -1, -1):
        chosen.append(int(feasible_per_frame[t][position]))
        position = int(parents[t][position]) if t > 0 else -1
    chosen.reverse()

    records: list[FrameRecord] = []
    prev_selection: frozenset[int] = frozenset()
    for frame, candidate in zip(stream.frames, chosen):
        mask = candidate_masks[candidate]
        selection = frozenset(ids[b] for b in range(M) if (mask >> b) & 1)
        dropped = frozenset(
            label for label in frame.labels if not (demands[frame.index] >> label) & 1
        )
        records.append(
            FrameRecord(
                index=frame.index,
                predicted=frame.labels,
                truth=frame.labels,
                selected=selection,
                changed=selection != prev_selection,
                uncovered=dropped,
            )
        )
        prev_selection = selection
    return SelectionTrace(
        records=tuple(records), catalog=catalog, policy="oracle_sequence", tau=tau
    )
