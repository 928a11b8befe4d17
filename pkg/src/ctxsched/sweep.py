"""Parameter sweeps: catalogs x thresholds x policies over one stream."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .accuracy import synthetic_accuracy
from .catalog import build_contexts, frequent_labels
from .cooccurrence import CooccurrenceMatrix, build_cooccurrence
from .costs import CostParams, estimate_latency_power
from .detector import DetectorConfig, run_simulation
from .errors import ToolkitError
from .metrics import (
    avg_coverage,
    coverage_weighted_score,
    intra_coherence,
    switch_cost_symdiff,
    switch_penalty,
    total_selection_cost,
)
from .oracle import per_frame_oracle_trace
from .streams import LabelStream
from .trace import SelectionTrace

POLICIES = ("greedy", "greedy_copy", "oracle_per_frame")

CSV_COLUMNS = (
    "B",
    "variant",
    "tau",
    "policy",
    "requested_M_max",
    "realized_contexts",
    "intra_coherence",
    "intra_coherence_counts",
    "avg_coverage",
    "switch_penalty",
    "switch_cost_symdiff",
    "selection_objective",
    "coverage_weighted_score",
    "uncovered_label_frames",
    "mean_latency_ms",
    "mean_power_w",
    "energy_per_frame_j",
    "error",
)


@dataclass(frozen=True)
class SweepGrid:
    context_sizes: tuple[int, ...]
    variants: tuple[str, ...]
    taus: tuple[float, ...]
    policies: tuple[str, ...] = POLICIES

    def cells(self) -> list[tuple[int, str, float, str]]:
        return [
            (B, variant, tau, policy)
            for B in self.context_sizes
            for variant in self.variants
            for tau in self.taus
            for policy in self.policies
        ]


@dataclass(frozen=True)
class SweepCellResult:
    row: dict
    trace: SelectionTrace | None


def _run_cell(
    B: int,
    variant: str,
    tau: float,
    policy: str,
    *,
    truth: LabelStream,
    predicted: LabelStream,
    matrix: CooccurrenceMatrix,
    valid: frozenset[int],
    m_max: int,
    a_max: float,
    size_slope: float,
    seed: int,
    cost: CostParams | None,
) -> SweepCellResult:
    row: dict = {
        "B": B,
        "variant": variant,
        "tau": tau,
        "policy": policy,
        "requested_M_max": m_max,
    }
    try:
        catalog = build_contexts(
            matrix, valid, B, m_max, variant, shuffle_seed=seed if variant == "basic" else None
        )
        accuracy = synthetic_accuracy(catalog, a_max=a_max, size_slope=size_slope)
        if policy == "oracle_per_frame":
            trace = per_frame_oracle_trace(truth, catalog, accuracy, tau, policy="best_effort")
        else:
            config = DetectorConfig(
                tau=tau,
                context_copy=(policy == "greedy_copy"),
                uncoverable_policy="best_effort",
            )
            trace = run_simulation(truth, predicted, catalog, accuracy, config)
        score = coverage_weighted_score(trace, accuracy, catalog)
        row.update(
            {
                "realized_contexts": catalog.context_count,
                "intra_coherence": intra_coherence(catalog, matrix),
                "intra_coherence_counts": intra_coherence(catalog, matrix, scale="counts"),
                "avg_coverage": avg_coverage(trace),
                "switch_penalty": switch_penalty(trace),
                "switch_cost_symdiff": switch_cost_symdiff(trace),
                "selection_objective": total_selection_cost(trace),
                "coverage_weighted_score": score.score,
                "uncovered_label_frames": score.uncovered_label_frames,
                "error": "",
            }
        )
        if cost is not None:
            estimate = estimate_latency_power(trace, cost)
            row.update(
                {
                    "mean_latency_ms": estimate.mean_latency_ms,
                    "mean_power_w": estimate.mean_power_w,
                    "energy_per_frame_j": estimate.energy_per_frame_j,
                }
            )
        return SweepCellResult(row=row, trace=trace)
    except ToolkitError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return SweepCellResult(row=row, trace=None)


def run_sweep(
    truth: LabelStream,
    predicted: LabelStream,
    grid: SweepGrid,
    *,
    m_max: int | None = None,
    a_max: float = 0.9,
    size_slope: float = 0.02,
    seed: int = 0,
    cost: CostParams | None = None,
    jobs: int = 1,
) -> list[SweepCellResult]:
    """Run every grid cell over one stream; failures stay in-row as error tags.

    Cells share only immutable inputs, so they may execute in parallel;
    results come back in grid order regardless of completion order, keeping
    output deterministic for a given seed.
    """
    matrix = build_cooccurrence(truth)
    valid = frequent_labels(matrix)
    resolved_m_max = m_max if m_max is not None else max(1, len(valid))
    cells = grid.cells()

    def work(cell: tuple[int, str, float, str]) -> SweepCellResult:
        B, variant, tau, policy = cell
        return _run_cell(
            B,
            variant,
            tau,
            policy,
            truth=truth,
            predicted=predicted,
            matrix=matrix,
            valid=valid,
            m_max=resolved_m_max,
            a_max=a_max,
            size_slope=size_slope,
            seed=seed,
            cost=cost,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, cells))
    return [work(cell) for cell in cells]
