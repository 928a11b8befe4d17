"""Context-aware adapter scheduling for multi-label streams.

Builds label-context catalogs from co-occurrence statistics, replays streams
through greedy and exact selection policies, and quantifies coverage,
switching, accuracy proxies, and compute/energy cost analytically.
"""

from .accuracy import AccuracyTable, load_accuracy, save_accuracy, synthetic_accuracy
from .catalog import (
    Context,
    ContextCatalog,
    ValidationReport,
    build_contexts,
    catalog_digest,
    frequent_labels,
    load_catalog,
    repair_uncovered,
    save_catalog,
    validate_catalog,
)
from .compose import (
    LayerStack,
    LoraPair,
    StackedForwardResult,
    forward_merged,
    forward_unmerged,
    stacked_forward,
)
from .cooccurrence import CooccurrenceMatrix, build_cooccurrence, save_matrix_csv, top_neighbors
from .costs import (
    ARCH_PRESETS,
    ArchParams,
    CostEstimate,
    CostParams,
    adapter_mac_overhead,
    adapter_param_count,
    catalog_param_overhead,
    estimate_latency_power,
    load_calibrations,
    profile_report,
)
from .detector import DetectorConfig, detect_contexts, run_simulation, uncoverable_labels
from .errors import (
    InfeasibleError,
    StreamParseError,
    ToolkitError,
    UncoverableLabelError,
    ValidationError,
)
from .metrics import (
    CoverageScore,
    MetricsReport,
    avg_coverage,
    compute_metrics,
    coverage_weighted_score,
    intra_coherence,
    switch_cost_symdiff,
    switch_penalty,
    total_selection_cost,
)
from .oracle import OracleConfig, per_frame_min_cover, per_frame_oracle_trace, sequence_oracle
from .streams import (
    Frame,
    LabelStream,
    NoiseConfig,
    SyntheticConfig,
    apply_prediction_noise,
    filter_stream,
    generate_synthetic_stream,
    label_shuffled_control,
    load_stream,
    save_stream,
    temporal_continuity,
)
from .trace import FrameRecord, SelectionTrace, read_trace, trace_to_csv, write_trace

__version__ = "0.1.0"
