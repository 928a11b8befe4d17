"""Command-line front end wiring streams, catalogs, policies, metrics, and costs.

Exit codes are a stable contract: 0 success, 1 usage, 2 I/O, 3 schema or
validation, 4 infeasibility or uncoverable labels, 5 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .accuracy import AccuracyTable, load_accuracy, synthetic_accuracy
from .catalog import (
    build_contexts,
    catalog_digest,
    frequent_labels,
    load_catalog,
    save_catalog,
    validate_catalog,
)
from .compose import LayerStack, LoraPair, forward_merged, forward_unmerged, stacked_forward
from .cooccurrence import build_cooccurrence
from .costs import (
    ARCH_PRESETS,
    REPORTED_MEMORY_MB,
    adapter_mac_overhead,
    adapter_param_count,
    catalog_param_overhead,
    load_calibrations,
    profile_report,
)
from .detector import DetectorConfig, run_simulation
from .errors import (
    InfeasibleError,
    StreamParseError,
    ToolkitError,
    UncoverableLabelError,
    ValidationError,
)
from .metrics import (
    avg_coverage,
    coverage_weighted_score,
    intra_coherence,
    switch_cost_symdiff,
    switch_penalty,
    total_selection_cost,
)
from .oracle import OracleConfig, per_frame_oracle_trace, sequence_oracle
from .streams import (
    NoiseConfig,
    SyntheticConfig,
    apply_prediction_noise,
    generate_synthetic_stream,
    load_stream,
    save_stream,
)
from .sweep import CSV_COLUMNS, SweepGrid, run_sweep
from .trace import read_trace, trace_to_csv, write_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SCHEMA = 3
EXIT_INFEASIBLE = 4
EXIT_INTERNAL = 5


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage failures with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _provenance(inputs: dict[str, Path], seed: int | None = None) -> dict:
    return {
        "tool": {"name": "ctxsched", "version": __version__},
        "inputs": {
            role: {"path": str(path), "sha256": _sha256(path)} for role, path in inputs.items()
        },
        "seed": seed,
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_clusters(spec: str, label_count: int) -> tuple[tuple[int, ...], ...]:
    """Parse NxS into N consecutive groups of S labels starting at 0."""
    spec = spec.strip().lower()
    if not spec or spec == "none":
        return ()
    try:
        count_str, size_str = spec.split("x")
        count, size = int(count_str), int(size_str)
    except ValueError:
        raise ValidationError(f"cluster spec {spec!r} is not of the form NxS") from None
    if count < 1 or size < 1:
        raise ValidationError("cluster counts and sizes must be positive")
    if count * size > label_count:
        raise ValidationError(f"cluster spec {spec} needs {count * size} labels but K={label_count}")
    return tuple(
        tuple(range(group * size, (group + 1) * size)) for group in range(count)
    )


def _load_accuracy_for(args: argparse.Namespace, catalog) -> AccuracyTable:
    if getattr(args, "acc", None):
        table = load_accuracy(args.acc)
        table.validate_for(catalog)
        return table
    return synthetic_accuracy(catalog, a_max=args.a_max, size_slope=args.size_slope)


def _add_accuracy_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--acc", type=Path, help="accuracy table JSON (overrides the synthetic model)")
    parser.add_argument("--a-max", type=float, default=0.9, help="synthetic model peak accuracy")
    parser.add_argument(
        "--size-slope",
        type=float,
        default=0.02,
        help="synthetic per-extra-label accuracy decrease",
    )


def cmd_gen_stream(args: argparse.Namespace) -> int:
    clusters = _parse_clusters(args.clusters, args.K)
    config = SyntheticConfig(
        label_count=args.K,
        frame_count=args.T,
        cluster_spec=clusters,
        mean_active_labels=args.mean_active,
        mean_dwell_frames=args.dwell,
        seed=args.seed,
        cluster_boost=args.cluster_boost,
        cluster_active_fraction=args.cluster_active_fraction,
        cluster_dwell_frames=args.cluster_dwell,
        exclusive_clusters=args.exclusive,
    )
    stream = generate_synthetic_stream(config)
    save_stream(stream, args.out, format=args.format)
    meta = {
        "provenance": _provenance({}, seed=args.seed),
        "config": {
            "K": args.K,
            "T": args.T,
            "clusters": args.clusters,
            "mean_active": args.mean_active,
            "dwell": args.dwell,
            "cluster_boost": args.cluster_boost,
            "cluster_active_fraction": args.cluster_active_fraction,
            "cluster_dwell": args.cluster_dwell,
            "exclusive": args.exclusive,
        },
        "output": {"path": str(args.out), "sha256": _sha256(Path(args.out))},
    }
    _write_json(Path(str(args.out) + ".meta.json"), meta)
    print(f"wrote {stream.frame_count} frames over K={stream.label_count} to {args.out}")
    return EXIT_OK


def cmd_build_contexts(args: argparse.Namespace) -> int:
    stream = load_stream(args.stream, format=args.stream_format)
    matrix = build_cooccurrence(stream)
    valid = frequent_labels(matrix, args.min_frequency)
    variant = {"basic": "basic", "greedy": "greedy_nonoverlap", "greedy-overlap": "greedy_overlap"}[
        args.algo
    ]
    catalog = build_contexts(
        matrix,
        valid,
        args.B,
        args.Mmax,
        variant,
        shuffle_seed=args.seed if variant == "basic" else None,
    )
    save_catalog(catalog, args.out)
    meta = {
        "provenance": _provenance({"stream": Path(args.stream)}, seed=args.seed),
        "requested": {"B": args.B, "M_max": args.Mmax, "variant": variant},
        "realized_contexts": catalog.context_count,
        "valid_labels": sorted(valid),
        "catalog_sha256": catalog_digest(catalog),
    }
    _write_json(Path(str(args.out) + ".meta.json"), meta)
    print(
        f"built {catalog.context_count} contexts (variant={variant}, B={args.B}, "
        f"M_max={args.Mmax}) -> {args.out}"
    )
    return EXIT_OK


def _predicted_stream(args: argparse.Namespace, truth):
    if args.pred:
        return load_stream(args.pred, format=args.stream_format)
    if args.p_fn > 0 or args.p_fp > 0:
        noise = NoiseConfig(
            false_negative_rate=args.p_fn,
            false_positive_rate=args.p_fp,
            seed=args.noise_seed if args.noise_seed is not None else args.seed,
        )
        return apply_prediction_noise(truth, noise)
    return truth


def cmd_simulate(args: argparse.Namespace) -> int:
    truth = load_stream(args.stream, format=args.stream_format)
    predicted = _predicted_stream(args, truth)
    catalog = load_catalog(args.catalog)
    accuracy = _load_accuracy_for(args, catalog)
    config = DetectorConfig(
        tau=args.tau,
        context_copy=args.copy,
        uncoverable_policy=args.uncoverable.replace("-", "_"),
    )
    trace = run_simulation(truth, predicted, catalog, accuracy, config)
    write_trace(trace, args.out)
    if args.csv:
        trace_to_csv(trace, args.csv)
    print(
        f"simulated {trace.frame_count} frames: policy={trace.policy} "
        f"avg_coverage={avg_coverage(trace):.4f} switches={switch_penalty(trace)}"
        if trace.frame_count
        else "simulated 0 frames"
    )
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    truth = load_stream(args.stream, format=args.stream_format)
    catalog = load_catalog(args.catalog)
    accuracy = _load_accuracy_for(args, catalog)
    policy = args.uncoverable.replace("-", "_")
    if args.mode == "per-frame":
        trace = per_frame_oracle_trace(truth, catalog, accuracy, args.tau, policy=policy)
    else:
        config = OracleConfig(
            mode="sequence",
            s_max=args.s_max,
            subset_cap=args.subset_cap,
            uncoverable_policy=policy,
        )
        trace = sequence_oracle(truth, catalog, accuracy, args.tau, config)
    write_trace(trace, args.out)
    if trace.frame_count:
        print(
            f"oracle ({trace.policy}) over {trace.frame_count} frames: "
            f"avg_coverage={avg_coverage(trace):.4f} objective={total_selection_cost(trace)}"
        )
    else:
        print(f"oracle ({trace.policy}) over 0 frames")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    stream = load_stream(args.stream, format=args.stream_format)
    catalog = load_catalog(args.catalog)
    trace = read_trace(args.trace, catalog)
    accuracy = _load_accuracy_for(args, catalog)
    matrix = build_cooccurrence(stream)
    score = coverage_weighted_score(trace, accuracy, catalog)
    payload = {
        "provenance": _provenance(
            {"trace": Path(args.trace), "catalog": Path(args.catalog), "stream": Path(args.stream)}
        ),
        "policy": trace.policy,
        "tau": trace.tau,
        "catalog_sha256": catalog_digest(catalog),
        "metrics": {
            "intra_coherence": intra_coherence(catalog, matrix),
            "intra_coherence_counts": intra_coherence(catalog, matrix, scale="counts"),
            "avg_coverage": avg_coverage(trace),
            "switch_penalty": switch_penalty(trace),
            "switch_cost_symdiff": switch_cost_symdiff(trace),
            "selection_objective": total_selection_cost(trace),
            "coverage_weighted_score": score.score,
            "uncovered_label_frames": score.uncovered_label_frames,
        },
        "notes": "coverage_weighted_score is a deterministic proxy, not a predictive metric",
    }
    _write_json(Path(args.out), payload)
    print(
        f"metrics: avg_coverage={payload['metrics']['avg_coverage']:.4f} "
        f"switch_penalty={payload['metrics']['switch_penalty']} "
        f"score={score.score:.4f} -> {args.out}"
    )
    return EXIT_OK


def cmd_cost(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    trace = read_trace(args.trace, catalog)
    profiles = load_calibrations(args.calibration)
    if args.profile not in profiles:
        raise ValidationError(
            f"unknown calibration profile {args.profile!r}; available: {sorted(profiles)}"
        )
    cost = profiles[args.profile]
    reference = None
    if args.reference:
        if args.reference not in profiles:
            raise ValidationError(
                f"unknown reference profile {args.reference!r}; available: {sorted(profiles)}"
            )
        reference = profiles[args.reference]
    arch = ARCH_PRESETS[args.arch_preset]
    report = profile_report(
        arch,
        catalog,
        trace,
        cost,
        reference=reference,
        reported_memory_mb=REPORTED_MEMORY_MB.get(args.arch_preset),
    )
    payload = {
        "provenance": _provenance(
            {"trace": Path(args.trace), "catalog": Path(args.catalog)}
        ),
        "calibration_profile": args.profile,
        "reference_profile": args.reference,
        "arch_preset": args.arch_preset,
        "report": report,
    }
    _write_json(Path(args.out), payload)
    line = (
        f"cost: mean_power={report['trace_cost']['mean_power_w']:.4f} W "
        f"mean_latency={report['trace_cost']['mean_latency_ms']:.2f} ms"
    )
    if "power_ratio_vs_reference" in report:
        line += f" power_ratio_vs_reference={report['power_ratio_vs_reference']:.4f}"
    print(line + f" -> {args.out}")
    return EXIT_OK


def cmd_compose_check(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    max_merge_error = 0.0
    for _ in range(args.instances):
        h = int(rng.integers(2, args.max_dim + 1))
        d = int(rng.integers(2, args.max_dim + 1))
        m = int(rng.integers(1, 9))
        n_adapters = int(rng.integers(0, args.max_adapters + 1))
        x = rng.standard_normal((m, h))
        weight = rng.standard_normal((h, d))
        adapters = []
        for _ in range(n_adapters):
            r = int(rng.integers(1, min(h, d, args.max_rank) + 1))
            adapters.append(
                LoraPair(a=rng.standard_normal((h, r)), b=rng.standard_normal((r, d)))
            )
        merged = forward_merged(x, weight, adapters)
        unmerged = forward_unmerged(x, weight, adapters)
        scale = max(np.abs(merged).max(), 1e-30)
        max_merge_error = max(max_merge_error, float(np.abs(merged - unmerged).max() / scale))

    max_stack_error = 0.0
    op_counts = {}
    for _ in range(max(1, args.instances // 10)):
        depth = int(rng.integers(2, 7))
        dim = int(rng.integers(2, 17))
        fraction = float(rng.choice([0.2, 0.5, 1.0]))
        stack = LayerStack(
            weights=tuple(rng.standard_normal((dim, dim)) for _ in range(depth)),
            adapted_fraction=fraction,
        )
        x = rng.standard_normal((3, dim))
        k = int(rng.integers(0, 4))
        contexts = []
        for _ in range(k):
            assignment = {}
            for layer_index in range(stack.adapted_start, depth):
                if rng.random() < 0.7:
                    r = int(rng.integers(1, min(dim, 4) + 1))
                    assignment[layer_index] = [
                        LoraPair(a=rng.standard_normal((dim, r)), b=rng.standard_normal((r, dim)))
                    ]
            contexts.append(assignment)
        result = stacked_forward(stack, x, contexts)
        for idx, assignment in enumerate(contexts):
            # Naive reference: run the whole stack per context, no shared prefix.
            out = x
            for layer_index in range(depth):
                out = forward_unmerged(out, stack.weights[layer_index], assignment.get(layer_index, ()))
            scale = max(np.abs(out).max(), 1e-30)
            max_stack_error = max(
                max_stack_error, float(np.abs(out - result.context_outputs[idx]).max() / scale)
            )
        op_counts = {"last_instance_macs": result.mac_count, "contexts": k, "depth": depth}

    payload = {
        "provenance": _provenance({}, seed=args.seed),
        "instances": args.instances,
        "max_relative_error_merged_vs_unmerged": max_merge_error,
        "max_relative_error_stacked_vs_naive": max_stack_error,
        "op_counts": op_counts,
        "tolerance": 1e-6,
        "pass": max_merge_error <= 1e-6 and max_stack_error <= 1e-6,
    }
    if args.out:
        _write_json(Path(args.out), payload)
    print(
        f"compose-check: merged_vs_unmerged={max_merge_error:.3e} "
        f"stacked_vs_naive={max_stack_error:.3e} "
        f"({'pass' if payload['pass'] else 'FAIL'} at 1e-06)"
    )
    return EXIT_OK if payload["pass"] else EXIT_INTERNAL


def cmd_analyze_arch(args: argparse.Namespace) -> int:
    if args.preset not in ARCH_PRESETS:
        raise ValidationError(
            f"unknown preset {args.preset!r}; available: {sorted(ARCH_PRESETS)}"
        )
    arch = ARCH_PRESETS[args.preset]
    if args.head_classes is not None:
        from dataclasses import replace

        arch = replace(arch, head_classes=args.head_classes)
    per_adapter_macs = adapter_mac_overhead(arch)
    per_adapter_params = adapter_param_count(arch)
    catalog_params = catalog_param_overhead(arch, args.contexts)
    payload = {
        "provenance": _provenance({}),
        "preset": args.preset,
        "contexts": args.contexts,
        "per_adapter_mac_overhead": per_adapter_macs,
        "per_adapter_params": per_adapter_params,
        "catalog_param_overhead": catalog_params,
        "total_params": arch.base_params + catalog_params,
        "total_macs_one_adapter": arch.base_macs + per_adapter_macs,
        "memory_mb_fp32": (arch.base_params + catalog_params) * 4 / 1e6,
        "reported_base_memory_mb": REPORTED_MEMORY_MB.get(args.preset),
    }
    if args.out:
        _write_json(Path(args.out), payload)
    print(
        f"analyze-arch[{args.preset}]: per_adapter_macs={per_adapter_macs:.0f} "
        f"({per_adapter_macs / 1e6:.2f} M), catalog_params={catalog_params:.0f} "
        f"({catalog_params / 1e6:.2f} M) over {args.contexts} contexts, "
        f"total_params={payload['total_params'] / 1e6:.2f} M"
    )
    return EXIT_OK


def _parse_grid_ints(text: str) -> tuple[int, ...]:
    values = tuple(int(part) for part in text.split(",") if part.strip())
    if not values:
        raise ValidationError("empty sweep grid")
    return values


def _parse_grid_floats(text: str) -> tuple[float, ...]:
    values = tuple(float(part) for part in text.split(",") if part.strip())
    if not values:
        raise ValidationError("empty sweep grid")
    return values


def cmd_sweep(args: argparse.Namespace) -> int:
    truth = load_stream(args.stream, format=args.stream_format)
    sizes = _parse_grid_ints(args.B)
    taus = _parse_grid_floats(args.tau)
    variant_map = {
        "basic": "basic",
        "greedy": "greedy_nonoverlap",
        "greedy-overlap": "greedy_overlap",
    }
    variants = []
    for name in args.variants.split(","):
        name = name.strip()
        if not name:
            continue
        if name not in variant_map:
            raise ValidationError(f"unknown variant {name!r}")
        variants.append(variant_map[name])
    if not variants:
        raise ValidationError("empty sweep grid")
    policies = tuple(p.strip().replace("-", "_") for p in args.policies.split(",") if p.strip())
    if not policies:
        raise ValidationError("empty sweep grid")

    noise = NoiseConfig(
        false_negative_rate=args.p_fn,
        false_positive_rate=args.p_fp,
        seed=args.noise_seed if args.noise_seed is not None else args.seed,
    )
    predicted = (
        apply_prediction_noise(truth, noise) if (args.p_fn > 0 or args.p_fp > 0) else truth
    )
    cost = load_calibrations(args.calibration)[args.profile]
    grid = SweepGrid(
        context_sizes=sizes, variants=tuple(variants), taus=taus, policies=policies
    )
    results = run_sweep(
        truth,
        predicted,
        grid,
        m_max=args.Mmax,
        a_max=args.a_max,
        size_slope=args.size_slope,
        seed=args.seed,
        cost=cost,
        jobs=args.jobs,
    )

    out_path = Path(args.out)
    with out_path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# tool=ctxsched {__version__}\n")
        handle.write(f"# stream={_sha256(Path(args.stream))}\n")
        handle.write(
            f"# seed={args.seed} p_fn={args.p_fn} p_fp={args.p_fp} "
            f"a_max={args.a_max} size_slope={args.size_slope} profile={args.profile}\n"
        )
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for result in results:
            writer.writerow([result.row.get(column, "") for column in CSV_COLUMNS])

    if args.dump_traces:
        dump_dir = Path(args.dump_traces)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for result in results:
            if result.trace is None:
                continue
            row = result.row
            stem = (
                f"B{row['B']}_{row['variant']}_tau{row['tau']}_{row['policy']}"
            )
            write_trace(result.trace, dump_dir / f"{stem}.trace.json")
            save_catalog(result.trace.catalog, dump_dir / f"{stem}.catalog.json")

    failures = sum(1 for result in results if result.row.get("error"))
    print(f"sweep: {len(results)} cells ({failures} failed) -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctxsched", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ctxsched {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-stream", help="generate a seeded synthetic stream")
    p.add_argument("--K", type=int, required=True, help="label universe size")
    p.add_argument("--T", type=int, required=True, help="number of frames")
    p.add_argument("--clusters", default="none", help="planted clusters as NxS (e.g. 4x5)")
    p.add_argument("--mean-active", type=float, default=2.0, dest="mean_active")
    p.add_argument("--dwell", type=float, default=5.0, help="mean frames a label stays active")
    p.add_argument("--cluster-boost", type=float, default=4.0, dest="cluster_boost")
    p.add_argument(
        "--cluster-active-fraction", type=float, default=0.4, dest="cluster_active_fraction"
    )
    p.add_argument("--cluster-dwell", type=float, default=None, dest="cluster_dwell")
    p.add_argument(
        "--exclusive",
        action="store_true",
        help="one active cluster at a time (labels of distinct clusters never co-occur)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_stream)

    p = sub.add_parser("build-contexts", help="build a context catalog from a stream")
    p.add_argument("--stream", type=Path, required=True)
    p.add_argument("--stream-format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--B", type=int, required=True, help="max labels per context")
    p.add_argument("--Mmax", type=int, required=True, help="max number of contexts")
    p.add_argument("--algo", choices=("basic", "greedy", "greedy-overlap"), default="greedy")
    p.add_argument("--min-frequency", type=float, default=0.0, dest="min_frequency")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed for the basic variant")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_build_contexts)

    def add_sim_io(p):
        p.add_argument("--stream", type=Path, required=True, help="ground-truth stream")
        p.add_argument("--stream-format", choices=("jsonl", "csv"), default="jsonl")
        p.add_argument("--catalog", type=Path, required=True)
        _add_accuracy_args(p)
        p.add_argument("--tau", type=float, required=True)
        p.add_argument(
            "--uncoverable", choices=("error", "best-effort"), default="best-effort"
        )
        p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("simulate", help="replay a stream through the greedy detector")
    add_sim_io(p)
    p.add_argument("--pred", type=Path, help="predicted stream (defaults to noisy/true stream)")
    p.add_argument("--p-fn", type=float, default=0.0, dest="p_fn")
    p.add_argument("--p-fp", type=float, default=0.0, dest="p_fp")
    p.add_argument("--noise-seed", type=int, default=None, dest="noise_seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--copy", action="store_true", help="enable the context-copy fast path")
    p.add_argument("--csv", type=Path, help="also export the trace as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="run an exact selection baseline")
    add_sim_io(p)
    p.add_argument("--mode", choices=("per-frame", "sequence"), default="per-frame")
    p.add_argument("--s-max", type=int, default=4, dest="s_max")
    p.add_argument("--subset-cap", type=int, default=12, dest="subset_cap")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("metrics", help="compute clustering and trace metrics")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--stream", type=Path, required=True, help="stream for the co-occurrence matrix")
    p.add_argument("--stream-format", choices=("jsonl", "csv"), default="jsonl")
    _add_accuracy_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("cost", help="estimate latency/power/energy for a trace")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--calibration", type=Path, help="calibration JSON (defaults to packaged)")
    p.add_argument("--profile", default="deit-tiny-adapters")
    p.add_argument("--reference", help="profile to compare mean power against")
    p.add_argument("--arch-preset", default="deit-tiny", dest="arch_preset")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("compose-check", help="verify merged/unmerged and shared-prefix identities")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--max-dim", type=int, default=64, dest="max_dim")
    p.add_argument("--max-rank", type=int, default=8, dest="max_rank")
    p.add_argument("--max-adapters", type=int, default=5, dest="max_adapters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_compose_check)

    p = sub.add_parser("analyze-arch", help="adapter parameter/MAC accounting for a preset")
    p.add_argument("--preset", default="deit-tiny")
    p.add_argument("--contexts", type=int, default=11)
    p.add_argument("--head-classes", type=int, default=None, dest="head_classes")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_analyze_arch)

    p = sub.add_parser("sweep", help="cross-product of catalogs, thresholds, and policies")
    p.add_argument("--stream", type=Path, required=True)
    p.add_argument("--stream-format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--B", required=True, help="comma list of context sizes, e.g. 2,5,15")
    p.add_argument("--variants", default="basic,greedy,greedy-overlap")
    p.add_argument("--tau", default="0.5")
    p.add_argument("--policies", default="greedy,greedy-copy,oracle-per-frame")
    p.add_argument("--Mmax", type=int, default=None)
    _add_accuracy_args(p)
    p.add_argument("--p-fn", type=float, default=0.0, dest="p_fn")
    p.add_argument("--p-fp", type=float, default=0.0, dest="p_fp")
    p.add_argument("--noise-seed", type=int, default=None, dest="noise_seed")
    p.add_argument("--calibration", type=Path)
    p.add_argument("--profile", default="deit-tiny-adapters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dump-traces", type=Path, default=None, dest="dump_traces")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InfeasibleError, UncoverableLabelError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (StreamParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ToolkitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
