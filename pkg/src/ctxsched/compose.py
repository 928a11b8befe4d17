"""Low-rank adapter composition: unmerged parallel application over a shared stack.

Layers are plain linear maps; that is sufficient to verify the composition
identities, which are linear-algebraic, and to count the operations the cost
model needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class LoraPair:
    """A low-rank additive update A @ B to one frozen weight matrix.

    ``a`` has shape (h, r) and ``b`` shape (r, d) with rank r strictly below
    min(h, d).
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.ndim != 2 or self.b.ndim != 2:
            raise ValidationError("adapter factors must be 2-D matrices")
        if self.a.shape[1] != self.b.shape[0]:
            raise ValidationError(
                f"adapter inner dimensions disagree: {self.a.shape} vs {self.b.shape}"
            )
        if self.rank < 1:
            raise ValidationError("adapter rank must be at least 1")
        if self.rank > min(self.a.shape[0], self.b.shape[1]):
            raise ValidationError(
                f"adapter rank {self.rank} exceeds min(h, d)="
                f"{min(self.a.shape[0], self.b.shape[1])}"
            )
        if not (np.isfinite(self.a).all() and np.isfinite(self.b).all()):
            raise ValidationError("adapter factors must be finite")

    @property
    def rank(self) -> int:
        return self.a.shape[1]


def _check_forward_dims(x: np.ndarray, weight: np.ndarray, adapters: Sequence[LoraPair]) -> None:
    if x.ndim != 2 or weight.ndim != 2:
        raise ValidationError("inputs must be 2-D matrices")
    if x.shape[1] != weight.shape[0]:
        raise ValidationError(f"cannot multiply {x.shape} by {weight.shape}")
    for adapter in adapters:
        if adapter.a.shape[0] != weight.shape[0] or adapter.b.shape[1] != weight.shape[1]:
            raise ValidationError(
                f"adapter of shape {adapter.a.shape}x{adapter.b.shape} does not match "
                f"weight {weight.shape}"
            )


def forward_unmerged(
    x: np.ndarray, weight: np.ndarray, adapters: Sequence[LoraPair] = ()
) -> np.ndarray:
    """x @ W plus each adapter's (x @ A) @ B, without touching the base weight."""
    _check_forward_dims(x, weight, adapters)
    out = x @ weight
    for adapter in adapters:
        out = out + (x @ adapter.a) @ adapter.b
    return out


def forward_merged(
    x: np.ndarray, weight: np.ndarray, adapters: Sequence[LoraPair] = ()
) -> np.ndarray:
    """Materialize W' = W + sum(A @ B), then compute x @ W'."""
    _check_forward_dims(x, weight, adapters)
    merged = weight.copy()
    for adapter in adapters:
        merged += adapter.a @ adapter.b
    return x @ merged


@dataclass(frozen=True)
class LayerStack:
    """A chain of linear layers whose final fraction may carry adapters.

    ``adapted_fraction`` of 0.2 on a 12-layer stack yields 2 adapted layers:
    the adapted count is floor(f*L), held at a minimum of 1 whenever f > 0,
    which is the accounting under which the published compute deltas
    reproduce.
    """

    weights: tuple[np.ndarray, ...]
    adapted_fraction: float = 0.2

    def __post_init__(self):
        if not self.weights:
            raise ValidationError("a layer stack needs at least one layer")
        if not 0.0 <= self.adapted_fraction <= 1.0:
            raise ValidationError("adapted_fraction must lie in [0, 1]")
        for i, weight in enumerate(self.weights):
            if weight.ndim != 2:
                raise ValidationError(f"layer {i} weight must be a 2-D matrix")
            if i and self.weights[i - 1].shape[1] != weight.shape[0]:
                raise ValidationError(
                    f"layer {i - 1} output dim {self.weights[i - 1].shape[1]} does not feed "
                    f"layer {i} input dim {weight.shape[0]}"
                )

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def adapted_layer_count(self) -> int:
        if self.adapted_fraction == 0.0:
            return 0
        return max(1, math.floor(self.adapted_fraction * self.depth))

    @property
    def adapted_start(self) -> int:
        return self.depth - self.adapted_layer_count


@dataclass(frozen=True)
class StackedForwardResult:
    base_output: np.ndarray
    context_outputs: tuple[np.ndarray, ...]
    mac_count: int


def stacked_forward(
    stack: LayerStack,
    x: np.ndarray,
    context_adapters: Sequence[Mapping[int, Sequence[LoraPair]]],
) -> StackedForwardResult:
    """Run the shared prefix once, then the adapted suffix once per context.

    ``context_adapters`` assigns, per context, adapters to layer indices;
    every index must fall inside the adapted suffix. Returns the base
    (adapter-free) output, one output per context, and a tally of
    multiply-accumulate operations for cost calibration. Results are
    identical to running each context through the full stack independently.
    """
    if x.ndim != 2:
        raise ValidationError("input must be a 2-D matrix")
    if x.shape[1] != stack.weights[0].shape[0]:
        raise ValidationError(
            f"input dim {x.shape[1]} does not feed layer 0 input dim {stack.weights[0].shape[0]}"
        )
    start = stack.adapted_start
    for c, assignment in enumerate(context_adapters):
        for layer_index, adapters in assignment.items():
            if not start <= layer_index < stack.depth:
                raise ValidationError(
                    f"context {c} attaches an adapter to layer {layer_index}, outside the "
                    f"adapted suffix [{start}, {stack.depth})"
                )
            for adapter in adapters:
                weight = stack.weights[layer_index]
                if adapter.a.shape[0] != weight.shape[0] or adapter.b.shape[1] != weight.shape[1]:
                    raise ValidationError(
                        f"context {c} adapter shape mismatch at layer {layer_index}"
                    )

    macs = 0

    def matmul(left: np.ndarray, right: np.ndarray) -> np.ndarray:
        nonlocal macs
        macs += left.shape[0] * left.shape[1] * right.shape[1]
        return left @ right

    hidden = x
    for layer_index in range(start):
        hidden = matmul(hidden, stack.weights[layer_index])

    def run_suffix(assignment: Mapping[int, Sequence[LoraPair]]) -> np.ndarray:
        out = hidden
        for layer_index in range(start, stack.depth):
            base = matmul(out, stack.weights[layer_index])
            for adapter in assignment.get(layer_index, ()):
                base = base + matmul(matmul(out, adapter.a), adapter.b)
            out = base
        return out

    base_output = run_suffix({})
    context_outputs = tuple(run_suffix(assignment) for assignment in context_adapters)
    return StackedForwardResult(
        base_output=base_output, context_outputs=context_outputs, mac_count=macs
    )
