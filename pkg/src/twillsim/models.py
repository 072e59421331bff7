"""Model analysis: descriptor parsing and DLA-affinity signatures.

A model descriptor is a per-layer table (op type, precision, FLOPs,
shapes, conv geometry).  Against a DLA compatibility matrix, each layer
is classified as DLA-feasible or GPU-only; the FLOPs-weighted feasible
fraction decides whether the model prefers the DLA at all.  Models whose
feasible fraction falls below the affinity threshold are treated as
GPU-only by the schedulers, because unsupported layers fall back at a
heavy penalty when the whole model is pinned to the DLA.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

# Fraction of FLOPs that must be DLA-feasible before a model is
# considered a DLA candidate at all.
AFFINITY_THRESHOLD = 0.9

PARAM_OPS = ("Conv", "FullyConnected")


class TaskKind(Enum):
    DNN_BATCH = "dnn_batch"
    ENCODER_PROMPT = "encoder_prompt"
    GENERATIVE = "generative"


class ModelError(ValueError):
    """Raised for malformed descriptors or compatibility matrices."""


@dataclass(frozen=True)
class LayerSpec:
    op_type: str
    precision: str
    flops: int
    in_shape: tuple[int, ...]
    out_shape: tuple[int, ...]
    kernel: tuple[int, int] | None = None
    stride: tuple[int, int] | None = None
    padding: tuple[int, int] | None = None

    def __post_init__(self):
        if self.flops < 0:
            raise ModelError(f"{self.op_type}: negative flops")
        has_geom = self.kernel is not None
        if has_geom != (self.op_type in PARAM_OPS):
            raise ModelError(
                f"{self.op_type}: kernel/stride/padding present iff op is one of {PARAM_OPS}"
            )
        if has_geom and (self.stride is None or self.padding is None):
            raise ModelError(f"{self.op_type}: incomplete conv geometry")


@dataclass(frozen=True)
class AppProfile:
    """A parsed model plus the request-level attributes that drive cost."""

    name: str
    task_kind: TaskKind
    priority: int
    workload_size: int
    layers: tuple[LayerSpec, ...]
    reference_workload: int = 1
    workload_unit: str = "units"

    @property
    def total_flops(self) -> int:
        return sum(l.flops for l in self.layers)

    @property
    def work_gflops(self) -> float:
        """Total work for this request, scaled from the reference unit."""
        return self.total_flops / 1e9 * self.workload_size / self.reference_workload


@dataclass(frozen=True)
class CompatibilityMatrix:
    name: str
    supported_precisions: frozenset[str]
    unsupported_ops: frozenset[str]
    param_checked_ops: frozenset[str]
    kernel_range: tuple[int, int]
    stride_range: tuple[int, int]
    padding_range: tuple[int, int]
    max_batch: int
    max_spatial_dim: int

    def __post_init__(self):
        if self.unsupported_ops & self.param_checked_ops:
            raise ModelError("an op cannot be both unsupported and param-checked")


@dataclass(frozen=True)
class SignatureMap:
    """Per-model scheduling signature derived from the layer analysis."""

    model: str
    dla_flops_fraction: float
    fallback_fraction: float
    preferred_clusters: tuple[str, ...]  # cluster kinds, mapping-attempt order
    layer_feasible: tuple[bool, ...]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dla_flops_fraction": self.dla_flops_fraction,
            "fallback_fraction": self.fallback_fraction,
            "preferred_clusters": list(self.preferred_clusters),
            "layer_feasible": list(self.layer_feasible),
        }


def _pair(v) -> tuple[int, int]:
    a, b = v
    return int(a), int(b)


def load_matrix(text: str) -> CompatibilityMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"compatibility matrix is not valid JSON: {e}") from None
    try:
        return CompatibilityMatrix(
            name=doc.get("name", "unnamed"),
            supported_precisions=frozenset(doc["supported_precisions"]),
            unsupported_ops=frozenset(doc["unsupported_ops"]),
            param_checked_ops=frozenset(doc["param_checked_ops"]),
            kernel_range=_pair(doc["kernel_range"]),
            stride_range=_pair(doc["stride_range"]),
            padding_range=_pair(doc["padding_range"]),
            max_batch=int(doc["max_batch"]),
            max_spatial_dim=int(doc["max_spatial_dim"]),
        )
    except KeyError as e:
        raise ModelError(f"compatibility matrix missing field {e.args[0]!r}") from None


def _layer_from_dict(d: dict) -> LayerSpec:
    try:
        return LayerSpec(
            op_type=d["op_type"],
            precision=d["precision"],
            flops=int(d["flops"]),
            in_shape=tuple(int(x) for x in d["in_shape"]),
            out_shape=tuple(int(x) for x in d["out_shape"]),
            kernel=_pair(d["kernel"]) if "kernel" in d else None,
            stride=_pair(d["stride"]) if "stride" in d else None,
            padding=_pair(d["padding"]) if "padding" in d else None,
        )
    except KeyError as e:
        raise ModelError(f"layer entry missing field {e.args[0]!r}") from None


def parse_model(descriptor_text: str, priority: int, task_kind: TaskKind | None = None,
                workload_size: int | None = None) -> AppProfile:
    """Build an AppProfile from a JSON descriptor.

    task_kind and workload_size fall back to the descriptor defaults when
    not supplied by the caller.
    """
    try:
        doc = json.loads(descriptor_text)
    except json.JSONDecodeError as e:
        raise ModelError(f"model descriptor is not valid JSON: {e}") from None
    try:
        layers = tuple(_layer_from_dict(l) for l in doc["layers"])
        profile = AppProfile(
            name=doc["name"],
            task_kind=task_kind or TaskKind(doc["default_task_kind"]),
            priority=priority,
            workload_size=workload_size if workload_size is not None
            else int(doc["default_workload_size"]),
            layers=layers,
            reference_workload=int(doc.get("reference_workload", 1)),
            workload_unit=doc.get("workload_unit", "units"),
        )
    except KeyError as e:
        raise ModelError(f"model descriptor missing field {e.args[0]!r}") from None
    if not profile.layers:
        raise ModelError(f"{profile.name}: descriptor has no layers")
    if profile.workload_size <= 0:
        raise ModelError(f"{profile.name}: workload_size must be positive")
    declared = doc.get("total_flops")
    if declared is not None and int(declared) != profile.total_flops:
        raise ModelError(
            f"{profile.name}: declared total_flops {declared} != layer sum {profile.total_flops}"
        )
    return profile


def _in_range(pair: tuple[int, int], bounds: tuple[int, int]) -> bool:
    lo, hi = bounds
    return all(lo <= v <= hi for v in pair)


def dla_compatible(layer: LayerSpec, matrix: CompatibilityMatrix) -> bool:
    """True when the layer can execute natively on the DLA."""
    if layer.precision not in matrix.supported_precisions:
        return False
    if layer.op_type in matrix.unsupported_ops:
        return False
    if layer.op_type in matrix.param_checked_ops:
        if not _in_range(layer.kernel, matrix.kernel_range):
            return False
        if not _in_range(layer.stride, matrix.stride_range):
            return False
        if not _in_range(layer.padding, matrix.padding_range):
            return False
        if layer.in_shape and layer.in_shape[0] > matrix.max_batch:
            return False
        spatial = tuple(layer.in_shape[2:]) + tuple(layer.out_shape[2:])
        if any(s > matrix.max_spatial_dim for s in spatial):
            return False
    return True


def layer_affinity(profile: AppProfile, matrix: CompatibilityMatrix,
                   threshold: float = AFFINITY_THRESHOLD) -> SignatureMap:
    """Classify every layer and derive the model's scheduling signature."""
    feasible = tuple(dla_compatible(l, matrix) for l in profile.layers)
    total = profile.total_flops
    if total > 0:
        dla_flops = sum(l.flops for l, ok in zip(profile.layers, feasible) if ok)
        fraction = dla_flops / total
    else:
        fraction = 0.0
    preferred = ("DLA", "GPU") if fraction >= threshold else ("GPU",)
    return SignatureMap(
        model=profile.name,
        dla_flops_fraction=fraction,
        fallback_fraction=1.0 - fraction,
        preferred_clusters=preferred,
        layer_feasible=feasible,
    )


def fallback_fraction(signature: SignatureMap) -> float:
    """FLOPs fraction that falls back when the whole model runs on DLA."""
    return signature.fallback_fraction


def segment_fractions(profile: AppProfile) -> tuple[float, ...]:
    """Cumulative work fractions where a migrated task may resume.

    For a single-unit request the boundaries are the layer edges; for a
    multi-unit stream they are the unit edges (a completed unit is never
    recomputed, the unit in flight restarts).
    """
    n = profile.workload_size
    if n > 1:
        return tuple(i / n for i in range(n + 1))
    total = profile.total_flops
    if total == 0:
        return (0.0, 1.0)
    fractions = [0.0]
    acc = 0
    for l in profile.layers:
        acc += l.flops
        fractions.append(acc / total)
    return tuple(fractions)
