"""Per-layer cost model for pipelined CNNs.

Each layer is characterised by its multiplication count, the memory needed
for its weights and the size of the activation tensor it hands to the next
layer. ReLU and pooling are folded into the preceding convolution, so a model
only lists convolutional and fully-connected layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, NamedTuple

VALID_WEIGHT_BITS = (8, 16, 32, 64)
DEFAULT_WEIGHT_BITS = 32
DEFAULT_ACTIVATION_BITS = 32
DEFAULT_PIXEL_BITS = 8


class CnnError(ValueError):
    """Raised for malformed layer or model descriptors."""


class LayerKind(str, Enum):
    CONV = "convolutional"
    FC = "fully_connected"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    in_channels: int
    out_channels: int
    filter_side: int = 0
    out_spatial_side: int = 0
    weight_count: int = 0
    weight_bits: int = DEFAULT_WEIGHT_BITS
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LayerKind(self.kind))
        if self.in_channels < 1 or self.out_channels < 1:
            raise CnnError(f"layer {self.name!r}: channel counts must be >= 1")
        if self.kind is LayerKind.CONV and (self.filter_side < 1 or self.out_spatial_side < 1):
            raise CnnError(f"layer {self.name!r}: conv layers need filter_side >= 1 and out_spatial_side >= 1")
        if self.weight_count < 0:
            raise CnnError(f"layer {self.name!r}: weight_count must be >= 0")
        if self.weight_bits not in VALID_WEIGHT_BITS:
            raise CnnError(f"layer {self.name!r}: weight_bits must be one of {VALID_WEIGHT_BITS}")

    def output_elements(self) -> int:
        if self.kind is LayerKind.CONV:
            return self.out_channels * self.out_spatial_side**2
        return self.out_channels


def conv(
    in_channels: int,
    out_channels: int,
    filter_side: int,
    out_spatial_side: int,
    *,
    weight_bits: int = DEFAULT_WEIGHT_BITS,
    weight_count: int | None = None,
    name: str = "",
) -> LayerSpec:
    """Convolutional layer; weight count defaults to n_in * n_out * s^2 (no bias)."""
    if weight_count is None:
        weight_count = in_channels * out_channels * filter_side**2
    return LayerSpec(LayerKind.CONV, in_channels, out_channels, filter_side, out_spatial_side,
                     weight_count, weight_bits, name)


def fc(
    in_features: int,
    out_features: int,
    *,
    weight_bits: int = DEFAULT_WEIGHT_BITS,
    weight_count: int | None = None,
    name: str = "",
) -> LayerSpec:
    if weight_count is None:
        weight_count = in_features * out_features
    return LayerSpec(LayerKind.FC, in_features, out_features, 0, 0, weight_count, weight_bits, name)


@dataclass(frozen=True)
class CnnModel:
    id: str
    layers: tuple[LayerSpec, ...]
    inter_layer_bits: tuple[int, ...]
    input_bits: int
    output_bits: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "inter_layer_bits", tuple(int(k) for k in self.inter_layer_bits))
        if not self.layers:
            raise CnnError(f"model {self.id!r}: no layers")
        if len(self.inter_layer_bits) != len(self.layers) - 1:
            raise CnnError(
                f"model {self.id!r}: inter_layer_bits has {len(self.inter_layer_bits)} entries, "
                f"expected {len(self.layers) - 1}"
            )
        if any(k <= 0 for k in self.inter_layer_bits):
            raise CnnError(f"model {self.id!r}: intermediate sizes must be positive")
        if self.input_bits <= 0 or self.output_bits <= 0:
            raise CnnError(f"model {self.id!r}: input_bits and output_bits must be positive")

    @property
    def num_layers(self) -> int:
        return len(self.layers)


def build_model(
    model_id: str,
    layers: Iterable[LayerSpec],
    input_bits: int,
    *,
    activation_bits: int = DEFAULT_ACTIVATION_BITS,
) -> CnnModel:
    """Assemble a model whose intermediate sizes follow from each layer's output shape."""
    layers = tuple(layers)
    sizes = [layer.output_elements() * activation_bits for layer in layers]
    return CnnModel(model_id, layers, tuple(sizes[:-1]), input_bits, sizes[-1])


# -- cost formulas ----------------------------------------------------------

def conv_load(layer: LayerSpec) -> int:
    if layer.kind is not LayerKind.CONV:
        raise CnnError(f"conv_load called on a {layer.kind.value} layer")
    return layer.in_channels * layer.filter_side**2 * layer.out_channels * layer.out_spatial_side**2


def fc_load(layer: LayerSpec) -> int:
    if layer.kind is not LayerKind.FC:
        raise CnnError(f"fc_load called on a {layer.kind.value} layer")
    return layer.in_channels * layer.out_channels


def layer_load(layer: LayerSpec) -> int:
    return conv_load(layer) if layer.kind is LayerKind.CONV else fc_load(layer)


def layer_memory_bits(layer: LayerSpec) -> int:
    return layer.weight_count * layer.weight_bits


class LayerProfile(NamedTuple):
    load: int          # multiplications
    memory_bytes: int
    output_bits: int


def profile_model(model: CnnModel) -> list[LayerProfile]:
    out_sizes = model.inter_layer_bits + (model.output_bits,)
    return [
        LayerProfile(layer_load(layer), layer_memory_bits(layer) // 8, k)
        for layer, k in zip(model.layers, out_sizes)
    ]


# -- built-in descriptors ---------------------------------------------------

def lenet5() -> CnnModel:
    """LeNet-5 on 32x32x3 RGB input: 2 conv + 3 fc."""
    layers = (
        conv(3, 6, 5, 28, name="conv1"),
        conv(6, 16, 5, 10, name="conv2"),
        fc(16 * 5 * 5, 120, name="fc1"),
        fc(120, 84, name="fc2"),
        fc(84, 10, name="fc3"),
    )
    return build_model("lenet5", layers, 3 * 32 * 32 * DEFAULT_PIXEL_BITS)


def alexnet() -> CnnModel:
    """AlexNet on 227x227x3 RGB input: 5 conv + 3 fc, ungrouped convolutions."""
    layers = (
        conv(3, 96, 11, 55, name="conv1"),
        conv(96, 256, 5, 27, name="conv2"),
        conv(256, 384, 3, 13, name="conv3"),
        conv(384, 384, 3, 13, name="conv4"),
        conv(384, 256, 3, 13, name="conv5"),
        fc(256 * 6 * 6, 4096, name="fc6"),
        fc(4096, 4096, name="fc7"),
        fc(4096, 1000, name="fc8"),
    )
    return build_model("alexnet", layers, 3 * 227 * 227 * DEFAULT_PIXEL_BITS)


BUILTIN_MODELS = {"lenet5": lenet5, "alexnet": alexnet}


# -- descriptor files -------------------------------------------------------

_LAYER_KEYS = {"kind", "in_channels", "out_channels", "filter_side", "out_spatial_side",
               "weight_count", "weight_bits", "name"}
_MODEL_KEYS = {"id", "layers", "input_bits", "activation_bits", "inter_layer_bits", "output_bits"}


def model_from_dict(data: dict[str, Any]) -> CnnModel:
    unknown = set(data) - _MODEL_KEYS
    if unknown:
        raise CnnError(f"model: unknown keys {sorted(unknown)}")
    try:
        model_id = data["id"]
        raw_layers = data["layers"]
        input_bits = int(data["input_bits"])
    except KeyError as exc:
        raise CnnError(f"model: missing key {exc.args[0]!r}") from None
    layers = []
    for idx, rec in enumerate(raw_layers):
        unknown = set(rec) - _LAYER_KEYS
        if unknown:
            raise CnnError(f"model.layers[{idx}]: unknown keys {sorted(unknown)}")
        kind = LayerKind(rec["kind"])
        bits = rec.get("weight_bits", DEFAULT_WEIGHT_BITS)
        name = rec.get("name", "")
        if kind is LayerKind.CONV:
            layers.append(conv(rec["in_channels"], rec["out_channels"], rec["filter_side"],
                               rec["out_spatial_side"], weight_bits=bits,
                               weight_count=rec.get("weight_count"), name=name))
        else:
            layers.append(fc(rec["in_channels"], rec["out_channels"], weight_bits=bits,
                             weight_count=rec.get("weight_count"), name=name))
    base = build_model(model_id, layers, input_bits,
                       activation_bits=data.get("activation_bits", DEFAULT_ACTIVATION_BITS))
    return CnnModel(
        model_id,
        base.layers,
        tuple(data.get("inter_layer_bits", base.inter_layer_bits)),
        input_bits,
        int(data.get("output_bits", base.output_bits)),
    )


def model_to_dict(model: CnnModel) -> dict[str, Any]:
    layers = []
    for layer in model.layers:
        rec: dict[str, Any] = {"kind": layer.kind.value, "name": layer.name,
                               "in_channels": layer.in_channels, "out_channels": layer.out_channels}
        if layer.kind is LayerKind.CONV:
            rec["filter_side"] = layer.filter_side
            rec["out_spatial_side"] = layer.out_spatial_side
        rec["weight_count"] = layer.weight_count
        rec["weight_bits"] = layer.weight_bits
        layers.append(rec)
    return {
        "id": model.id,
        "input_bits": model.input_bits,
        "layers": layers,
        "inter_layer_bits": list(model.inter_layer_bits),
        "output_bits": model.output_bits,
    }


def resolve_model(ref: str | dict[str, Any]) -> CnnModel:
    """Look up a built-in id, or load an inline dict / descriptor file."""
    if isinstance(ref, dict):
        return model_from_dict(ref)
    if ref in BUILTIN_MODELS:
        return BUILTIN_MODELS[ref]()
    path = Path(ref)
    if path.is_file():
        return model_from_dict(json.loads(path.read_text()))
    raise CnnError(f"unknown model {ref!r}; expected one of {sorted(BUILTIN_MODELS)} or a descriptor file")


def profile_table(model: CnnModel) -> str:
    rows = [f"{'layer':<8} {'kind':<16} {'mults':>14} {'mem_bytes':>12} {'out_bits':>10}"]
    for layer, prof in zip(model.layers, profile_model(model)):
        rows.append(f"{layer.name or '-':<8} {layer.kind.value:<16} {prof.load:>14} "
                    f"{prof.memory_bytes:>12} {prof.output_bits:>10}")
    total = sum(p.load for p in profile_model(model))
    total_mem = sum(p.memory_bytes for p in profile_model(model))
    rows.append(f"{'total':<8} {'':<16} {total:>14} {total_mem:>12}")
    return "\n".join(rows)
