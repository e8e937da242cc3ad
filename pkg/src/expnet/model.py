"""Shared-trunk, two-head CNN: architecture description and full passes.

The trunk is conv -> ReLU -> maxpool repeated per conv stage, then flatten and
one hidden dense + ReLU; two parallel dense heads score the base digit (8-way)
and the exponent digit (10-way).  Forward passes record a ForwardTrace holding
exactly the per-layer caches the backward pass needs, so parameters stay
immutable during a pass and batches can be processed independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArchitectureMismatchError, ShapeError
from .layers import (ConvLayer, DenseLayer, _pool_backward_offsets_batch,
                     _pool_offsets_batch, conv_backward_batch, conv_forward_batch,
                     dense_backward_batch, dense_forward_batch, relu_forward)
from .rng import Rng

N_BASE_CLASSES = 8    # digits 2..9
N_EXP_CLASSES = 10    # digits 0..9


@dataclass(frozen=True)
class Architecture:
    """Static shape plan; enough to rebuild a model without other config."""

    input_hw: tuple[int, int] = (64, 64)
    conv_channels: tuple[int, ...] = (32, 64)
    kernel: int = 3
    conv_stride: int = 1
    conv_padding: int = 1
    pool_window: int = 2
    pool_stride: int = 2
    dense_width: int = 128
    n_base: int = N_BASE_CLASSES
    n_exp: int = N_EXP_CLASSES

    def stage_shapes(self) -> list[tuple[int, int, int]]:
        """[C, H, W] after the input and after each conv+pool stage."""
        h, w = self.input_hw
        shapes = [(1, h, w)]
        c = 1
        for k in self.conv_channels:
            h = (h + 2 * self.conv_padding - self.kernel) // self.conv_stride + 1
            w = (w + 2 * self.conv_padding - self.kernel) // self.conv_stride + 1
            h = (h - self.pool_window) // self.pool_stride + 1
            w = (w - self.pool_window) // self.pool_stride + 1
            c = k
            shapes.append((c, h, w))
        return shapes

    def feature_size(self) -> int:
        c, h, w = self.stage_shapes()[-1]
        return c * h * w

    def to_text(self) -> str:
        return "\n".join([
            f"input {self.input_hw[0]} {self.input_hw[1]}",
            f"conv {' '.join(str(c) for c in self.conv_channels)}",
            f"kernel {self.kernel} stride {self.conv_stride} pad {self.conv_padding}",
            f"pool {self.pool_window} stride {self.pool_stride}",
            f"dense {self.dense_width}",
            f"heads {self.n_base} {self.n_exp}",
        ])

    @classmethod
    def from_text(cls, text: str) -> "Architecture":
        fields: dict[str, list[str]] = {}
        for line in text.strip().splitlines():
            parts = line.split()
            fields[parts[0]] = parts[1:]
        try:
            return cls(
                input_hw=(int(fields["input"][0]), int(fields["input"][1])),
                conv_channels=tuple(int(c) for c in fields["conv"]),
                kernel=int(fields["kernel"][0]),
                conv_stride=int(fields["kernel"][2]),
                conv_padding=int(fields["kernel"][4]),
                pool_window=int(fields["pool"][0]),
                pool_stride=int(fields["pool"][2]),
                dense_width=int(fields["dense"][0]),
                n_base=int(fields["heads"][0]),
                n_exp=int(fields["heads"][1]),
            )
        except (KeyError, IndexError, ValueError) as exc:
            raise ArchitectureMismatchError(f"unreadable architecture descriptor: {exc}") from exc


DEFAULT_ARCH = Architecture()
TINY_ARCH = Architecture(input_hw=(16, 16), conv_channels=(4, 8), dense_width=16)


@dataclass
class ForwardTrace:
    """Per-layer caches recorded by a forward pass, consumed by backward."""

    entries: list = field(default_factory=list)
    batch: int = 1


class MultiOutputModel:
    """Trunk shared by two classifier heads; parameters in definition order."""

    def __init__(self, arch: Architecture, convs: list[ConvLayer], dense: DenseLayer,
                 base_head: DenseLayer, exp_head: DenseLayer):
        self.arch = arch
        self.convs = convs
        self.dense = dense
        self.base_head = base_head
        self.exp_head = exp_head

    @classmethod
    def init(cls, arch: Architecture, seed: int) -> "MultiOutputModel":
        """Fan-in-scaled uniform weights, zero biases, one substream per tensor."""
        rng = Rng(seed)
        convs = []
        in_c = 1
        for i, out_c in enumerate(arch.conv_channels):
            convs.append(ConvLayer.init(rng.substream(i), in_c, out_c, arch.kernel,
                                        arch.conv_stride, arch.conv_padding))
            in_c = out_c
        n = len(arch.conv_channels)
        dense = DenseLayer.init(rng.substream(n), arch.feature_size(), arch.dense_width)
        base_head = DenseLayer.init(rng.substream(n + 1), arch.dense_width, arch.n_base)
        exp_head = DenseLayer.init(rng.substream(n + 2), arch.dense_width, arch.n_exp)
        return cls(arch, convs, dense, base_head, exp_head)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        params = []
        for i, conv in enumerate(self.convs):
            params.append((f"conv{i}.weights", conv.weights))
            params.append((f"conv{i}.bias", conv.bias))
        params.append(("dense.weights", self.dense.weights))
        params.append(("dense.bias", self.dense.bias))
        params.append(("base_head.weights", self.base_head.weights))
        params.append(("base_head.bias", self.base_head.bias))
        params.append(("exp_head.weights", self.exp_head.weights))
        params.append(("exp_head.bias", self.exp_head.bias))
        return params

    def param_arrays(self) -> list[np.ndarray]:
        return [a for _, a in self.parameters()]

    def set_param_arrays(self, arrays: list[np.ndarray]) -> None:
        own = self.parameters()
        if len(arrays) != len(own):
            raise ShapeError(f"expected {len(own)} parameter tensors, got {len(arrays)}")
        for (name, current), new in zip(own, arrays):
            if current.shape != new.shape:
                raise ShapeError(f"{name}: shape {new.shape} != {current.shape}")
        for i, conv in enumerate(self.convs):
            conv.weights, conv.bias = arrays[2 * i], arrays[2 * i + 1]
        n = 2 * len(self.convs)
        self.dense.weights, self.dense.bias = arrays[n], arrays[n + 1]
        self.base_head.weights, self.base_head.bias = arrays[n + 2], arrays[n + 3]
        self.exp_head.weights, self.exp_head.bias = arrays[n + 4], arrays[n + 5]

    def astype(self, dtype) -> "MultiOutputModel":
        """Copy of the model with all parameters cast to dtype."""
        clone = MultiOutputModel(
            self.arch,
            [ConvLayer(c.weights.astype(dtype), c.bias.astype(dtype), c.stride, c.padding)
             for c in self.convs],
            DenseLayer(self.dense.weights.astype(dtype), self.dense.bias.astype(dtype)),
            DenseLayer(self.base_head.weights.astype(dtype), self.base_head.bias.astype(dtype)),
            DenseLayer(self.exp_head.weights.astype(dtype), self.exp_head.bias.astype(dtype)),
        )
        return clone

    # --- passes ---

    def forward_batch(self, x: np.ndarray, need_trace: bool = True):
        """[B, 1, H, W] -> (base logits [B, n_base], exp logits [B, n_exp], trace).

        need_trace=False skips the backward caches (inference / evaluation).
        """
        h, w = self.arch.input_hw
        if x.ndim != 4 or x.shape[1:] != (1, h, w):
            raise ShapeError(f"input: expected [B, 1, {h}, {w}], got {x.shape}")
        trace = ForwardTrace(batch=x.shape[0]) if need_trace else None
        for i, conv in enumerate(self.convs):
            try:
                x, cache = conv_forward_batch(conv, x)
            except ShapeError as exc:
                raise ShapeError(f"conv{i}: {exc}") from exc
            if need_trace:
                trace.entries.append(("conv", i, cache))
                trace.entries.append(("relu", None, x > 0))
            x = relu_forward(x)
            pooled_from = x.shape
            x, offsets = _pool_offsets_batch(x, self.arch.pool_window, self.arch.pool_stride)
            if need_trace:
                trace.entries.append(("pool", None, (offsets, pooled_from)))
        feat_shape = x.shape
        x = x.reshape(x.shape[0], -1)
        if need_trace:
            trace.entries.append(("flatten", None, feat_shape))
        if x.shape[1] != self.dense.weights.shape[1]:
            raise ShapeError(
                f"dense: flattened width {x.shape[1]} != expected {self.dense.weights.shape[1]}")
        pre = dense_forward_batch(self.dense, x)
        hidden = relu_forward(pre)
        if need_trace:
            trace.entries.append(("dense", None, x))
            trace.entries.append(("relu", None, pre > 0))
            trace.entries.append(("heads", None, hidden))
        base_logits = dense_forward_batch(self.base_head, hidden)
        exp_logits = dense_forward_batch(self.exp_head, hidden)
        return base_logits, exp_logits, trace

    def backward_batch(self, trace: ForwardTrace, grad_base: np.ndarray,
                       grad_exp: np.ndarray) -> list[np.ndarray]:
        """Gradients summed over the batch, aligned with parameters()."""
        entries = list(trace.entries)
        kind, _, hidden = entries.pop()
        if kind != "heads":
            raise ShapeError("trace does not match this model's forward pass")
        gw_b, gb_b, gx_b = dense_backward_batch(self.base_head, grad_base, hidden)
        gw_e, gb_e, gx_e = dense_backward_batch(self.exp_head, grad_exp, hidden)
        upstream = gx_b + gx_e          # heads meet at the shared trunk

        grads: dict[str, np.ndarray] = {
            "base_head.weights": gw_b, "base_head.bias": gb_b,
            "exp_head.weights": gw_e, "exp_head.bias": gb_e,
        }
        for kind, idx, cache in reversed(entries):
            if kind == "relu":
                upstream = upstream * cache       # cache is the sign mask
            elif kind == "dense":
                gw, gb, upstream = dense_backward_batch(self.dense, upstream, cache)
                grads["dense.weights"] = gw
                grads["dense.bias"] = gb
            elif kind == "flatten":
                upstream = upstream.reshape(cache)
            elif kind == "pool":
                offsets, in_shape = cache
                upstream = _pool_backward_offsets_batch(
                    upstream, offsets, in_shape, self.arch.pool_window, self.arch.pool_stride)
            elif kind == "conv":
                gw, gb, upstream = conv_backward_batch(self.convs[idx], upstream, cache)
                grads[f"conv{idx}.weights"] = gw
                grads[f"conv{idx}.bias"] = gb
        return [grads[name] for name, _ in self.parameters()]


def model_forward(model: MultiOutputModel, image: np.ndarray):
    """Single image [1, H, W] -> (base logits, exp logits, trace)."""
    if image.ndim != 3:
        raise ShapeError(f"image must be [1, H, W], got rank {image.ndim}")
    base, exp, trace = model.forward_batch(image[None])
    return base[0], exp[0], trace


def model_backward(model: MultiOutputModel, trace: ForwardTrace,
                   grad_base: np.ndarray, grad_exp: np.ndarray) -> list[np.ndarray]:
    if trace.batch != 1:
        raise ShapeError("trace was recorded for a batch, not a single image")
    return model.backward_batch(trace, grad_base[None], grad_exp[None])
