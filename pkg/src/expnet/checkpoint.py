"""Model checkpoints: magic "EXPM", version 1, little-endian.

Layout: magic, u32 version, length-prefixed architecture descriptor text,
u32 tensor count, then each parameter tensor as u32 rank, u32 dims, raw f32
data.  An optional trailer (flag u8 = 1) appends Adam state: f64 lr/beta1/
beta2/eps, u64 step count, then the first- and second-moment tensors in
parameter order.  Parameters round-trip bitwise; the descriptor alone is
enough to rebuild the model.
"""

from __future__ import annotations

import struct

import numpy as np

from .dataio import ByteReader
from .errors import ArchitectureMismatchError, BadMagicError, VersionMismatchError
from .model import Architecture, MultiOutputModel
from .optim import AdamState

MAGIC = b"EXPM"
VERSION = 1


def _pack_tensor(arr: np.ndarray) -> bytes:
    data = np.ascontiguousarray(arr, dtype="<f4")
    return (struct.pack("<I", arr.ndim)
            + struct.pack(f"<{arr.ndim}I", *arr.shape)
            + data.tobytes())


def _read_tensor(reader: ByteReader) -> np.ndarray:
    rank = reader.u32()
    shape = tuple(reader.u32() for _ in range(rank))
    n = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(reader.take(4 * n), dtype="<f4").astype(np.float32)
    return data.reshape(shape)


def write_checkpoint(model: MultiOutputModel, path: str,
                     adam_state: AdamState | None = None) -> None:
    descriptor = model.arch.to_text().encode()
    params = model.param_arrays()
    parts = [MAGIC, struct.pack("<I", VERSION),
             struct.pack("<I", len(descriptor)), descriptor,
             struct.pack("<I", len(params))]
    parts += [_pack_tensor(p) for p in params]
    if adam_state is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<B", 1))
        parts.append(struct.pack("<dddd", adam_state.lr, adam_state.beta1,
                                 adam_state.beta2, adam_state.eps))
        parts.append(struct.pack("<Q", adam_state.t))
        parts += [_pack_tensor(t) for t in adam_state.m]
        parts += [_pack_tensor(t) for t in adam_state.v]
    with open(path, "wb") as f:
        f.write(b"".join(parts))


def read_checkpoint(path: str, expect_arch: Architecture | None = None
                    ) -> tuple[MultiOutputModel, AdamState | None]:
    """Rebuild (model, adam state) from a checkpoint file.

    With expect_arch given (loading into an existing setup), a differing
    stored architecture raises ArchitectureMismatchError.
    """
    with open(path, "rb") as f:
        reader = ByteReader(f.read(), path)
    if reader.take(4) != MAGIC:
        raise BadMagicError(f"{path}: not a checkpoint file (bad magic)")
    version = reader.u32()
    if version != VERSION:
        raise VersionMismatchError(f"{path}: checkpoint version {version}, expected {VERSION}")
    descriptor = reader.take(reader.u32()).decode()
    arch = Architecture.from_text(descriptor)
    if expect_arch is not None and arch != expect_arch:
        raise ArchitectureMismatchError(
            f"{path}: checkpoint architecture does not match the target model:\n"
            f"stored:\n{arch.to_text()}\nexpected:\n{expect_arch.to_text()}")
    model = MultiOutputModel.init(arch, seed=0)
    n_tensors = reader.u32()
    expected = model.param_arrays()
    if n_tensors != len(expected):
        raise ArchitectureMismatchError(
            f"{path}: {n_tensors} parameter tensors, architecture implies {len(expected)}")
    tensors = [_read_tensor(reader) for _ in range(n_tensors)]
    for have, want in zip(tensors, expected):
        if have.shape != want.shape:
            raise ArchitectureMismatchError(
                f"{path}: tensor shape {have.shape} does not fit architecture "
                f"slot of shape {want.shape}")
    model.set_param_arrays(tensors)
    adam = None
    if reader.u8() == 1:
        lr, beta1, beta2, eps = (reader.f64() for _ in range(4))
        t = reader.u64()
        m = [_read_tensor(reader) for _ in range(n_tensors)]
        v = [_read_tensor(reader) for _ in range(n_tensors)]
        adam = AdamState(m=m, v=v, t=t, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    return model, adam
