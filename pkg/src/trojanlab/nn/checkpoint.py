"""Model checkpoints.

Binary layout (all integers little-endian):

    magic            4 bytes  b"TJF1"
    version          u16      currently 1
    input rank       u8       1 or 3
    input dims       u32 * rank
    layer count      u32
    per layer:       kind u8 (0 conv2d, 1 dense, 2 flatten), units u32,
                     kernel u16, stride u16, padding u8 (0 same, 1 valid)
    payload count    u64      number of float32 values
    payload          f32 * count, per layer W then b, C-order

Weights are stored as 32-bit floats, so save -> load -> save round-trips to
byte-identical files.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointFormatError
from .layers import LayerSpec
from .model import NetworkModel

MAGIC = b"TJF1"
VERSION = 1
_KIND_CODE = {"conv2d": 0, "dense": 1, "flatten": 2}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}
_PAD_CODE = {"same": 0, "valid": 1}
_PAD_NAME = {v: k for k, v in _PAD_CODE.items()}


def save_checkpoint(model: NetworkModel, path) -> None:
    parts = [MAGIC, struct.pack("<H", VERSION)]
    parts.append(struct.pack("<B", len(model.input_shape)))
    for dim in model.input_shape:
        parts.append(struct.pack("<I", dim))
    parts.append(struct.pack("<I", len(model.specs)))
    for spec in model.specs:
        parts.append(
            struct.pack(
                "<BIHHB",
                _KIND_CODE[spec.kind],
                spec.units,
                spec.kernel,
                spec.stride,
                _PAD_CODE[spec.padding],
            )
        )
    flat = [arr.astype("<f4").ravel() for wb in model.weights if wb is not None for arr in wb]
    payload = np.concatenate(flat) if flat else np.empty(0, dtype="<f4")
    parts.append(struct.pack("<Q", payload.size))
    parts.append(payload.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise CheckpointFormatError("checkpoint truncated inside the header")
        out = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return out if len(out) > 1 else out[0]


def load_checkpoint(path) -> NetworkModel:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise CheckpointFormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    rd = _Reader(blob)
    rd.pos = 4
    version = rd.take("<H")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}, expected {VERSION}")
    rank = rd.take("<B")
    if rank not in (1, 3):
        raise CheckpointFormatError(f"bad input rank {rank}")
    input_shape = tuple(rd.take("<I") for _ in range(rank))
    n_layers = rd.take("<I")
    specs = []
    for _ in range(n_layers):
        kind, units, kernel, stride, padding = rd.take("<BIHHB")
        if kind not in _KIND_NAME or padding not in _PAD_NAME:
            raise CheckpointFormatError(f"bad layer record (kind={kind}, padding={padding})")
        specs.append(
            LayerSpec(_KIND_NAME[kind], units=units, kernel=kernel, stride=stride, padding=_PAD_NAME[padding])
        )
    declared = rd.take("<Q")
    payload = np.frombuffer(blob, dtype="<f4", offset=rd.pos)
    if payload.size != declared:
        raise CheckpointFormatError(
            f"payload length mismatch: header declares {declared} values, file carries {payload.size}"
        )
    try:
        model = NetworkModel(input_shape, specs, dtype=np.float32, init_seed=0)
    except ValueError as exc:
        raise CheckpointFormatError(f"inconsistent layer table: {exc}") from exc
    expected = sum(w.size + b.size for wb in model.weights if wb is not None for w, b in [wb])
    if payload.size != expected:
        raise CheckpointFormatError(
            f"payload length mismatch: layer table needs {expected} values, file carries {payload.size}"
        )
    pos = 0
    new_weights = []
    for wb in model.weights:
        if wb is None:
            new_weights.append(None)
            continue
        w, b = wb
        nw = payload[pos : pos + w.size].reshape(w.shape).astype(np.float32)
        pos += w.size
        nb = payload[pos : pos + b.size].reshape(b.shape).astype(np.float32)
        pos += b.size
        new_weights.append((nw, nb))
    model.weights = new_weights
    return model
