"""Bit-exact tensor-container I/O.

File layout (compatible with the de-facto single-file "safetensors" format,
so real released checkpoints load directly):

* 8 bytes: little-endian unsigned header length ``N``
* ``N`` bytes: UTF-8 JSON mapping tensor name -> ``{"dtype", "shape",
  "data_offsets": [begin, end)}``, plus an optional ``"__metadata__"``
  string-to-string map; trailing space padding is permitted
* a contiguous data buffer; offsets are relative to the buffer start

Loading validates the offsets cover the buffer exactly (no overlaps, no gaps,
no out-of-bounds spans). Saving lays tensors out in checkpoint order and pads
the header to an 8-byte boundary, matching the reference writer.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import ml_dtypes
import numpy as np

from .errors import FormatError, IoError, UnsupportedDtype
from .util import atomic_write_bytes

# On-disk dtype tag -> (numpy dtype, bytes per element)
_DTYPES: dict[str, tuple[np.dtype, int]] = {
    "F64": (np.dtype(np.float64), 8),
    "F32": (np.dtype(np.float32), 4),
    "F16": (np.dtype(np.float16), 2),
    "BF16": (np.dtype(ml_dtypes.bfloat16), 2),
    "I64": (np.dtype(np.int64), 8),
    "I32": (np.dtype(np.int32), 4),
    "I16": (np.dtype(np.int16), 2),
    "I8": (np.dtype(np.int8), 1),
    "U64": (np.dtype(np.uint64), 8),
    "U32": (np.dtype(np.uint32), 4),
    "U16": (np.dtype(np.uint16), 2),
    "U8": (np.dtype(np.uint8), 1),
    "BOOL": (np.dtype(np.bool_), 1),
}

FLOAT_DTYPES = frozenset({"F64", "F32", "F16", "BF16"})

_NUMPY_TO_TAG = {np_dtype: tag for tag, (np_dtype, _) in _DTYPES.items()}

# Largest header the loader will attempt to parse (same cap as the reference
# implementation; a bigger value means a corrupt or hostile file).
MAX_HEADER_BYTES = 100_000_000


def element_size(dtype: str) -> int:
    try:
        return _DTYPES[dtype][1]
    except KeyError:
        raise UnsupportedDtype(f"dtype {dtype!r} is not supported") from None


def numpy_dtype(dtype: str) -> np.dtype:
    try:
        return _DTYPES[dtype][0]
    except KeyError:
        raise UnsupportedDtype(f"dtype {dtype!r} is not supported") from None


@dataclass(frozen=True)
class TensorRecord:
    """One named tensor: dtype tag, shape, and raw little-endian bytes."""

    name: str
    dtype: str
    shape: tuple[int, ...]
    data: bytes

    def __post_init__(self):
        if not self.name:
            raise FormatError("tensor name must be non-empty")
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        if any(d < 0 for d in self.shape):
            raise FormatError(f"tensor {self.name!r} has negative shape {self.shape}")
        expected = element_size(self.dtype) * self.num_elements
        if len(self.data) != expected:
            raise FormatError(
                f"tensor {self.name!r}: {len(self.data)} data bytes, "
                f"expected {expected} for dtype {self.dtype} shape {self.shape}"
            )

    @property
    def num_elements(self) -> int:
        return math.prod(self.shape)

    def to_numpy(self) -> np.ndarray:
        arr = np.frombuffer(self.data, dtype=numpy_dtype(self.dtype))
        return arr.reshape(self.shape)

    @classmethod
    def from_numpy(cls, name: str, array: np.ndarray) -> "TensorRecord":
        tag = _NUMPY_TO_TAG.get(array.dtype)
        if tag is None:
            raise UnsupportedDtype(f"no container dtype for numpy {array.dtype}")
        contiguous = np.ascontiguousarray(array)
        return cls(name=name, dtype=tag, shape=tuple(array.shape), data=contiguous.tobytes())


@dataclass
class Checkpoint:
    """An ordered collection of named tensors plus string metadata."""

    tensors: dict[str, TensorRecord] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name, record in self.tensors.items():
            if name != record.name:
                raise FormatError(
                    f"tensor keyed {name!r} carries mismatched name {record.name!r}"
                )

    def names(self) -> list[str]:
        return list(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def __getitem__(self, name: str) -> TensorRecord:
        return self.tensors[name]

    def add(self, record: TensorRecord) -> None:
        if record.name in self.tensors:
            raise FormatError(f"duplicate tensor name {record.name!r}")
        self.tensors[record.name] = record

    @classmethod
    def from_arrays(
        cls, arrays: dict[str, np.ndarray], metadata: dict[str, str] | None = None
    ) -> "Checkpoint":
        ckpt = cls(metadata=dict(metadata or {}))
        for name, array in arrays.items():
            ckpt.add(TensorRecord.from_numpy(name, array))
        return ckpt


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read and validate a container file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc

    if len(raw) < 8:
        raise FormatError(f"{path}: file too short for the 8-byte header length")
    (header_len,) = struct.unpack("<Q", raw[:8])
    if header_len > MAX_HEADER_BYTES:
        raise FormatError(f"{path}: header length {header_len} exceeds sanity cap")
    if 8 + header_len > len(raw):
        raise FormatError(
            f"{path}: header length {header_len} points past end of file"
        )
    try:
        header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed header JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header must be a JSON object")

    buffer = memoryview(raw)[8 + header_len :]
    metadata: dict[str, str] = {}
    entries: list[tuple[str, dict]] = []
    for name, entry in header.items():
        if name == "__metadata__":
            if not isinstance(entry, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in entry.items()
            ):
                raise FormatError(f"{path}: __metadata__ must map strings to strings")
            metadata = dict(entry)
            continue
        if not isinstance(entry, dict):
            raise FormatError(f"{path}: tensor entry {name!r} is not an object")
        entries.append((name, entry))

    spans: list[tuple[int, int, str]] = []
    ckpt = Checkpoint(metadata=metadata)
    for name, entry in entries:
        missing = [k for k in ("dtype", "shape", "data_offsets") if k not in entry]
        if missing:
            raise FormatError(f"{path}: tensor {name!r} missing {missing}")
        dtype = entry["dtype"]
        if not isinstance(dtype, str) or dtype not in _DTYPES:
            raise UnsupportedDtype(f"{path}: tensor {name!r} has unsupported dtype {dtype!r}")
        shape = entry["shape"]
        if not isinstance(shape, list) or not all(
            isinstance(d, int) and d >= 0 for d in shape
        ):
            raise FormatError(f"{path}: tensor {name!r} has invalid shape {shape!r}")
        offsets = entry["data_offsets"]
        if (
            not isinstance(offsets, list)
            or len(offsets) != 2
            or not all(isinstance(o, int) and o >= 0 for o in offsets)
        ):
            raise FormatError(f"{path}: tensor {name!r} has invalid data_offsets {offsets!r}")
        begin, end = offsets
        if begin > end or end > len(buffer):
            raise FormatError(
                f"{path}: tensor {name!r} offsets [{begin}, {end}) out of bounds "
                f"for a {len(buffer)}-byte buffer"
            )
        expected = element_size(dtype) * math.prod(shape)
        if end - begin != expected:
            raise FormatError(
                f"{path}: tensor {name!r} spans {end - begin} bytes, expected {expected}"
            )
        spans.append((begin, end, name))
        ckpt.add(
            TensorRecord(
                name=name, dtype=dtype, shape=tuple(shape), data=bytes(buffer[begin:end])
            )
        )

    # The buffer must be tiled exactly: overlaps hide data, gaps smuggle it.
    cursor = 0
    for begin, end, name in sorted(spans):
        if begin < cursor:
            raise FormatError(f"{path}: tensor {name!r} overlaps the previous span")
        if begin > cursor:
            raise FormatError(f"{path}: {begin - cursor} unaccounted bytes before {name!r}")
        cursor = end
    if cursor != len(buffer):
        raise FormatError(
            f"{path}: {len(buffer) - cursor} trailing bytes beyond the last tensor"
        )
    return ckpt


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Write the container; ``load_checkpoint(save_checkpoint(x))`` is exact."""
    header: dict[str, object] = {}
    if ckpt.metadata:
        header["__metadata__"] = dict(ckpt.metadata)
    cursor = 0
    chunks: list[bytes] = []
    for name, record in ckpt.tensors.items():
        end = cursor + len(record.data)
        header[name] = {
            "dtype": record.dtype,
            "shape": list(record.shape),
            "data_offsets": [cursor, end],
        }
        chunks.append(record.data)
        cursor = end

    encoded = json.dumps(header, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    pad = (8 - len(encoded) % 8) % 8
    encoded += b" " * pad
    try:
        atomic_write_bytes(path, struct.pack("<Q", len(encoded)) + encoded + b"".join(chunks))
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc
