"""Dataset ingestion and block splitting.

Two on-disk dataset formats:

sparse text   one point per line, ``<label> <idx>:<val> ...`` with 1-based
              strictly ascending indices; the label may be omitted for
              prediction input. Values round-trip float32 exactly.

dense binary  magic ``LSGD`` (4 bytes), version u16=1, n_points u64,
              n_dims u32, n_classes u32, then per point a u32 label followed
              by n_dims float32 values. All integers little-endian. Fixed
              record size gives O(1) seek to any point index.

Readers stream one record at a time; split_blocks assembles bounded blocks so
at most one block of data is ever buffered here.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

DATA_MAGIC = b"LSGD"
DATA_VERSION = 1
_DATA_HEADER = struct.Struct("<4sHQII")  # magic, version, n_points, n_dims, n_classes


class DataFormatError(ValueError):
    """A file does not match its declared format; message carries context."""


@dataclass(frozen=True)
class DatasetHeader:
    n_points: int
    n_dims: int
    n_classes: int

    def __post_init__(self) -> None:
        if self.n_points < 1 or self.n_dims < 1 or self.n_classes < 1:
            raise ValueError("header counts must all be positive")
        if self.n_classes > self.n_points:
            raise ValueError(f"n_classes {self.n_classes} exceeds n_points {self.n_points}")

    @property
    def record_size(self) -> int:
        return 4 + 4 * self.n_dims


@dataclass(frozen=True)
class BlockSpec:
    block_size: int
    ordering: str = "file-order"

    def __post_init__(self) -> None:
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")
        if self.ordering != "file-order":
            raise ValueError(f"unknown ordering {self.ordering!r}")


@dataclass(frozen=True)
class LabeledPoint:
    features: np.ndarray  # (n,) float32
    label: int | None  # None only in unlabeled prediction input


@dataclass(frozen=True)
class DataBlock:
    block_id: int
    features: np.ndarray  # (B, n) float32
    labels: np.ndarray  # (B,) int64

    @property
    def n_points(self) -> int:
        return int(self.features.shape[0])


def block_size_for_budget(memory_budget: int, n_dims: int) -> int:
    """Points per block so a block of records fits the byte budget."""
    size = memory_budget // (4 * (n_dims + 1))
    if size < 1:
        raise ValueError(f"memory budget {memory_budget} too small for {n_dims}-dim records")
    return size


# ---------------------------------------------------------------------------
# sparse text


def _parse_sparse_line(line: str, path: str, lineno: int) -> tuple[int | None, list[tuple[int, float]]]:
    tokens = line.split()
    label: int | None = None
    start = 0
    if tokens and ":" not in tokens[0]:
        try:
            label = int(tokens[0])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: bad label {tokens[0]!r}") from None
        start = 1
    pairs: list[tuple[int, float]] = []
    prev = 0
    for tok in tokens[start:]:
        idx_s, sep, val_s = tok.partition(":")
        if not sep:
            raise DataFormatError(f"{path}:{lineno}: expected idx:val, got {tok!r}")
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: bad pair {tok!r}") from None
        if idx < 1:
            raise DataFormatError(f"{path}:{lineno}: indices are 1-based, got {idx}")
        if idx <= prev:
            raise DataFormatError(f"{path}:{lineno}: indices must be strictly ascending ({prev} then {idx})")
        prev = idx
        pairs.append((idx, val))
    return label, pairs


def scan_sparse_text(path) -> tuple[int, int, np.ndarray]:
    """One pass over a sparse file: (n_points, max_index, sorted unique labels)."""
    path = os.fspath(path)
    n_points = 0
    max_idx = 0
    labels: set[int] = set()
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            label, pairs = _parse_sparse_line(line, path, lineno)
            n_points += 1
            if label is not None:
                labels.add(label)
            if pairs:
                max_idx = max(max_idx, pairs[-1][0])
    return n_points, max_idx, np.array(sorted(labels), dtype=np.int64)


def iter_sparse_text(path, n_dims: int, require_labels: bool = True) -> Iterator[LabeledPoint]:
    """Stream a sparse file densified to n_dims columns; labels stay in the
    file's own vocabulary (no remapping here)."""
    path = os.fspath(path)
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            label, pairs = _parse_sparse_line(line, path, lineno)
            if label is None and require_labels:
                raise DataFormatError(f"{path}:{lineno}: missing label")
            feats = np.zeros(n_dims, dtype=np.float32)
            for idx, val in pairs:
                if idx > n_dims:
                    raise DataFormatError(f"{path}:{lineno}: index {idx} exceeds dimensionality {n_dims}")
                feats[idx - 1] = np.float32(val)
            yield LabeledPoint(feats, label)


def read_sparse_text(path, n_dims: int | None = None) -> tuple[DatasetHeader, np.ndarray, Iterator[LabeledPoint]]:
    """Training-facing sparse reader.

    Scans once to size the dataset and collect the label vocabulary, then
    streams points with labels remapped to 0-based contiguous ids. Returns
    (header, label_map, stream) where label_map[i] is the original label of
    internal id i.
    """
    path = os.fspath(path)
    n_points, max_idx, label_map = scan_sparse_text(path)
    if n_points == 0:
        raise DataFormatError(f"{path}: no data")
    if label_map.size == 0:
        raise DataFormatError(f"{path}: no labels present, cannot train")
    dims = n_dims if n_dims is not None else max_idx
    if dims < max_idx:
        raise DataFormatError(f"{path}: declared dimensionality {dims} below max index {max_idx}")
    if dims < 1:
        raise DataFormatError(f"{path}: no feature indices and no declared dimensionality")
    to_id = {int(orig): i for i, orig in enumerate(label_map)}

    def stream() -> Iterator[LabeledPoint]:
        for pt in iter_sparse_text(path, dims, require_labels=True):
            yield LabeledPoint(pt.features, to_id[pt.label])

    header = DatasetHeader(n_points, dims, label_map.size)
    return header, label_map, stream()


def format_value(v: float) -> str:
    """Shortest decimal that parses back to the same float32."""
    return str(np.float32(v))


def write_sparse_text(path, features, labels=None) -> None:
    """Write rows sparsely (zeros omitted); labels, if given, are written
    verbatim (original vocabulary)."""
    feats = np.asarray(features, dtype=np.float32)
    if feats.ndim != 2:
        raise ValueError("features must be a 2-D array")
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (feats.shape[0],):
            raise ValueError("one label per row required")
    with open(os.fspath(path), "w", encoding="ascii") as fh:
        for i in range(feats.shape[0]):
            parts = [] if labels is None else [str(int(labels[i]))]
            idx = np.flatnonzero(feats[i])
            parts.extend(f"{j + 1}:{format_value(feats[i, j])}" for j in idx)
            fh.write(" ".join(parts) + "\n")


# ---------------------------------------------------------------------------
# dense binary


def read_dense_header(path) -> DatasetHeader:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        return _read_header(fh, path)


def _read_header(fh, path: str) -> DatasetHeader:
    raw = fh.read(_DATA_HEADER.size)
    if len(raw) < _DATA_HEADER.size:
        raise DataFormatError(f"{path}: truncated header at byte {len(raw)}")
    magic, version, n_points, n_dims, n_classes = _DATA_HEADER.unpack(raw)
    if magic != DATA_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {DATA_MAGIC!r}")
    if version != DATA_VERSION:
        raise DataFormatError(f"{path}: unsupported dataset format version {version}; this build reads version {DATA_VERSION}")
    try:
        return DatasetHeader(n_points, n_dims, n_classes)
    except ValueError as exc:
        raise DataFormatError(f"{path}: invalid header: {exc}") from None


def iter_dense_binary(path, start: int = 0, count: int | None = None) -> Iterator[LabeledPoint]:
    """Stream records [start, start+count) in file order. Seeks in O(1) via
    the fixed record size."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        header = _read_header(fh, path)
        if not 0 <= start <= header.n_points:
            raise ValueError(f"start {start} out of range for {header.n_points} points")
        n = header.n_points - start if count is None else min(count, header.n_points - start)
        rec = header.record_size
        fh.seek(_DATA_HEADER.size + start * rec)
        for i in range(n):
            raw = fh.read(rec)
            if len(raw) < rec:
                offset = _DATA_HEADER.size + (start + i) * rec + len(raw)
                raise DataFormatError(f"{path}: truncated record at byte {offset}")
            (label,) = struct.unpack_from("<I", raw)
            if label >= header.n_classes:
                offset = _DATA_HEADER.size + (start + i) * rec
                raise DataFormatError(f"{path}: label {label} out of range at byte {offset}")
            feats = np.frombuffer(raw, dtype="<f4", offset=4).astype(np.float32, copy=True)
            yield LabeledPoint(feats, int(label))


def read_dense_binary(path) -> tuple[DatasetHeader, Iterator[LabeledPoint]]:
    header = read_dense_header(path)
    return header, iter_dense_binary(path)


def write_dense_binary(path, features, labels, n_classes: int | None = None) -> None:
    feats = np.ascontiguousarray(features, dtype=np.float32)
    labs = np.asarray(labels, dtype=np.int64)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-D array")
    if labs.shape != (feats.shape[0],):
        raise ValueError("one label per row required")
    if labs.min() < 0:
        raise ValueError("dense binary labels must be non-negative ids")
    p = n_classes if n_classes is not None else int(labs.max()) + 1
    header = DatasetHeader(feats.shape[0], feats.shape[1], p)
    if labs.max() >= p:
        raise ValueError(f"label {labs.max()} out of range for {p} classes")
    with open(os.fspath(path), "wb") as fh:
        fh.write(_DATA_HEADER.pack(DATA_MAGIC, DATA_VERSION, header.n_points, header.n_dims, header.n_classes))
        buf = io.BytesIO()
        for i in range(feats.shape[0]):
            buf.write(struct.pack("<I", int(labs[i])))
            buf.write(feats[i].astype("<f4").tobytes())
            if buf.tell() > (1 << 22):
                fh.write(buf.getvalue())
                buf = io.BytesIO()
        fh.write(buf.getvalue())


# ---------------------------------------------------------------------------
# blocks


def split_blocks(source: Iterable[LabeledPoint], spec: BlockSpec, n_dims: int | None = None) -> Iterator[DataBlock]:
    """Group a point stream into file-order blocks of spec.block_size points
    (last one may be short). Exactly one block is buffered at a time."""
    stream = iter(source)
    try:
        first = next(stream)
    except StopIteration:
        raise DataFormatError("no data: empty point source") from None
    dims = n_dims if n_dims is not None else int(first.features.shape[0])

    feats = np.empty((spec.block_size, dims), dtype=np.float32)
    labels = np.empty(spec.block_size, dtype=np.int64)
    fill = 0
    block_id = 0

    def put(pt: LabeledPoint) -> None:
        nonlocal fill
        if pt.features.shape[0] != dims:
            raise DataFormatError(f"point with {pt.features.shape[0]} dims in a {dims}-dim stream")
        feats[fill] = pt.features
        labels[fill] = -1 if pt.label is None else pt.label
        fill += 1

    put(first)
    for pt in stream:
        if fill == spec.block_size:
            yield DataBlock(block_id, feats[:fill].copy(), labels[:fill].copy())
            block_id += 1
            fill = 0
        put(pt)
    yield DataBlock(block_id, feats[:fill].copy(), labels[:fill].copy())


def array_blocks(features, labels, block_size: int, start_id: int = 0) -> Iterator[DataBlock]:
    """Blocks over in-memory arrays; each block is an independent copy."""
    feats = np.asarray(features, dtype=np.float32)
    labs = np.asarray(labels, dtype=np.int64)
    if feats.shape[0] == 0:
        raise DataFormatError("no data: empty arrays")
    spec = BlockSpec(block_size)
    for i, lo in enumerate(range(0, feats.shape[0], spec.block_size)):
        hi = lo + spec.block_size
        yield DataBlock(start_id + i, feats[lo:hi].copy(), labs[lo:hi].copy())
