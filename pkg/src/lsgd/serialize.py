"""Versioned binary model files.

Layout (all integers little-endian):

    magic  b"LSGM"
    u16    format version (currently 1)
    u32    n_dims
    u32    n_classes
    u32    n_members
    i64[n_classes]  label_map (internal id -> original label)
    per member:
        i64  block_id        u64  n_points        u32  k_requested
        u32  n_locals
        f64  lam             f64  eta
        u32  epochs          u8   schedule (0 constant, 1 inverse-scaling)
        u64  seed
        per local model:
            u64  train_count
            u32  n_local_classes
            i64[n_local_classes]  class ids
            f32[n_dims]           center
            f32[n_local_classes * n_dims]  planes, row-major

Serialization is a pure function of the model, so saving twice yields
identical bytes; writes go to a temp file and are renamed into place.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile

import numpy as np

from .dataio import DataFormatError
from .ensemble import KSgdModel, LocalModel
from .incremental import BlockProvenance, IncKSgdModel
from .linear import OvrModel, SgdParams

MODEL_MAGIC = b"LSGM"
MODEL_VERSION = 1

_SCHEDULE_CODE = {"constant": 0, "inverse-scaling": 1}
_SCHEDULE_NAME = {v: k for k, v in _SCHEDULE_CODE.items()}


def model_to_bytes(model: IncKSgdModel) -> bytes:
    out = io.BytesIO()
    out.write(MODEL_MAGIC)
    out.write(struct.pack("<HIII", MODEL_VERSION, model.n_dims, model.n_classes, model.n_members))
    out.write(np.asarray(model.label_map, dtype="<i8").tobytes())
    for member, prov in zip(model.members, model.provenance):
        params = member.params
        out.write(
            struct.pack(
                "<qQIIddIBQ",
                prov.block_id,
                prov.n_points,
                prov.k,
                len(member.local_models),
                params.lam,
                params.eta,
                params.epochs,
                _SCHEDULE_CODE[params.schedule],
                params.seed,
            )
        )
        for lm in member.local_models:
            ids = np.asarray(lm.model.class_ids, dtype="<i8")
            out.write(struct.pack("<QI", lm.train_count, ids.size))
            out.write(ids.tobytes())
            out.write(np.ascontiguousarray(lm.center, dtype="<f4").tobytes())
            out.write(np.ascontiguousarray(lm.model.planes, dtype="<f4").tobytes())
    return out.getvalue()


def save_model(model: IncKSgdModel, path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = os.fspath(path)
    payload = model_to_bytes(model)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=".lsgm-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    """Tracks the byte offset so corruption errors can name it."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise DataFormatError(f"{self.path}: model file truncated at byte {len(self.data)} (needed {self.offset + n})")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def bytes_to_model(data: bytes, path: str = "<bytes>") -> IncKSgdModel:
    r = _Reader(data, path)
    magic = r.take(4)
    if magic != MODEL_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
    (version,) = r.unpack("<H")
    if version != MODEL_VERSION:
        raise DataFormatError(f"{path}: unsupported model format version {version}; this build reads version {MODEL_VERSION}")
    n_dims, n_classes, n_members = r.unpack("<III")
    if n_dims < 1 or n_classes < 1 or n_members < 1:
        raise DataFormatError(f"{path}: invalid counts at byte {r.offset}")
    label_map = r.array("<i8", n_classes)
    members = []
    provenance = []
    for _ in range(n_members):
        block_id, n_points, k_req, n_locals, lam, eta, epochs, sched, seed = r.unpack("<qQIIddIBQ")
        if sched not in _SCHEDULE_NAME:
            raise DataFormatError(f"{path}: unknown schedule code {sched} at byte {r.offset}")
        if n_locals < 1:
            raise DataFormatError(f"{path}: member with no local models at byte {r.offset}")
        params = SgdParams(lam=lam, eta=eta, epochs=epochs, seed=seed, schedule=_SCHEDULE_NAME[sched])
        local_models = []
        for _ in range(n_locals):
            train_count, p_local = r.unpack("<QI")
            if p_local < 1:
                raise DataFormatError(f"{path}: local model with no classes at byte {r.offset}")
            ids = r.array("<i8", p_local)
            center = r.array("<f4", n_dims)
            planes = r.array("<f4", p_local * n_dims).reshape(p_local, n_dims)
            local_models.append(LocalModel(center, OvrModel(ids, planes), int(train_count)))
        members.append(KSgdModel(tuple(local_models), int(k_req), params))
        provenance.append(BlockProvenance(int(block_id), int(n_points), int(k_req)))
    if r.offset != len(data):
        raise DataFormatError(f"{path}: {len(data) - r.offset} trailing bytes at byte {r.offset}")
    return IncKSgdModel(tuple(members), int(n_dims), int(n_classes), label_map, tuple(provenance))


def load_model(path) -> IncKSgdModel:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    return bytes_to_model(data, path)
