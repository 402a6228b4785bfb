"""Candidate database: identifier -> unit vector, backed by the GMXB
binary bundle format, answering exact cosine top-K queries by full scan.

GMXB layout (little-endian throughout):
    bytes 0-3    magic "GMXB"
    bytes 4-7    version, uint32, must be 1
    bytes 8-11   dim, uint32
    bytes 12-19  count, uint64
    then `count` records of:
        id_len   uint16
        id       id_len UTF-8 bytes
        vector   dim * float32
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BundleDataError, BundleFormatError, DimensionMismatchError

MAGIC = b"GMXB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")

# Vectors whose norm deviates from 1 by more than this are rejected as
# corrupt; smaller drift (32-bit storage of normalized floats) is silently
# renormalized.
NORM_REJECT_TOL = 0.01


@dataclass(frozen=True)
class ScoredId:
    id: str
    score: float


class EmbeddingStore:
    """Immutable id -> unit-vector map with exact cosine search.

    Entry order is the bundle file order; that order is the tie-breaking
    anchor for every ranking the pipeline produces.
    """

    def __init__(self, ids: list[str], matrix: np.ndarray):
        if len(ids) != matrix.shape[0]:
            raise ValueError("id list and matrix row count disagree")
        self.ids = list(ids)
        self.matrix = matrix.astype(np.float64, copy=False)
        self.dim = int(matrix.shape[1]) if matrix.ndim == 2 else 0
        self._index = {id_: pos for pos, id_ in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise BundleDataError("duplicate identifiers in store")

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index

    def position(self, id_: str) -> int:
        """Bundle-file position of an id (the determinism anchor)."""
        return self._index[id_]

    def vector(self, id_: str) -> np.ndarray:
        return self.matrix[self._index[id_]]

    def top_k(self, query, k: int) -> list[ScoredId]:
        """Exact top-k by descending cosine; ties broken by ascending
        bundle position. Returns min(k, len(store)) entries."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if len(self) == 0:
            return []
        q = np.asarray(query, dtype=np.float64)
        if q.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"query dim {q.shape[0]} vs store dim {self.dim}"
            )
        scores = self.matrix @ q
        # stable sort on negated scores preserves bundle order among ties
        order = np.argsort(-scores, kind="stable")[: min(k, len(self))]
        return [
            ScoredId(self.ids[i], float(np.clip(scores[i], -1.0, 1.0)))
            for i in order
        ]


def load_bundle(path) -> EmbeddingStore:
    """Read a GMXB file into an EmbeddingStore, renormalizing each vector.

    Raises BundleFormatError (with byte offset) on structural problems and
    BundleDataError (naming the record id) on non-finite, zero-norm,
    badly-scaled, or duplicate entries.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < _HEADER.size:
        raise BundleFormatError("file shorter than header", len(data))
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BundleFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise BundleFormatError(f"unsupported version {version}", 4)
    if dim == 0:
        raise BundleFormatError("dim must be positive", 8)

    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    off = _HEADER.size
    vec_bytes = 4 * dim
    for _ in range(count):
        if off + 2 > len(data):
            raise BundleFormatError(
                f"truncated: expected {count} records, got {len(ids)}", off
            )
        (id_len,) = struct.unpack_from("<H", data, off)
        off += 2
        if off + id_len + vec_bytes > len(data):
            raise BundleFormatError(
                f"truncated: expected {count} records, got {len(ids)}", off
            )
        entry_id = data[off : off + id_len].decode("utf-8")
        off += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += vec_bytes

        if not entry_id:
            raise BundleDataError("empty identifier", entry_id)
        if entry_id in seen:
            raise BundleDataError(f"duplicate id {entry_id!r}", entry_id)
        if not np.all(np.isfinite(vec)):
            raise BundleDataError(f"non-finite values in {entry_id!r}", entry_id)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise BundleDataError(f"zero vector for {entry_id!r}", entry_id)
        if abs(norm - 1.0) > NORM_REJECT_TOL:
            raise BundleDataError(
                f"norm {norm:.6f} of {entry_id!r} deviates beyond tolerance",
                entry_id,
            )
        seen.add(entry_id)
        ids.append(entry_id)
        rows.append(vec / norm)

    if off != len(data):
        raise BundleFormatError("trailing bytes after last record", off)

    matrix = np.vstack(rows) if rows else np.empty((0, dim))
    return EmbeddingStore(ids, matrix)


def write_bundle(path, ids: list[str], matrix: np.ndarray) -> None:
    """Write id/vector pairs as a GMXB file (float32 records)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix must be (len(ids), dim)")
    dim = matrix.shape[1]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, len(ids)))
        for id_, row in zip(ids, matrix):
            raw = id_.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(row, dtype="<f4").tobytes())
