"""Writer for the GMXB embedding-bundle format consumed by the retrieval
engine. Kept self-contained on purpose: the binary layout is the contract
between the two components, so this module re-states it rather than
importing the engine.

Layout (little-endian): magic "GMXB", uint32 version (1), uint32 dim,
uint64 count, then per record: uint16 id length, UTF-8 id bytes,
dim float32 values.
"""
import struct

import numpy as np

MAGIC = b"GMXB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def write_bundle(path, ids, matrix) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix must be (len(ids), dim)")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, matrix.shape[1], len(ids)))
        for id_, row in zip(ids, matrix):
            raw = id_.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(row, dtype="<f4").tobytes())
