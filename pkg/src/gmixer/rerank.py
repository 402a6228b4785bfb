"""Second-stage re-ranking with explicit include/exclude semantics.

Each stage-1 candidate is rescored as

    final = s_m + s_lambda + delta

where s_m is the cosine between the modification-text embedding and the
candidate image, s_lambda is the candidate's normalized stage-1 score,
and delta rewards suppressing excluded attributes while penalizing weak
alignment with included ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError
from .expansion import CandidateSet
from .geometry import cosine
from .store import EmbeddingStore


class DeltaVariant(str, Enum):
    DEFAULT = "default"
    IN_VARIANT = "in"
    EX_VARIANT = "ex"
    OFF = "off"


def _relu(x: float) -> float:
    return x if x > 0.0 else 0.0


def delta(s_lambda: float, s_in: float, s_ex: float, variant: DeltaVariant) -> float:
    """Include/exclude adjustment term.

    default:  ReLU(s_lambda - s_ex) - ReLU(s_lambda - s_in)
    in:       ReLU(s_lambda - s_ex) + ReLU(s_in - s_lambda)
    ex:       -ReLU(s_ex - s_lambda) - ReLU(s_lambda - s_in)
    off:      0
    """
    for name, val in (("s_lambda", s_lambda), ("s_in", s_in), ("s_ex", s_ex)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val}")
    if variant == DeltaVariant.DEFAULT:
        return _relu(s_lambda - s_ex) - _relu(s_lambda - s_in)
    if variant == DeltaVariant.IN_VARIANT:
        return _relu(s_lambda - s_ex) + _relu(s_in - s_lambda)
    if variant == DeltaVariant.EX_VARIANT:
        return -_relu(s_ex - s_lambda) - _relu(s_lambda - s_in)
    return 0.0


@dataclass(frozen=True)
class QueryInstance:
    """One composed query with all five embeddings resolved."""

    query_id: str
    ref_embedding: np.ndarray
    mod_text_embedding: np.ndarray
    target_desc_embedding: np.ndarray
    include_embedding: np.ndarray
    exclude_embedding: np.ndarray


@dataclass(frozen=True)
class RankedResult:
    id: str
    final_score: float
    s_m: float
    s_lambda: float
    s_in: float
    s_ex: float
    delta: float


def rerank(
    candidates: CandidateSet,
    query: QueryInstance,
    store: EmbeddingStore,
    variant: DeltaVariant = DeltaVariant.DEFAULT,
    use_s_m: bool = True,
    use_s_lambda: bool = True,
) -> list[RankedResult]:
    """Re-score and re-order a candidate set.

    Never adds or removes candidates. Sorting is by descending final
    score, ties by ascending bundle position (the same determinism rule
    the store uses).
    """
    results = []
    for cand in candidates.hits:
        if cand.id not in store:
            raise ConsistencyError(f"candidate {cand.id!r} missing from store")
        v = store.vector(cand.id)
        s_m = cosine(query.mod_text_embedding, v)
        s_in = cosine(query.include_embedding, v)
        s_ex = cosine(query.exclude_embedding, v)
        d = delta(cand.s_lambda, s_in, s_ex, variant)
        final = (s_m if use_s_m else 0.0) + (cand.s_lambda if use_s_lambda else 0.0) + d
        results.append(
            RankedResult(
                id=cand.id,
                final_score=final,
                s_m=s_m,
                s_lambda=cand.s_lambda,
                s_in=s_in,
                s_ex=s_ex,
                delta=d,
            )
        )
    results.sort(key=lambda r: (-r.final_score, store.position(r.id)))
    return results
