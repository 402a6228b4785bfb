"""First-stage candidate expansion: compose per-ratio queries along the
image-text geodesic, retrieve top-K for each ratio, min-max normalize the
per-ratio score pools, and union with max-aggregation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidConfigError
from .geometry import slerp
from .store import EmbeddingStore

GRID_DECIMALS = 6


def build_grid(start: float, end: float, step: float) -> list[float]:
    """Ascending mix-ratio grid from start to end; end is always included
    even when it is not an exact multiple of step.

    Values are rounded to 6 decimals so accumulated float drift cannot
    split ratios that should coincide.
    """
    if step <= 0:
        raise InvalidConfigError(f"step must be positive, got {step}")
    if not (0.0 <= start <= end <= 1.0):
        raise InvalidConfigError(f"need 0 <= start <= end <= 1, got [{start}, {end}]")
    n = int((end - start) / step + 1e-9)
    grid = [round(start + i * step, GRID_DECIMALS) for i in range(n + 1)]
    tail = round(end, GRID_DECIMALS)
    if grid[-1] != tail:
        grid.append(tail)
    return grid


def minmax_normalize(scores: list[float]) -> list[float]:
    """Map scores to [0, 1] via (x - min) / (max - min).

    A constant pool maps to all 1.0: an entry that tied the maximum must
    not be erased by normalization.
    """
    if not scores:
        raise InvalidConfigError("cannot normalize an empty score list")
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [1.0] * len(scores)
    span = hi - lo
    return [(x - lo) / span for x in scores]


@dataclass(frozen=True)
class RetrievalConfig:
    """Stage-1 knobs. Defaults follow the reference setup: ratio grid
    0.7 to 1.0 in steps of 0.05, 100 hits per ratio."""

    grid_start: float = 0.7
    grid_end: float = 1.0
    grid_step: float = 0.05
    k_per_lambda: int = 100
    exclude_reference: bool = False

    def __post_init__(self):
        if self.k_per_lambda < 1:
            raise InvalidConfigError(f"k_per_lambda must be >= 1, got {self.k_per_lambda}")

    def grid(self) -> list[float]:
        return build_grid(self.grid_start, self.grid_end, self.grid_step)


@dataclass
class CandidateHit:
    id: str
    s_lambda: float            # max over ratios of the per-ratio normalized score
    best_lambda: float         # ratio attaining the max (ties -> smaller ratio)
    raw_by_lambda: dict[float, float] = field(default_factory=dict)


@dataclass
class CandidateSet:
    hits: list[CandidateHit]
    config: RetrievalConfig

    def ids(self) -> list[str]:
        return [h.id for h in self.hits]


def expand(
    f_text,
    f_image,
    store: EmbeddingStore,
    config: RetrievalConfig,
    reference_id: str | None = None,
) -> CandidateSet:
    """Run the full stage-1 expansion for one query.

    For each ratio in the grid the composed query is slerped, its top-K
    retrieved, and that ratio's K raw cosines min-max normalized as one
    pool. Candidates seen at several ratios keep the maximum normalized
    score. Output is sorted by descending s_lambda, ties by ascending
    bundle position.

    When config.exclude_reference is set and reference_id given, the
    reference image never enters any per-ratio pool (one extra hit is
    fetched so each pool still holds K scores when possible).
    """
    grid = config.grid()
    k = config.k_per_lambda
    exclude = config.exclude_reference and reference_id is not None

    by_id: dict[str, CandidateHit] = {}
    for lam in grid:
        m = slerp(f_text, f_image, lam)
        hits = store.top_k(m, k + 1 if exclude else k)
        if exclude:
            hits = [h for h in hits if h.id != reference_id][:k]
        if not hits:
            continue
        normed = minmax_normalize([h.score for h in hits])
        for h, ns in zip(hits, normed):
            cand = by_id.get(h.id)
            if cand is None:
                by_id[h.id] = CandidateHit(
                    id=h.id, s_lambda=ns, best_lambda=lam, raw_by_lambda={lam: h.score}
                )
            else:
                cand.raw_by_lambda[lam] = h.score
                if ns > cand.s_lambda:
                    cand.s_lambda = ns
                    cand.best_lambda = lam

    ordered = sorted(
        by_id.values(), key=lambda c: (-c.s_lambda, store.position(c.id))
    )
    return CandidateSet(hits=ordered, config=config)
