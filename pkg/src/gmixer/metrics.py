"""Retrieval evaluation: Recall@K, mAP@K, and subset Recall@K.

Conventions (matching the common composed-retrieval benchmark tooling):
  - Recall@K is hit-based: 1.0 if any target sits in the first K
    positions, else 0.0; dataset value is the mean over queries.
  - AP@K sums precision@i over relevant positions i <= K and divides by
    min(#targets, K), so multi-target queries are handled.
  - Subset recall filters the ranking to a per-query gallery before
    applying Recall@K.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidConfigError


@dataclass(frozen=True)
class GroundTruth:
    query_id: str
    targets: frozenset[str]
    subset: frozenset[str] | None = None

    def __post_init__(self):
        if not self.targets:
            raise InvalidConfigError(f"query {self.query_id!r} has no targets")


@dataclass
class EvalReport:
    """Per-dataset metric table plus the configuration that produced it."""

    per_k: dict[str, float]
    n_queries: int
    warnings: list[str] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_k": self.per_k,
            "n_queries": self.n_queries,
            "warnings": self.warnings,
            "config_echo": self.config_echo,
        }


def recall_at_k(ranking: list[str], gt: GroundTruth, k: int) -> float:
    if k < 1:
        raise InvalidConfigError(f"k must be >= 1, got {k}")
    return 1.0 if any(r in gt.targets for r in ranking[:k]) else 0.0


def map_at_k(ranking: list[str], gt: GroundTruth, k: int) -> float:
    """Average precision at cutoff k, normalized by min(#targets, k)."""
    if k < 1:
        raise InvalidConfigError(f"k must be >= 1, got {k}")
    hits = 0
    ap = 0.0
    for i, r in enumerate(ranking[:k], start=1):
        if r in gt.targets:
            hits += 1
            ap += hits / i
    return ap / min(len(gt.targets), k)


def subset_recall_at_k(ranking: list[str], gt: GroundTruth, k: int) -> float:
    """Recall@k after restricting the ranking to the query's gallery."""
    if gt.subset is None:
        raise InvalidConfigError(f"query {gt.query_id!r} has no subset gallery")
    filtered = [r for r in ranking if r in gt.subset]
    return recall_at_k(filtered, gt, k)


def evaluate(
    rankings: dict[str, list[str]],
    ground_truth: dict[str, GroundTruth],
    recall_ks: list[int] = (1, 5, 10),
    map_ks: list[int] = (5, 10, 25, 50),
    subset_ks: list[int] = (1, 2, 3),
    config_echo: dict | None = None,
) -> EvalReport:
    """Dataset-level metrics over all ground-truth queries.

    Queries missing from `rankings` count as zero for every metric and
    are listed in the report warnings, never silently dropped.
    """
    warnings: list[str] = []
    n = len(ground_truth)
    if n == 0:
        raise InvalidConfigError("no ground-truth queries")

    sums: dict[str, float] = {}
    have_subset = all(gt.subset is not None for gt in ground_truth.values())
    for qid, gt in ground_truth.items():
        ranking = rankings.get(qid)
        if ranking is None:
            warnings.append(f"query {qid!r} missing from rankings; scored as zero")
            ranking = []
        for k in recall_ks:
            sums[f"recall@{k}"] = sums.get(f"recall@{k}", 0.0) + recall_at_k(ranking, gt, k)
        for k in map_ks:
            sums[f"map@{k}"] = sums.get(f"map@{k}", 0.0) + map_at_k(ranking, gt, k)
        if have_subset:
            for k in subset_ks:
                sums[f"subset_recall@{k}"] = sums.get(f"subset_recall@{k}", 0.0) + (
                    subset_recall_at_k(ranking, gt, k)
                )

    per_k = {name: total / n for name, total in sorted(sums.items())}
    return EvalReport(
        per_k=per_k, n_queries=n, warnings=warnings, config_echo=config_echo or {}
    )
