"""Manifest-driven end-to-end runs: load bundles, expand and re-rank
every query, write rankings and (optionally) an evaluation report.

All paths inside a manifest are resolved relative to the manifest file,
so run directories are relocatable.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DegenerateGeometryError, GmixerError, InvalidConfigError
from .expansion import RetrievalConfig, expand
from .metrics import GroundTruth, EvalReport, evaluate
from .rerank import DeltaVariant, QueryInstance, rerank
from .store import EmbeddingStore, load_bundle

TEXT_ROLES = ("mod_text", "target_desc", "include", "exclude")

ROLE_KEYS = {
    "mod_text": "mod_text_id",
    "target_desc": "target_desc_id",
    "include": "include_id",
    "exclude": "exclude_id",
}


@dataclass
class RunManifest:
    image_bundle: Path
    text_bundles: dict[str, Path]
    queries: Path
    output: Path
    ground_truth: Path | None = None
    report: Path | None = None
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    delta_variant: DeltaVariant = DeltaVariant.DEFAULT
    use_s_m: bool = True
    use_s_lambda: bool = True
    rerank_enabled: bool = True
    text_arm: str = "target_desc"   # which embedding drives the mixup text side
    workers: int = 1

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        with open(path) as fh:
            raw = json.load(fh)
        base = path.parent

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        missing = [k for k in ("image_bundle", "text_bundles", "queries", "output") if k not in raw]
        if missing:
            raise InvalidConfigError(f"manifest missing keys: {', '.join(missing)}")
        roles_missing = [r for r in TEXT_ROLES if r not in raw["text_bundles"]]
        if roles_missing:
            raise InvalidConfigError(
                f"manifest text_bundles missing roles: {', '.join(roles_missing)}"
            )
        retrieval = RetrievalConfig(**raw.get("retrieval", {}))
        text_arm = raw.get("text_arm", "target_desc")
        if text_arm not in ("target_desc", "mod_text"):
            raise InvalidConfigError(f"text_arm must be target_desc or mod_text, got {text_arm!r}")
        return cls(
            image_bundle=resolve(raw["image_bundle"]),
            text_bundles={r: resolve(p) for r, p in raw["text_bundles"].items() if r in TEXT_ROLES},
            queries=resolve(raw["queries"]),
            output=resolve(raw["output"]),
            ground_truth=resolve(raw["ground_truth"]) if raw.get("ground_truth") else None,
            report=resolve(raw["report"]) if raw.get("report") else None,
            retrieval=retrieval,
            delta_variant=DeltaVariant(raw.get("delta_variant", "default")),
            use_s_m=raw.get("use_s_m", True),
            use_s_lambda=raw.get("use_s_lambda", True),
            rerank_enabled=raw.get("rerank_enabled", True),
            text_arm=text_arm,
            workers=int(raw.get("workers", 1)),
        )

    def config_echo(self) -> dict:
        return {
            "retrieval": {
                "grid_start": self.retrieval.grid_start,
                "grid_end": self.retrieval.grid_end,
                "grid_step": self.retrieval.grid_step,
                "k_per_lambda": self.retrieval.k_per_lambda,
                "exclude_reference": self.retrieval.exclude_reference,
            },
            "delta_variant": self.delta_variant.value,
            "use_s_m": self.use_s_m,
            "use_s_lambda": self.use_s_lambda,
            "rerank_enabled": self.rerank_enabled,
            "text_arm": self.text_arm,
        }


def read_queries(path) -> list[dict]:
    queries = []
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidConfigError(f"queries line {n} is not JSON: {exc}")
            queries.append(rec)
    return queries


def read_ground_truth(path) -> dict[str, GroundTruth]:
    with open(path) as fh:
        raw = json.load(fh)
    out = {}
    for qid, rec in raw.items():
        out[qid] = GroundTruth(
            query_id=qid,
            targets=frozenset(rec["targets"]),
            subset=frozenset(rec["subset"]) if rec.get("subset") else None,
        )
    return out


def validate_manifest(manifest: RunManifest) -> list[str]:
    """Cross-check bundles, dimensions, and query references.

    Returns a list of human-readable issues; empty means clean.
    """
    issues: list[str] = []
    stores: dict[str, EmbeddingStore] = {}
    try:
        stores["image"] = load_bundle(manifest.image_bundle)
    except (GmixerError, OSError) as exc:
        issues.append(f"image bundle: {exc}")
    for role, path in manifest.text_bundles.items():
        try:
            stores[role] = load_bundle(path)
        except (GmixerError, OSError) as exc:
            issues.append(f"{role} bundle: {exc}")
    if issues:
        return issues

    dims = {name: s.dim for name, s in stores.items()}
    if len(set(dims.values())) > 1:
        issues.append(f"dimension mismatch across bundles: {dims}")

    try:
        queries = read_queries(manifest.queries)
    except (InvalidConfigError, OSError) as exc:
        return issues + [f"queries file: {exc}"]

    for rec in queries:
        qid = rec.get("query_id", "<missing query_id>")
        ref = rec.get("reference_id")
        if ref is None or ref not in stores["image"]:
            issues.append(f"query {qid}: reference_id {ref!r} not in image bundle")
        for role, key in ROLE_KEYS.items():
            tid = rec.get(key)
            if tid is None or tid not in stores[role]:
                issues.append(f"query {qid}: {role} id {tid!r} not in {role} bundle")

    if manifest.ground_truth is not None:
        try:
            gts = read_ground_truth(manifest.ground_truth)
        except (GmixerError, OSError, KeyError) as exc:
            return issues + [f"ground truth file: {exc}"]
        for qid, gt in gts.items():
            for t in gt.targets:
                if t not in stores["image"]:
                    issues.append(f"ground truth {qid}: target {t!r} not in image bundle")
    return issues


@dataclass
class RunResult:
    rankings: dict[str, list[str]]
    report: EvalReport | None
    query_errors: dict[str, str]


def _process_query(rec, manifest: RunManifest, image_store, text_stores):
    qid = rec["query_id"]
    f_i = image_store.vector(rec["reference_id"])
    embeddings = {
        role: text_stores[role].vector(rec[key]) for role, key in ROLE_KEYS.items()
    }
    f_t = embeddings[manifest.text_arm]
    candidates = expand(
        f_t, f_i, image_store, manifest.retrieval, reference_id=rec["reference_id"]
    )
    if not manifest.rerank_enabled:
        ids = candidates.ids()
        scores = [h.s_lambda for h in candidates.hits]
        return qid, ids, scores

    query = QueryInstance(
        query_id=qid,
        ref_embedding=f_i,
        mod_text_embedding=embeddings["mod_text"],
        target_desc_embedding=embeddings["target_desc"],
        include_embedding=embeddings["include"],
        exclude_embedding=embeddings["exclude"],
    )
    ranked = rerank(
        candidates,
        query,
        image_store,
        variant=manifest.delta_variant,
        use_s_m=manifest.use_s_m,
        use_s_lambda=manifest.use_s_lambda,
    )
    return qid, [r.id for r in ranked], [r.final_score for r in ranked]


def run(manifest: RunManifest) -> RunResult:
    """Execute the full pipeline for every query in the manifest.

    Per-query degenerate-geometry failures are recorded and the run
    continues; rankings are written in query-file order regardless of
    worker completion order.
    """
    image_store = load_bundle(manifest.image_bundle)
    text_stores = {role: load_bundle(p) for role, p in manifest.text_bundles.items()}
    queries = read_queries(manifest.queries)

    rankings: dict[str, list[str]] = {}
    scores: dict[str, list[float]] = {}
    query_errors: dict[str, str] = {}

    def safe(rec):
        try:
            return _process_query(rec, manifest, image_store, text_stores)
        except DegenerateGeometryError as exc:
            return rec["query_id"], None, str(exc)

    if manifest.workers > 1:
        with ThreadPoolExecutor(max_workers=manifest.workers) as pool:
            outcomes = list(pool.map(safe, queries))
    else:
        outcomes = [safe(rec) for rec in queries]

    manifest.output.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest.output, "w") as fh:
        for qid, ids, payload in outcomes:
            if ids is None:
                query_errors[qid] = payload
                continue
            rankings[qid] = ids
            scores[qid] = payload
            fh.write(
                json.dumps(
                    {"query_id": qid, "ranking": ids, "scores": payload},
                    sort_keys=True,
                )
                + "\n"
            )
    if query_errors:
        err_path = manifest.output.with_suffix(".errors.json")
        with open(err_path, "w") as fh:
            json.dump(query_errors, fh, sort_keys=True, indent=2)

    report = None
    if manifest.ground_truth is not None:
        gts = read_ground_truth(manifest.ground_truth)
        report = evaluate(rankings, gts, config_echo=manifest.config_echo())
        report.warnings.extend(
            f"query {qid!r} failed: {msg}" for qid, msg in sorted(query_errors.items())
        )
        report_path = manifest.report or manifest.output.parent / "eval_report.json"
        with open(report_path, "w") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)

    return RunResult(rankings=rankings, report=report, query_errors=query_errors)
