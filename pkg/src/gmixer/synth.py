"""Synthetic corpus generator for desk-scale pipeline checks.

Each query plants its target on the geodesic between a reference-image
vector and a text-anchor vector at a hidden ratio, perturbed by Gaussian
noise and renormalized. Queries are grouped around shared text anchors,
and each group carries a cluster of text-aligned decoys: candidates that
sit very close to the text arm but are not the target. Those decoys are
what make single-ratio retrieval fragile and give the include/exclude
re-ranking something to filter, so pipeline-level comparisons (range
grid vs. fixed ratio, re-ranking on vs. off) become measurable without
any real dataset.

Everything is seed-deterministic and written in the same GMXB / JSON
formats the engine consumes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, GmixerError
from .geometry import THETA_MIN, angle_between, normalize, slerp
from .store import write_bundle

MAX_RESAMPLE_ATTEMPTS = 100

TEXT_ROLES = ("mod_text", "target_desc", "include", "exclude")


@dataclass(frozen=True)
class SynthSpec:
    dim: int = 64
    n_images: int = 500
    n_queries: int = 100
    noise_sigma: float = 0.05
    planted_lambda_low: float = 0.65
    planted_lambda_high: float = 0.95
    seed: int = 0
    # correlation targets for the auxiliary embeddings
    mod_text_align: float = 0.55
    include_align: float = 0.8
    exclude_align: float = 0.8
    # text-aligned decoy clusters
    queries_per_group: int = 12
    decoys_per_group: int = 12
    decoy_align_low: float = 0.96
    decoy_align_high: float = 0.985
    subset_size: int = 10

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise InvalidConfigError("noise_sigma must be >= 0")
        if not (1 <= self.n_queries <= self.n_images):
            raise InvalidConfigError("need n_images >= n_queries >= 1")
        if not (0.0 <= self.planted_lambda_low <= self.planted_lambda_high <= 1.0):
            raise InvalidConfigError("planted lambda range must sit inside [0, 1]")

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        with open(path) as fh:
            return cls(**json.load(fh))


@dataclass
class SynthPaths:
    image_bundle: Path
    text_bundles: dict[str, Path]
    queries: Path
    ground_truth: Path
    manifest: Path = field(default=None)


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return normalize(rng.standard_normal(dim))


def _correlate(rng: np.random.Generator, base: np.ndarray, target_cos: float) -> np.ndarray:
    """Unit vector whose cosine with `base` is exactly `target_cos`."""
    raw = rng.standard_normal(base.shape[0])
    perp = raw - np.dot(raw, base) * base
    n = np.linalg.norm(perp)
    if n == 0.0:
        perp = np.roll(base, 1) - np.dot(np.roll(base, 1), base) * base
        n = np.linalg.norm(perp)
    perp /= n
    return target_cos * base + np.sqrt(max(0.0, 1.0 - target_cos**2)) * perp


def _sample_pair(rng: np.random.Generator, dim: int) -> tuple[np.ndarray, np.ndarray]:
    for _ in range(MAX_RESAMPLE_ATTEMPTS):
        a, b = _random_unit(rng, dim), _random_unit(rng, dim)
        theta = angle_between(a, b)
        if THETA_MIN < theta < np.pi - THETA_MIN:
            return a, b
    raise GmixerError("could not sample a non-degenerate vector pair")


def generate(spec: SynthSpec, out_dir) -> SynthPaths:
    """Write image bundle, four text bundles, queries file, and ground
    truth under out_dir. Fully determined by spec.seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    n_groups = max(1, spec.n_queries // spec.queries_per_group)
    anchors = [_random_unit(rng, spec.dim) for _ in range(n_groups)]

    image_ids: list[str] = []
    image_rows: list[np.ndarray] = []

    def add_image(prefix: str, vec: np.ndarray) -> str:
        img_id = f"{prefix}_{len(image_ids):05d}"
        image_ids.append(img_id)
        image_rows.append(vec)
        return img_id

    # decoy clusters near each group's text anchor
    group_decoys: list[list[str]] = []
    for g, anchor in enumerate(anchors):
        ids = []
        for _ in range(spec.decoys_per_group):
            c = rng.uniform(spec.decoy_align_low, spec.decoy_align_high)
            ids.append(add_image("decoy", _correlate(rng, anchor, c)))
        group_decoys.append(ids)

    budget = spec.n_images - len(image_ids) - spec.n_queries
    if budget < 1:
        raise InvalidConfigError(
            "n_images too small for the requested queries and decoy clusters"
        )
    distractor_ids = [
        add_image("img", _random_unit(rng, spec.dim)) for _ in range(budget)
    ]

    text_vecs: dict[str, list[np.ndarray]] = {role: [] for role in TEXT_ROLES}
    text_ids: dict[str, list[str]] = {role: [] for role in TEXT_ROLES}
    query_lines = []
    ground_truth = {}

    for q in range(spec.n_queries):
        qid = f"q{q:04d}"
        group = q % n_groups
        f_t = _correlate(rng, anchors[group], 0.995)
        ref_id = distractor_ids[q % len(distractor_ids)]
        f_i = image_rows[image_ids.index(ref_id)]
        theta = angle_between(f_t, f_i)
        attempts = 0
        while not (THETA_MIN < theta < np.pi - THETA_MIN):
            attempts += 1
            if attempts > MAX_RESAMPLE_ATTEMPTS:
                raise GmixerError(f"degenerate geometry for query {qid}")
            f_t = _correlate(rng, anchors[group], 0.995)
            theta = angle_between(f_t, f_i)

        lam_star = rng.uniform(spec.planted_lambda_low, spec.planted_lambda_high)
        target = slerp(f_t, f_i, lam_star)
        if spec.noise_sigma > 0:
            target = normalize(target + rng.normal(0.0, spec.noise_sigma, spec.dim))
        target_id = add_image("target", target)

        decoy_ids = group_decoys[group]
        hard_negative = image_rows[image_ids.index(decoy_ids[0])]

        per_role = {
            "mod_text": _correlate(rng, target, spec.mod_text_align),
            "target_desc": f_t,
            "include": _correlate(rng, target, spec.include_align),
            "exclude": _correlate(rng, hard_negative, spec.exclude_align),
        }
        for role in TEXT_ROLES:
            tid = f"{qid}_{role}"
            text_ids[role].append(tid)
            text_vecs[role].append(per_role[role])

        query_lines.append(
            {
                "query_id": qid,
                "reference_id": ref_id,
                "mod_text_id": f"{qid}_mod_text",
                "target_desc_id": f"{qid}_target_desc",
                "include_id": f"{qid}_include",
                "exclude_id": f"{qid}_exclude",
            }
        )

        gallery = [target_id] + decoy_ids[: spec.subset_size - 1]
        ground_truth[qid] = {"targets": [target_id], "subset": gallery}

    image_path = out / "images.gmxb"
    write_bundle(image_path, image_ids, np.vstack(image_rows))
    text_paths = {}
    for role in TEXT_ROLES:
        p = out / f"text_{role}.gmxb"
        write_bundle(p, text_ids[role], np.vstack(text_vecs[role]))
        text_paths[role] = p

    queries_path = out / "queries.jsonl"
    with open(queries_path, "w") as fh:
        for line in query_lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    gt_path = out / "ground_truth.json"
    with open(gt_path, "w") as fh:
        json.dump(ground_truth, fh, sort_keys=True, indent=2)

    manifest_path = out / "manifest.json"
    manifest = {
        "image_bundle": str(image_path),
        "text_bundles": {role: str(p) for role, p in text_paths.items()},
        "queries": str(queries_path),
        "ground_truth": str(gt_path),
        "output": str(out / "rankings.jsonl"),
        "synth_spec": asdict(spec),
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)

    return SynthPaths(
        image_bundle=image_path,
        text_bundles=text_paths,
        queries=queries_path,
        ground_truth=gt_path,
        manifest=manifest_path,
    )
