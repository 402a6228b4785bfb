"""Corpus encoding and query preparation.

encode_corpus walks an image folder and writes one GMXB bundle keyed by
file stem. prepare_queries reads annotation records (query_id,
reference_id, modification_text), obtains the caption triple per query,
encodes the four text roles into role-specific bundles, and writes the
queries file plus a failure sidecar. Output directories are directly
runnable by the retrieval engine's CLI via the emitted manifest.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .captions import CaptionError, make_caption_source
from .encoders import make_encoders
from .gmxb import write_bundle

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}

TEXT_ROLES = ("mod_text", "target_desc", "include", "exclude")


@dataclass(frozen=True)
class PrepConfig:
    dataset_root: Path
    output_dir: Path
    encoder_name: str = "hash"
    dim: int = 64
    caption_source: str = "mock"
    batch_size: int = 32
    annotations: Path | None = None


def encode_corpus(config: PrepConfig) -> Path:
    """Encode every readable image under dataset_root into images.gmxb."""
    image_enc, _ = make_encoders(config.encoder_name, config.dim)
    paths = sorted(
        p for p in Path(config.dataset_root).iterdir()
        if p.suffix.lower() in IMAGE_SUFFIXES
    )
    ids, rows = [], []
    for p in paths:
        try:
            vec = image_enc.encode(p)
        except OSError as exc:
            log.warning("skipping unreadable image %s: %s", p.name, exc)
            continue
        ids.append(p.stem)
        rows.append(vec)
    if not ids:
        raise ValueError(f"no encodable images under {config.dataset_root}")

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = out / "images.gmxb"
    write_bundle(bundle, ids, np.vstack(rows))
    return bundle


def prepare_queries(config: PrepConfig) -> dict:
    """Generate captions and text bundles for all annotated queries.

    Returns a summary dict with paths and counts. Queries whose caption
    generation fails are omitted from the queries file and recorded in
    failures.json.
    """
    if config.annotations is None:
        raise ValueError("prepare_queries needs an annotations file")
    with open(config.annotations) as fh:
        annotations = json.load(fh)

    _, text_enc = make_encoders(config.encoder_name, config.dim)
    source = make_caption_source(config.caption_source)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    text_ids = {role: [] for role in TEXT_ROLES}
    text_rows = {role: [] for role in TEXT_ROLES}
    query_lines = []
    caption_lines = []
    failures = {}

    for rec in annotations:
        qid = rec["query_id"]
        try:
            triple = source.generate(qid, rec["reference_id"], rec["modification_text"])
        except CaptionError as exc:
            failures[qid] = str(exc)
            continue
        caption_lines.append({"query_id": qid, **triple})
        role_text = {
            "mod_text": rec["modification_text"],
            "target_desc": triple["target_description"],
            "include": triple["include"],
            "exclude": triple["exclude"],
        }
        for role in TEXT_ROLES:
            text_ids[role].append(f"{qid}_{role}")
            text_rows[role].append(text_enc.encode(role_text[role]))
        query_lines.append(
            {
                "query_id": qid,
                "reference_id": rec["reference_id"],
                **{f"{role}_id": f"{qid}_{role}" for role in TEXT_ROLES},
            }
        )

    if not query_lines:
        raise ValueError("caption generation failed for every query")

    text_bundles = {}
    for role in TEXT_ROLES:
        p = out / f"text_{role}.gmxb"
        write_bundle(p, text_ids[role], np.vstack(text_rows[role]))
        text_bundles[role] = p

    queries_path = out / "queries.jsonl"
    with open(queries_path, "w") as fh:
        for line in query_lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    captions_path = out / "captions.jsonl"
    with open(captions_path, "w") as fh:
        for line in caption_lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    sidecar = out / "failures.json"
    with open(sidecar, "w") as fh:
        json.dump(failures, fh, sort_keys=True, indent=2)

    manifest_path = out / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(
            {
                "image_bundle": "images.gmxb",
                "text_bundles": {r: f"text_{r}.gmxb" for r in TEXT_ROLES},
                "queries": "queries.jsonl",
                "output": "rankings.jsonl",
            },
            fh,
            sort_keys=True,
            indent=2,
        )

    return {
        "queries": queries_path,
        "captions": captions_path,
        "text_bundles": text_bundles,
        "failures": sidecar,
        "manifest": manifest_path,
        "n_queries": len(query_lines),
        "n_failures": len(failures),
    }
