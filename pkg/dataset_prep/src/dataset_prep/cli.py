"""dataset-prep: encode image folders and prepare query bundles for the
retrieval engine.

    dataset-prep encode  --images DIR --out DIR [--dim N] [--encoder hash|clip]
    dataset-prep prepare --images DIR --annotations FILE --out DIR
                         [--captions mock|wire] [--dim N] [--encoder hash|clip]

`prepare` runs corpus encoding first, then captioning and text encoding,
leaving a manifest the engine's `validate`/`run` commands accept.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .prep import PrepConfig, encode_corpus, prepare_queries


def _config_from(args) -> PrepConfig:
    return PrepConfig(
        dataset_root=Path(args.images),
        output_dir=Path(args.out),
        encoder_name=args.encoder,
        dim=args.dim,
        caption_source=getattr(args, "captions", "mock"),
        annotations=Path(args.annotations) if getattr(args, "annotations", None) else None,
    )


def cmd_encode(args) -> int:
    bundle = encode_corpus(_config_from(args))
    print(f"wrote {bundle}")
    return 0


def cmd_prepare(args) -> int:
    config = _config_from(args)
    encode_corpus(config)
    summary = prepare_queries(config)
    print(
        f"prepared {summary['n_queries']} queries "
        f"({summary['n_failures']} caption failure(s)); manifest: {summary['manifest']}"
    )
    return 0


def _common_flags(p):
    p.add_argument("--images", required=True, help="image folder")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--encoder", default="hash", help="hash (default) or clip")
    p.add_argument("--dim", type=int, default=64)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = argparse.ArgumentParser(prog="dataset-prep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode an image folder into a bundle")
    _common_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("prepare", help="encode corpus and prepare query bundles")
    _common_flags(p)
    p.add_argument("--annotations", required=True, help="JSON list of query annotations")
    p.add_argument("--captions", choices=["mock", "wire"], default="mock")
    p.set_defaults(func=cmd_prepare)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
