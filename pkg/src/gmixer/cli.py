"""Command-line entry point.

Subcommands:
    validate  check a run manifest (bundles, dimensions, references)
    run       execute the retrieval + re-ranking pipeline
    captions  generate caption triples for a queries file
    synth     emit a synthetic corpus from a spec file
    report    render eval reports to CSV + figures

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import captions as captions_mod
from . import report as report_mod
from . import synth as synth_mod
from .errors import GmixerError, InvalidConfigError
from .pipeline import RunManifest, run, validate_manifest
from .rerank import DeltaVariant

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _parse_grid(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must look like start:end:step, e.g. 0.7:1.0:0.05")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric grid component in {text!r}")


def _apply_overrides(manifest: RunManifest, args) -> RunManifest:
    retrieval = manifest.retrieval
    updates = {}
    if args.grid is not None:
        start, end, step = args.grid
        updates.update(grid_start=start, grid_end=end, grid_step=step)
    if args.topk is not None:
        updates["k_per_lambda"] = args.topk
    if args.exclude_reference:
        updates["exclude_reference"] = True
    if updates:
        retrieval = dataclasses.replace(retrieval, **updates)
    return dataclasses.replace(
        manifest,
        retrieval=retrieval,
        delta_variant=DeltaVariant(args.delta) if args.delta else manifest.delta_variant,
        use_s_m=False if args.no_sm else manifest.use_s_m,
        use_s_lambda=False if args.no_slambda else manifest.use_s_lambda,
        rerank_enabled=False if args.no_rerank else manifest.rerank_enabled,
        workers=args.workers if args.workers else manifest.workers,
        output=Path(args.output) if args.output else manifest.output,
    )


def _add_run_flags(p):
    p.add_argument("manifest", help="run manifest JSON")
    p.add_argument("--grid", type=_parse_grid, default=None, help="mix-ratio grid start:end:step")
    p.add_argument("--topk", type=int, default=None, help="hits per ratio (K)")
    p.add_argument("--delta", choices=[v.value for v in DeltaVariant], default=None)
    p.add_argument("--no-sm", action="store_true", help="drop the modification-text score")
    p.add_argument("--no-slambda", action="store_true", help="drop the stage-1 score")
    p.add_argument("--no-rerank", action="store_true", help="emit stage-1 order as-is")
    p.add_argument("--exclude-reference", action="store_true",
                   help="keep the reference image out of the candidate pools")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default=None, help="override rankings output path")


def cmd_validate(args) -> int:
    manifest = RunManifest.load(args.manifest)
    issues = validate_manifest(manifest)
    if issues:
        for issue in issues:
            print(f"ISSUE: {issue}", file=sys.stderr)
        print(f"{len(issues)} issue(s) found", file=sys.stderr)
        return EXIT_VALIDATION
    print("manifest OK")
    return EXIT_OK


def cmd_run(args) -> int:
    manifest = _apply_overrides(RunManifest.load(args.manifest), args)
    issues = validate_manifest(manifest)
    if issues:
        for issue in issues:
            print(f"ISSUE: {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    result = run(manifest)
    print(f"wrote {len(result.rankings)} rankings to {manifest.output}")
    if result.query_errors:
        print(f"{len(result.query_errors)} query failure(s) recorded", file=sys.stderr)
    if result.report is not None:
        for metric, value in result.report.per_k.items():
            print(f"{metric}: {value:.4f}")
    return EXIT_OK


def cmd_captions(args) -> int:
    provider = captions_mod.make_provider(args.provider)
    out = open(args.output, "w") if args.output else sys.stdout
    failures = 0
    try:
        with open(args.queries) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                qid = rec["query_id"]
                try:
                    bundle = provider.generate_captions(
                        rec.get("reference_id", rec.get("image_id", "")),
                        rec["modification_text"],
                    )
                except GmixerError as exc:
                    failures += 1
                    print(f"query {qid}: {exc}", file=sys.stderr)
                    continue
                out.write(
                    json.dumps(
                        {
                            "query_id": qid,
                            "target_description": bundle.target_desc,
                            "include": bundle.include,
                            "exclude": bundle.exclude,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
                out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    if failures:
        print(f"{failures} caption failure(s)", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = synth_mod.SynthSpec.from_json(args.spec) if args.spec else synth_mod.SynthSpec()
    paths = synth_mod.generate(spec, args.out)
    print(f"wrote synthetic corpus under {args.out} (manifest: {paths.manifest})")
    return EXIT_OK


def cmd_report(args) -> int:
    csv_path, png_path = report_mod.render(args.reports, args.out)
    print(f"wrote {csv_path} and {png_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmixer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a run manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run the retrieval pipeline")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("captions", help="generate caption triples")
    p.add_argument("queries", help="JSON lines with query_id, reference_id, modification_text")
    p.add_argument("--provider", choices=["mock", "wire"], default="mock")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_captions)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", default=None, help="SynthSpec JSON (defaults used if omitted)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="render eval reports to CSV and figures")
    p.add_argument("reports", nargs="+", help="eval report JSON file(s)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (GmixerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
