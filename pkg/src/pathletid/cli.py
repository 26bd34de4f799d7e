"""Command-line surface for the writer-identification pipeline.

Subcommands::

    generate-synthetic   render a deterministic synthetic corpus
    train                learn a codebook from a corpus
    featurize            write per-document feature matrix files
    evaluate             leave-one-out or template/query accuracy report
    identify             rank gallery documents against one image

Exit codes: 0 success, 2 I/O error, 3 configuration error,
4 codebook/feature mismatch.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .codebook import (
    FingerprintMismatchError,
    load_codebook,
    load_feature_matrix,
    save_codebook,
    save_feature_matrix,
)
from .corpus import default_root, load_manifest, scan_flat_directory
from .identify import (
    DocumentDescriptor,
    default_metric,
    evaluate_loo,
    evaluate_queryset,
    format_report_csv,
    format_report_text,
    rank,
)
from .pipeline import (
    PRESETS,
    PipelineConfig,
    featurize_manifest,
    featurize_page,
    train_from_manifest,
)
from .synth import PAGE_SIZE, generate_corpus

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_DATA = 4

_CONFIG_FIELDS = (
    "epsilon",
    "w",
    "m",
    "M",
    "metric",
    "pair_orientation",
    "seed",
    "min_perimeter",
    "subsample_cap",
    "restarts",
    "workers",
)


class ConfigError(ValueError):
    """Bad command-line configuration."""


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--epsilon", type=float, help="polygonization tolerance in pixels")
    group.add_argument("--w", type=int, help="pathlet size in vertices")
    group.add_argument("--m", type=int, help="log-signature truncation level (1 < m < w)")
    group.add_argument("--M", type=int, help="codebook size")
    group.add_argument(
        "--metric", choices=("auto", "manhattan", "chi2"), help="distance between matrices"
    )
    group.add_argument(
        "--pair-orientation",
        dest="pair_orientation",
        choices=("traversal", "outward"),
        help="how the two windows of a pair are oriented",
    )
    group.add_argument("--seed", type=int, help="seed for all randomized steps")
    group.add_argument(
        "--min-perimeter", dest="min_perimeter", type=int, help="drop shorter contours"
    )
    group.add_argument(
        "--subsample-cap",
        dest="subsample_cap",
        type=int,
        help="max training-pool size before seeded subsampling",
    )
    group.add_argument("--restarts", type=int, help="k-means restarts, best kept")
    group.add_argument("--workers", type=int, help="concurrent featurization workers")
    group.add_argument(
        "--exclude-holes",
        action="store_true",
        help="use outer contours only (holes carry loop shapes; kept by default)",
    )
    group.add_argument(
        "--invert", action="store_true", help="light-on-dark ink polarity"
    )
    group.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        help="named parameter bundle; explicit flags still win",
    )


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    values = {}
    preset = getattr(args, "preset", None)
    if preset:
        values.update(PRESETS[preset])
    for field in _CONFIG_FIELDS:
        value = getattr(args, field, None)
        if value is not None:
            values[field] = value
    if getattr(args, "exclude_holes", False):
        values["include_holes"] = False
    if getattr(args, "invert", False):
        values["invert"] = True
    try:
        return PipelineConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_corpus(args: argparse.Namespace):
    if getattr(args, "image_dir", None):
        return scan_flat_directory(args.image_dir)
    root = Path(args.root) if getattr(args, "root", None) else None
    if root is None and getattr(args, "use_env_root", False):
        root = default_root()
    return load_manifest(args.manifest, root=root)


def _parse_tops(text: str):
    try:
        tops = tuple(sorted({int(part) for part in text.split(",") if part.strip()}))
    except ValueError:
        raise ConfigError(f"--tops expects comma-separated integers, got {text!r}") from None
    if not tops or any(n < 1 for n in tops):
        raise ConfigError(f"--tops needs positive ranks, got {text!r}")
    return tops


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate_synthetic(args) -> int:
    if args.writers < 1 or args.docs_per_writer < 1:
        raise ConfigError("--writers and --docs-per-writer must be >= 1")
    manifest = generate_corpus(
        args.out,
        args.writers,
        args.docs_per_writer,
        seed=args.seed,
        size=(args.width, args.height),
    )
    print(f"wrote {len(manifest)} pages and manifest.csv to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = config_from_args(args)
    manifest = _load_corpus(args)
    cb = train_from_manifest(manifest, config)
    save_codebook(cb, args.out)
    print(
        f"codebook: M={cb.size} D={cb.dim} m={cb.m} w={cb.w} epsilon={cb.epsilon} "
        f"orientation={cb.pair_orientation}"
    )
    print(f"fingerprint: {cb.fingerprint()}")
    print(f"saved to {args.out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    config = config_from_args(args)
    manifest = _load_corpus(args)
    cb = load_codebook(args.codebook)
    fingerprint = cb.fingerprint()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = featurize_manifest(manifest, cb, config)
    for doc in docs:
        save_feature_matrix(
            doc.matrix,
            out_dir / f"{doc.doc_id}.fm",
            doc_id=doc.doc_id,
            writer_id=doc.writer_id,
            fingerprint=fingerprint,
        )
    print(f"wrote {len(docs)} feature matrices to {out_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = config_from_args(args)
    manifest = _load_corpus(args)
    cb = load_codebook(args.codebook)
    tops = _parse_tops(args.tops)
    # the report table always carries Top-1 and Top-10 columns
    eval_tops = tuple(sorted(set(tops) | {1, 10}))
    metric = config.metric if config.metric != "auto" else default_metric(cb.epsilon)
    if args.mode == "loo":
        gallery_entries = manifest.by_role("gallery") or manifest.entries
        docs = featurize_manifest(manifest, cb, config, gallery_entries)
        report = evaluate_loo(docs, metric, eval_tops)
    else:
        templates = manifest.by_role("template")
        queries = manifest.by_role("query")
        if not templates or not queries:
            raise ConfigError(
                "queryset mode needs entries with roles 'template' and 'query'"
            )
        report = evaluate_queryset(
            featurize_manifest(manifest, cb, config, templates),
            featurize_manifest(manifest, cb, config, queries),
            metric,
            eval_tops,
        )
    entry = {
        "dataset": args.dataset_name,
        "top1": 100 * report.accuracies[1],
        "top10": 100 * report.accuracies[10],
        "w": cb.w,
        "m": cb.m,
        "M": cb.size,
    }
    text = format_report_text([entry])
    print(text, end="")
    for n in tops:
        print(f"Top-{n}: {100 * report.accuracies[n]:.2f}%  ({report.num_queries} queries, {report.metric})")
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.csv").write_text(format_report_csv([entry]))
        (report_dir / "report.txt").write_text(text)
        print(f"reports written to {report_dir}")
    return EXIT_OK


def cmd_identify(args) -> int:
    config = config_from_args(args)
    cb = load_codebook(args.codebook)
    fingerprint = cb.fingerprint()
    gallery_dir = Path(args.gallery_dir)
    files = sorted(gallery_dir.glob("*.fm"))
    if not files:
        raise FileNotFoundError(f"no .fm files in {gallery_dir}")
    gallery = []
    for file in files:
        fm, meta = load_feature_matrix(file, fingerprint)
        gallery.append(
            DocumentDescriptor(meta["doc_id"], meta["writer_id"], fm, str(file))
        )
    query_fm = featurize_page(args.image, cb, config)
    query = DocumentDescriptor("__query__", "__query__", query_fm, str(args.image))
    metric = config.metric if config.metric != "auto" else default_metric(cb.epsilon)
    result = rank(query, gallery, metric)
    writer_of = {d.doc_id: d.writer_id for d in gallery}
    print(f"query: {args.image}  (metric {metric})")
    for position, (doc_id, distance) in enumerate(result.top(args.top), start=1):
        print(f"{position:3d}  {writer_of[doc_id]:<12} {doc_id:<20} {distance:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathletid",
        description="Offline writer identification from handwriting contours.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate-synthetic", help="render a deterministic synthetic corpus"
    )
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--writers", type=int, default=10)
    gen.add_argument("--docs-per-writer", dest="docs_per_writer", type=int, default=2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--width", type=int, default=PAGE_SIZE[0])
    gen.add_argument("--height", type=int, default=PAGE_SIZE[1])
    gen.set_defaults(func=cmd_generate_synthetic)

    def add_corpus_args(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--manifest", help="corpus manifest CSV")
        src.add_argument(
            "--image-dir",
            dest="image_dir",
            help="flat directory of <writerID>_<docID>.png images",
        )
        p.add_argument("--root", help="image root (default: manifest directory)")
        p.add_argument(
            "--use-env-root",
            dest="use_env_root",
            action="store_true",
            help="resolve images against PATHLETID_DATA_ROOT",
        )

    train = sub.add_parser("train", help="learn a codebook")
    add_corpus_args(train)
    train.add_argument("--out", required=True, help="codebook output file")
    _add_config_flags(train)
    train.set_defaults(func=cmd_train)

    feat = sub.add_parser("featurize", help="write per-document matrices")
    add_corpus_args(feat)
    feat.add_argument("--codebook", required=True)
    feat.add_argument("--out-dir", dest="out_dir", required=True)
    _add_config_flags(feat)
    feat.set_defaults(func=cmd_featurize)

    ev = sub.add_parser("evaluate", help="accuracy report")
    add_corpus_args(ev)
    ev.add_argument("--codebook", required=True)
    ev.add_argument("--mode", choices=("loo", "queryset"), default="loo")
    ev.add_argument("--tops", default="1,10", help="comma-separated ranks")
    ev.add_argument("--report-dir", dest="report_dir", help="write report.csv/report.txt here")
    ev.add_argument("--dataset-name", dest="dataset_name", default="corpus")
    _add_config_flags(ev)
    ev.set_defaults(func=cmd_evaluate)

    ident = sub.add_parser("identify", help="rank gallery against one image")
    ident.add_argument("--image", required=True)
    ident.add_argument("--codebook", required=True)
    ident.add_argument("--gallery-dir", dest="gallery_dir", required=True)
    ident.add_argument("--top", type=int, default=10)
    _add_config_flags(ident)
    ident.set_defaults(func=cmd_identify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FingerprintMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
