"""Offline writer identification from handwriting contours via pathlet log signatures.

The pipeline: binarize a page, trace the ink contours, simplify them to
polylines, slide fixed-size windows ("pathlets") along each polyline, describe
every window by its truncated log path signature, quantize hinged
backward/forward window pairs against a learned codebook, and compare the
resulting joint-occurrence matrices to rank candidate writers.
"""

from .codebook import (
    Codebook,
    FeatureMatrix,
    FingerprintMismatchError,
    build_feature_matrix,
    load_codebook,
    load_feature_matrix,
    nearest_code,
    nearest_codes,
    save_codebook,
    save_feature_matrix,
    train_codebook,
)
from .corpus import (
    CorpusManifest,
    ManifestEntry,
    load_manifest,
    save_manifest,
    scan_flat_directory,
)
from .geometry import Polyline
from .identify import (
    AccuracyReport,
    DocumentDescriptor,
    RankingResult,
    chi2_distance,
    default_metric,
    evaluate_loo,
    evaluate_queryset,
    format_report_csv,
    format_report_text,
    manhattan_distance,
    rank,
)
from .imageproc import (
    Contour,
    load_gray,
    otsu_binarize,
    otsu_threshold,
    page_polylines,
    polygonize,
    save_gray,
    trace_contours,
)
from .pathlets import (
    Pathlet,
    PathletPair,
    RescaleBounds,
    apply_rescale,
    contour_pair_features,
    extract_pairs,
    extract_pathlets,
    fit_rescale,
    lps_feature,
    pathlet_features,
)
from .pipeline import (
    PRESETS,
    PipelineConfig,
    collect_training_pool,
    featurize_manifest,
    featurize_page,
    train_from_manifest,
    train_from_sources,
)
from .signature import (
    LYNDON_BASIS_TAG,
    LogSigVector,
    TensorSeries,
    chen_concat,
    hall_expand,
    hall_project,
    log_signature,
    logsig_dim,
    logsig_level_dims,
    lyndon_words,
    path_signature,
    tensor_exp,
    tensor_log,
)
from .synth import corpus_styles, generate_corpus, render_document, writer_style

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "Codebook",
    "Contour",
    "CorpusManifest",
    "DocumentDescriptor",
    "FeatureMatrix",
    "FingerprintMismatchError",
    "LYNDON_BASIS_TAG",
    "LogSigVector",
    "ManifestEntry",
    "PRESETS",
    "Pathlet",
    "PathletPair",
    "PipelineConfig",
    "Polyline",
    "RankingResult",
    "RescaleBounds",
    "TensorSeries",
    "apply_rescale",
    "build_feature_matrix",
    "chen_concat",
    "chi2_distance",
    "collect_training_pool",
    "contour_pair_features",
    "corpus_styles",
    "default_metric",
    "evaluate_loo",
    "evaluate_queryset",
    "extract_pairs",
    "extract_pathlets",
    "featurize_manifest",
    "featurize_page",
    "fit_rescale",
    "format_report_csv",
    "format_report_text",
    "generate_corpus",
    "hall_expand",
    "hall_project",
    "load_codebook",
    "load_feature_matrix",
    "load_gray",
    "load_manifest",
    "log_signature",
    "logsig_dim",
    "logsig_level_dims",
    "lps_feature",
    "lyndon_words",
    "manhattan_distance",
    "nearest_code",
    "nearest_codes",
    "otsu_binarize",
    "otsu_threshold",
    "page_polylines",
    "path_signature",
    "pathlet_features",
    "polygonize",
    "rank",
    "render_document",
    "save_codebook",
    "save_feature_matrix",
    "save_gray",
    "save_manifest",
    "scan_flat_directory",
    "trace_contours",
    "train_codebook",
    "train_from_manifest",
    "train_from_sources",
    "writer_style",
    "__version__",
]
