"""End-to-end composition: page images to codebooks to feature matrices.

The pipeline has two phases.  Training collects length-normalized
pathlet features from the training documents, learns the [-1, 1]
rescale bounds and the k-means codebook, and freezes every parameter
the features depend on inside the codebook.  Featurization then turns
any document into an M x M matrix using the codebook's own parameters
(epsilon, w, m, pair orientation, bounds), so a matrix can never be
built under settings other than the ones the codebook was trained for.

Configuration knobs that do not change the feature definition (noise
filtering, hole handling, ink polarity, worker count) stay in
:class:`PipelineConfig` and apply at both phases.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codebook import Codebook, FeatureMatrix, build_feature_matrix, train_codebook
from .corpus import CorpusManifest
from .identify import DocumentDescriptor, METRICS, default_metric
from .imageproc import load_gray, page_polylines
from .pathlets import (
    ORIENTATIONS,
    apply_rescale,
    contour_pair_features,
    fit_rescale,
    pathlet_features,
    window_indices,
)
from .signature import logsig_dim

_POOL_RNG_TAG = 104729  # namespaces the subsampling stream away from k-means


@dataclass(frozen=True)
class PipelineConfig:
    """All pipeline parameters; defaults are the best general setting."""

    epsilon: float = 1.0
    w: int = 4
    m: int = 3
    M: int = 48
    metric: str = "auto"
    pair_orientation: str = "traversal"
    seed: int = 0
    min_perimeter: int = 10
    subsample_cap: int = 500_000
    include_holes: bool = True
    invert: bool = False
    restarts: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.w < 3:
            raise ValueError("pathlet size w must be >= 3")
        if not 1 < self.m < self.w:
            raise ValueError(f"levels must satisfy 1 < m < w, got m={self.m}, w={self.w}")
        if self.M < 2:
            raise ValueError("codebook size M must be >= 2")
        if self.metric != "auto" and self.metric not in METRICS:
            raise ValueError(f"metric must be auto or one of {sorted(METRICS)}")
        if self.pair_orientation not in ORIENTATIONS:
            raise ValueError(f"unknown pair orientation {self.pair_orientation!r}")
        if self.min_perimeter < 0:
            raise ValueError("min_perimeter must be >= 0")
        if self.subsample_cap < 1:
            raise ValueError("subsample_cap must be >= 1")
        if self.restarts < 1 or self.workers < 1:
            raise ValueError("restarts and workers must be >= 1")

    def resolved_metric(self) -> str:
        return default_metric(self.epsilon) if self.metric == "auto" else self.metric


PRESETS = {"small-ink": {"w": 3, "m": 2, "M": 32}}


def load_page(source) -> np.ndarray:
    """Accept a grayscale array or an image path."""
    if isinstance(source, (str, Path)):
        return load_gray(source)
    return np.asarray(source)


def _polylines(img, epsilon, config: PipelineConfig):
    return page_polylines(
        img,
        epsilon,
        min_perimeter=config.min_perimeter,
        include_holes=config.include_holes,
        invert=config.invert,
    )


def page_pathlet_features(source, config: PipelineConfig) -> np.ndarray:
    """Raw (pre-rescale) features of every pathlet on a page."""
    polys = _polylines(load_page(source), config.epsilon, config)
    blocks = []
    for poly in polys:
        idx = window_indices(len(poly), config.w, poly.closed)
        if len(idx):
            blocks.append(poly.points[idx])
    if not blocks:
        return np.empty((0, logsig_dim(config.m)))
    return pathlet_features(np.concatenate(blocks), config.m)


def collect_training_pool(sources, config: PipelineConfig) -> np.ndarray:
    """Pathlet features pooled over documents, subsampled to the cap."""
    pools = [page_pathlet_features(src, config) for src in sources]
    pool = np.concatenate(pools) if pools else np.empty((0, logsig_dim(config.m)))
    if len(pool) > config.subsample_cap:
        rng = np.random.default_rng([config.seed, _POOL_RNG_TAG])
        keep = np.sort(rng.choice(len(pool), config.subsample_cap, replace=False))
        pool = pool[keep]
    return pool


def train_from_sources(sources, config: PipelineConfig) -> Codebook:
    """Learn rescale bounds and a codebook from training documents."""
    raw = collect_training_pool(sources, config)
    if len(raw) < config.M:
        raise ValueError(
            f"training pool has {len(raw)} pathlets; need at least M={config.M}"
        )
    bounds = fit_rescale(raw)
    pool = apply_rescale(raw, bounds)
    return train_codebook(
        pool,
        config.M,
        config.seed,
        bounds=bounds,
        m=config.m,
        w=config.w,
        epsilon=config.epsilon,
        pair_orientation=config.pair_orientation,
        restarts=config.restarts,
    )


def train_from_manifest(manifest: CorpusManifest, config: PipelineConfig) -> Codebook:
    sources = [manifest.resolve(e) for e in manifest.training_entries()]
    return train_from_sources(sources, config)


def featurize_page(source, cb: Codebook, config: PipelineConfig) -> FeatureMatrix:
    """One document's feature matrix under a trained codebook."""
    polys = _polylines(load_page(source), cb.epsilon, config)
    backs, fwds = [], []
    for poly in polys:
        back, fwd = contour_pair_features(poly, cb.w, cb.m, cb.pair_orientation)
        if len(back):
            backs.append(back)
            fwds.append(fwd)
    if not backs:
        return build_feature_matrix(np.empty((0, 2, cb.dim)), cb)
    raw = np.stack([np.concatenate(backs), np.concatenate(fwds)], axis=1)
    rescaled = apply_rescale(raw.reshape(-1, cb.dim), cb.bounds).reshape(raw.shape)
    return build_feature_matrix(rescaled, cb)


def featurize_manifest(
    manifest: CorpusManifest,
    cb: Codebook,
    config: PipelineConfig,
    entries=None,
) -> list:
    """Descriptors for manifest entries, in manifest order."""
    entries = list(manifest.entries if entries is None else entries)

    def one(entry):
        path = manifest.resolve(entry)
        fm = featurize_page(path, cb, config)
        return DocumentDescriptor(entry.doc_id, entry.writer_id, fm, str(path))

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(one, entries))
    return [one(entry) for entry in entries]
