"""Tests for pipeline configuration and image-to-matrix composition."""

import numpy as np
import pytest

from pathletid import pipeline as pp
from pathletid.corpus import CorpusManifest, ManifestEntry
from pathletid.imageproc import save_gray


def ring_page(seed=0, size=200, n_rings=6):
    """A page of annuli: plenty of smooth contours, no synth dependency."""
    rng = np.random.default_rng(seed)
    img = np.full((size, size), 240, dtype=np.uint8)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(n_rings):
        cy, cx = rng.integers(30, size - 30, 2)
        r = rng.uniform(12, 22)
        ring = (np.hypot(yy - cy, xx - cx) <= r) & (np.hypot(yy - cy, xx - cx) >= r - 4)
        img[ring] = 25
    return img


# ---------------------------------------------------------------------------
# config


def test_defaults_are_valid():
    config = pp.PipelineConfig()
    assert (config.w, config.m, config.M, config.epsilon) == (4, 3, 48, 1.0)
    assert config.resolved_metric() == "manhattan"


def test_level_constraint_enforced():
    with pytest.raises(ValueError):
        pp.PipelineConfig(m=4, w=4)  # m must be < w
    with pytest.raises(ValueError):
        pp.PipelineConfig(m=1)  # m must exceed 1
    with pytest.raises(ValueError):
        pp.PipelineConfig(w=2, m=2)


def test_other_validations():
    for kwargs in (
        {"epsilon": -0.5},
        {"M": 1},
        {"metric": "cosine"},
        {"pair_orientation": "backwards"},
        {"min_perimeter": -1},
        {"subsample_cap": 0},
        {"restarts": 0},
        {"workers": 0},
    ):
        with pytest.raises(ValueError):
            pp.PipelineConfig(**kwargs)


def test_metric_auto_rule():
    assert pp.PipelineConfig(epsilon=0.2).resolved_metric() == "chi2"
    assert pp.PipelineConfig(epsilon=2.0).resolved_metric() == "manhattan"
    assert pp.PipelineConfig(epsilon=0.2, metric="manhattan").resolved_metric() == "manhattan"


def test_small_ink_preset_values():
    assert pp.PRESETS["small-ink"] == {"w": 3, "m": 2, "M": 32}


# ---------------------------------------------------------------------------
# training


def test_training_pool_and_codebook():
    config = pp.PipelineConfig(M=8, seed=1)
    pages = [ring_page(s) for s in range(3)]
    pool = pp.collect_training_pool(pages, config)
    assert pool.ndim == 2 and pool.shape[1] == 5  # level-3 feature dimension
    assert len(pool) > 100
    cb = pp.train_from_sources(pages, config)
    assert cb.size == 8 and cb.dim == 5
    assert (cb.m, cb.w, cb.epsilon) == (config.m, config.w, config.epsilon)


def test_subsample_cap_is_deterministic():
    config = pp.PipelineConfig(M=4, subsample_cap=50, seed=3)
    pages = [ring_page(7)]
    a = pp.collect_training_pool(pages, config)
    b = pp.collect_training_pool(pages, config)
    assert a.shape == (50, 5)
    np.testing.assert_array_equal(a, b)


def test_pool_smaller_than_M_fails():
    config = pp.PipelineConfig(M=48)
    blank = np.full((60, 60), 255, dtype=np.uint8)
    with pytest.warns(UserWarning), pytest.raises(ValueError):
        pp.train_from_sources([blank], config)


# ---------------------------------------------------------------------------
# featurization


def test_feature_matrix_contract():
    config = pp.PipelineConfig(M=8, seed=2)
    pages = [ring_page(s) for s in range(3)]
    cb = pp.train_from_sources(pages, config)
    fm = pp.featurize_page(pages[0], cb, config)
    assert fm.size == 8
    assert fm.pair_count > 50
    assert fm.matrix.sum() == pytest.approx(1.0, abs=1e-12)


def test_codebook_parameters_override_config():
    pages = [ring_page(s) for s in range(2)]
    cb = pp.train_from_sources(pages, pp.PipelineConfig(M=8, epsilon=1.0, seed=4))
    fm_default = pp.featurize_page(pages[0], cb, pp.PipelineConfig(M=8, epsilon=1.0))
    # a conflicting epsilon in the runtime config must not change features:
    # the codebook's trained parameters win
    fm_conflict = pp.featurize_page(pages[0], cb, pp.PipelineConfig(M=8, epsilon=2.0))
    np.testing.assert_array_equal(fm_default.matrix, fm_conflict.matrix)


def test_blank_page_yields_zero_matrix():
    config = pp.PipelineConfig(M=8, seed=5)
    cb = pp.train_from_sources([ring_page(1)], config)
    blank = np.full((80, 80), 255, dtype=np.uint8)
    with pytest.warns(UserWarning):
        fm = pp.featurize_page(blank, cb, config)
    assert fm.pair_count == 0 and not fm.matrix.any()


def test_featurize_manifest_order_and_workers(tmp_path):
    config = pp.PipelineConfig(M=8, seed=6)
    entries = []
    for i, s in enumerate((3, 1, 2)):
        path = tmp_path / f"w{i}_d0.png"
        save_gray(ring_page(s), path)
        entries.append(ManifestEntry(f"w{i}_d0", f"w{i}", path.name))
    manifest = CorpusManifest(entries, tmp_path)
    cb = pp.train_from_manifest(manifest, config)
    serial = pp.featurize_manifest(manifest, cb, config)
    threaded = pp.featurize_manifest(
        manifest, cb, pp.PipelineConfig(M=8, seed=6, workers=3)
    )
    assert [d.doc_id for d in serial] == [e.doc_id for e in entries]
    for a, b in zip(serial, threaded):
        assert a.doc_id == b.doc_id
        np.testing.assert_array_equal(a.matrix.matrix, b.matrix.matrix)


def test_load_page_accepts_paths_and_arrays(tmp_path):
    img = ring_page(9)
    path = tmp_path / "page.png"
    save_gray(img, path)
    np.testing.assert_array_equal(pp.load_page(path), img)
    np.testing.assert_array_equal(pp.load_page(img), img)
