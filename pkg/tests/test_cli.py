"""End-to-end tests for the command-line interface.

Drives the real subcommands in-process: render a small corpus, train a
codebook, featurize pages, evaluate, and rank a single query.  Also pins
the exit-code contract (0 ok, 2 I/O, 3 configuration, 4 data mismatch).
"""

from __future__ import annotations

import csv
import shutil
import subprocess

import pytest

from pathletid.cli import EXIT_CONFIG, EXIT_DATA, EXIT_IO, EXIT_OK, main
from pathletid.codebook import load_codebook, load_feature_matrix
from pathletid.corpus import DATA_ROOT_ENV, load_manifest

SEED = "21"
SIZE = ("--width", "480", "--height", "320")
FAST = ("--subsample-cap", "4000")


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "corpus"
    rc = main(
        [
            "generate-synthetic",
            "--out",
            str(out),
            "--writers",
            "3",
            "--docs-per-writer",
            "2",
            "--seed",
            SEED,
            *SIZE,
        ]
    )
    assert rc == EXIT_OK
    return out


@pytest.fixture(scope="module")
def codebook_path(corpus_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_cb") / "cb.bin"
    rc = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--out",
            str(path),
            "--M",
            "8",
            "--seed",
            SEED,
            *FAST,
        ]
    )
    assert rc == EXIT_OK
    return path


@pytest.fixture(scope="module")
def matrices_dir(corpus_dir, codebook_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_fm") / "mats"
    rc = main(
        [
            "featurize",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--codebook",
            str(codebook_path),
            "--out-dir",
            str(out),
        ]
    )
    assert rc == EXIT_OK
    return out


# ---------------------------------------------------------------------------
# happy paths


def test_generate_writes_pages_and_manifest(corpus_dir):
    assert (corpus_dir / "manifest.csv").is_file()
    pages = sorted(p.name for p in corpus_dir.glob("*.png"))
    assert len(pages) == 6
    assert pages[0] == "w000_d00.png"
    manifest = load_manifest(corpus_dir / "manifest.csv")
    assert manifest.writers() == ("w000", "w001", "w002")


def test_train_reports_parameters_and_fingerprint(corpus_dir, codebook_path, tmp_path, capsys):
    again = tmp_path / "again.bin"
    rc = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--out",
            str(again),
            "--M",
            "8",
            "--seed",
            SEED,
            *FAST,
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "M=8" in out and "m=3" in out and "w=4" in out
    assert "fingerprint: " in out
    # identical arguments must reproduce the file byte for byte
    assert again.read_bytes() == codebook_path.read_bytes()


def test_featurize_writes_verifiable_matrices(corpus_dir, codebook_path, matrices_dir):
    fingerprint = load_codebook(codebook_path).fingerprint()
    files = sorted(matrices_dir.glob("*.fm"))
    assert [f.stem for f in files] == [
        "w000_d00", "w000_d01", "w001_d00", "w001_d01", "w002_d00", "w002_d01",
    ]
    for file in files:
        fm, meta = load_feature_matrix(file, fingerprint)
        assert meta["doc_id"] == file.stem
        assert meta["writer_id"] == file.stem.split("_")[0]
        assert fm.matrix.shape == (8, 8)


def test_evaluate_loo_writes_reports(corpus_dir, codebook_path, tmp_path, capsys):
    report_dir = tmp_path / "reports"
    rc = main(
        [
            "evaluate",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--codebook",
            str(codebook_path),
            "--report-dir",
            str(report_dir),
            "--dataset-name",
            "smoke",
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "Top-1:" in out and "Top-10:" in out and "(6 queries, manhattan)" in out
    rows = list(csv.DictReader((report_dir / "report.csv").open()))
    assert list(rows[0]) == ["dataset", "Top-1", "Top-10", "w", "m", "M"]
    assert rows[0]["dataset"] == "smoke"
    assert 0.0 <= float(rows[0]["Top-1"]) <= float(rows[0]["Top-10"]) <= 100.0
    assert rows[0]["w"] == "4" and rows[0]["m"] == "3" and rows[0]["M"] == "8"
    assert (report_dir / "report.txt").read_text().startswith("dataset")


def test_evaluate_custom_tops_still_fills_report_columns(corpus_dir, codebook_path, capsys):
    rc = main(
        [
            "evaluate",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--codebook",
            str(codebook_path),
            "--tops",
            "1,3",
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "Top-3:" in out
    assert "nan" not in out


def _roles_manifest(corpus_dir, tmp_path):
    rows = list(csv.DictReader((corpus_dir / "manifest.csv").open()))
    for row in rows:
        row["role"] = "template" if row["doc_id"].endswith("d00") else "query"
    path = tmp_path / "manifest_roles.csv"
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["doc_id", "writer_id", "path", "role"])
        writer.writeheader()
        writer.writerows(rows)
    return path


def test_evaluate_queryset_mode(corpus_dir, codebook_path, tmp_path, capsys):
    manifest = _roles_manifest(corpus_dir, tmp_path)
    rc = main(
        [
            "evaluate",
            "--manifest",
            str(manifest),
            "--root",
            str(corpus_dir),
            "--codebook",
            str(codebook_path),
            "--mode",
            "queryset",
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "(3 queries, manhattan)" in out


def test_evaluate_queryset_without_roles_is_config_error(corpus_dir, codebook_path, capsys):
    rc = main(
        [
            "evaluate",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--codebook",
            str(codebook_path),
            "--mode",
            "queryset",
        ]
    )
    assert rc == EXIT_CONFIG
    assert "template" in capsys.readouterr().err


def test_identify_ranks_own_document_first(corpus_dir, codebook_path, matrices_dir, capsys):
    rc = main(
        [
            "identify",
            "--image",
            str(corpus_dir / "w001_d00.png"),
            "--codebook",
            str(codebook_path),
            "--gallery-dir",
            str(matrices_dir),
            "--top",
            "3",
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    ranked = [line.split() for line in out.splitlines()[1:]]
    assert len(ranked) == 3
    position, writer_id, doc_id, distance = ranked[0]
    assert (position, writer_id, doc_id) == ("1", "w001", "w001_d00")
    assert float(distance) == 0.0
    assert all(float(row[3]) >= 0.0 for row in ranked)


def test_flat_directory_scan_matches_manifest(corpus_dir, codebook_path, tmp_path):
    out = tmp_path / "flat.bin"
    rc = main(
        [
            "train",
            "--image-dir",
            str(corpus_dir),
            "--out",
            str(out),
            "--M",
            "8",
            "--seed",
            SEED,
            *FAST,
        ]
    )
    assert rc == EXIT_OK
    assert out.read_bytes() == codebook_path.read_bytes()


def test_env_var_supplies_image_root(corpus_dir, tmp_path, monkeypatch, capsys):
    moved = tmp_path / "manifest.csv"
    shutil.copy(corpus_dir / "manifest.csv", moved)
    args = [
        "train",
        "--manifest",
        str(moved),
        "--out",
        str(tmp_path / "cb.bin"),
        "--M",
        "8",
        "--seed",
        SEED,
        *FAST,
        "--use-env-root",
    ]
    monkeypatch.delenv(DATA_ROOT_ENV, raising=False)
    rc = main(args)
    capsys.readouterr()
    assert rc == EXIT_IO  # manifest references images the bare tmp dir lacks
    monkeypatch.setenv(DATA_ROOT_ENV, str(corpus_dir))
    assert main(args) == EXIT_OK


def test_preset_bundles_parameters_and_flags_override(corpus_dir, tmp_path, capsys):
    rc = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--out",
            str(tmp_path / "preset.bin"),
            "--preset",
            "small-ink",
            "--seed",
            SEED,
            *FAST,
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "M=32" in out and "m=2" in out and "w=3" in out
    rc = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--out",
            str(tmp_path / "preset_override.bin"),
            "--preset",
            "small-ink",
            "--M",
            "8",
            "--seed",
            SEED,
            *FAST,
        ]
    )
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "M=8" in out and "m=2" in out and "w=3" in out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip() == "pathletid 0.1.0"


def test_console_script_is_installed():
    exe = shutil.which("pathletid")
    assert exe, "console script should be on PATH after installation"
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "pathletid 0.1.0"


# ---------------------------------------------------------------------------
# exit codes


def test_missing_manifest_is_io_error(tmp_path, capsys):
    rc = main(
        [
            "train",
            "--manifest",
            str(tmp_path / "nope.csv"),
            "--out",
            str(tmp_path / "cb.bin"),
        ]
    )
    assert rc == EXIT_IO
    assert "error:" in capsys.readouterr().err


def test_invalid_level_pair_is_config_error(corpus_dir, tmp_path, capsys):
    rc = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--out",
            str(tmp_path / "cb.bin"),
            "--m",
            "4",
            "--w",
            "4",
        ]
    )
    assert rc == EXIT_CONFIG
    assert "1 < m < w" in capsys.readouterr().err


def test_malformed_tops_is_config_error(corpus_dir, codebook_path, capsys):
    rc = main(
        [
            "evaluate",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--codebook",
            str(codebook_path),
            "--tops",
            "1,zebra",
        ]
    )
    assert rc == EXIT_CONFIG
    assert "--tops" in capsys.readouterr().err


def test_invalid_generate_counts_is_config_error(tmp_path, capsys):
    rc = main(["generate-synthetic", "--out", str(tmp_path / "c"), "--writers", "0"])
    assert rc == EXIT_CONFIG
    capsys.readouterr()


def test_foreign_codebook_is_data_error(corpus_dir, matrices_dir, tmp_path, capsys):
    other = tmp_path / "other.bin"
    rc = main(
        [
            "train",
            "--manifest",
            str(corpus_dir / "manifest.csv"),
            "--out",
            str(other),
            "--M",
            "8",
            "--seed",
            "99",
            *FAST,
        ]
    )
    assert rc == EXIT_OK
    capsys.readouterr()
    rc = main(
        [
            "identify",
            "--image",
            str(corpus_dir / "w000_d00.png"),
            "--codebook",
            str(other),
            "--gallery-dir",
            str(matrices_dir),
        ]
    )
    assert rc == EXIT_DATA
    err = capsys.readouterr().err
    assert "built with codebook" in err and "expected" in err


def test_empty_gallery_is_io_error(corpus_dir, codebook_path, tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(
        [
            "identify",
            "--image",
            str(corpus_dir / "w000_d00.png"),
            "--codebook",
            str(codebook_path),
            "--gallery-dir",
            str(empty),
        ]
    )
    assert rc == EXIT_IO
    assert "no .fm files" in capsys.readouterr().err
