"""Corpus manifests: which images exist, who wrote them, and their role.

A corpus is described by a CSV manifest with columns
``doc_id,writer_id,path,role`` where ``path`` is taken relative to the
manifest's root directory unless absolute, and ``role`` is one of
``train``, ``gallery``, ``template`` or ``query``.  For datasets laid
out as a flat directory of ``<writerID>_<docID>.png`` files,
:func:`scan_flat_directory` builds the manifest automatically.

The default data root may be supplied via the ``PATHLETID_DATA_ROOT``
environment variable.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

ROLES = ("train", "gallery", "template", "query")
DATA_ROOT_ENV = "PATHLETID_DATA_ROOT"
_IMAGE_SUFFIXES = (".png", ".pgm")


@dataclass(frozen=True)
class ManifestEntry:
    doc_id: str
    writer_id: str
    path: str
    role: str = "gallery"

    def __post_init__(self):
        if not self.doc_id or not self.writer_id:
            raise ValueError("doc_id and writer_id must be nonempty")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple
    root: Path

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.doc_id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate doc_id in manifest")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "root", Path(self.root))

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        path = Path(entry.path)
        return path if path.is_absolute() else self.root / path

    def by_role(self, *roles: str) -> tuple:
        return tuple(e for e in self.entries if e.role in roles)

    def training_entries(self) -> tuple:
        """Entries marked ``train``, or every entry when none are."""
        marked = self.by_role("train")
        return marked if marked else self.entries

    def writers(self) -> tuple:
        return tuple(sorted({e.writer_id for e in self.entries}))


def default_root() -> Path:
    return Path(os.environ.get(DATA_ROOT_ENV, "."))


def load_manifest(path, root=None, check_paths: bool = True) -> CorpusManifest:
    """Read a manifest CSV; missing image files are an error by default."""
    path = Path(path)
    if root is None:
        root = path.parent
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"doc_id", "writer_id", "path"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(
                f"{path}: manifest needs columns doc_id, writer_id, path[, role]"
            )
        entries = [
            ManifestEntry(
                row["doc_id"].strip(),
                row["writer_id"].strip(),
                row["path"].strip(),
                (row.get("role") or "gallery").strip(),
            )
            for row in reader
        ]
    manifest = CorpusManifest(entries, root)
    if check_paths:
        for entry in manifest.entries:
            resolved = manifest.resolve(entry)
            if not resolved.is_file():
                raise FileNotFoundError(f"{path}: missing image {resolved}")
    return manifest


def save_manifest(manifest: CorpusManifest, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "writer_id", "path", "role"])
        for e in manifest.entries:
            writer.writerow([e.doc_id, e.writer_id, e.path, e.role])


def scan_flat_directory(directory, role: str = "gallery") -> CorpusManifest:
    """Build a manifest from ``<writerID>_<docID>.png`` style filenames."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    entries = []
    for file in sorted(directory.iterdir()):
        if file.suffix.lower() not in _IMAGE_SUFFIXES:
            continue
        stem = file.stem
        if "_" not in stem:
            raise ValueError(
                f"{file.name}: expected <writerID>_<docID>{file.suffix} naming"
            )
        writer_id, doc_id = stem.split("_", 1)
        entries.append(ManifestEntry(stem, writer_id, file.name, role))
    if not entries:
        raise ValueError(f"no {'/'.join(_IMAGE_SUFFIXES)} images in {directory}")
    return CorpusManifest(entries, directory)
