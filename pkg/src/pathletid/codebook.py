"""k-means codebooks over pathlet features and document feature matrices.

Training clusters the rescaled feature pool with seeded k-means++
initialization followed by Lloyd iterations, so a given (pool, seed)
always yields bit-identical centroids.  A document is then described by
an M x M matrix counting, for every hinged pathlet pair, which codebook
entries the backward and forward features quantize to; the matrix is
normalized to sum to 1.

Codebooks and matrices are persisted in a small binary format: a magic
string, a length-prefixed JSON header, then the numeric payload as
little-endian float64.  The codebook header records every parameter the
features depend on (m, w, epsilon, pair orientation, basis convention,
seed), and matrix files embed the SHA-256 fingerprint of the codebook
they were built with, so stale or mismatched artifacts fail loudly
instead of silently degrading accuracy.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pathlets import ORIENTATIONS, RescaleBounds
from .signature import LYNDON_BASIS_TAG, logsig_dim

KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 300
_ASSIGN_CHUNK = 8192

FORMAT_VERSION = 1
CODEBOOK_MAGIC = b"PATHLETCB\x00"
MATRIX_MAGIC = b"PATHLETFM\x00"


class FingerprintMismatchError(ValueError):
    """A matrix file was produced under a different codebook."""


# ---------------------------------------------------------------------------
# clustering


def _assign(features: np.ndarray, centroids: np.ndarray):
    """Nearest-centroid labels and squared distances, chunked."""
    n = len(features)
    labels = np.empty(n, dtype=np.intp)
    best = np.empty(n)
    for s in range(0, n, _ASSIGN_CHUNK):
        block = features[s : s + _ASSIGN_CHUNK]
        d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        idx = np.argmin(d2, axis=1)
        labels[s : s + _ASSIGN_CHUNK] = idx
        best[s : s + _ASSIGN_CHUNK] = d2[np.arange(len(block)), idx]
    return labels, best


def _kmeanspp(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(features)
    centroids = np.empty((k, features.shape[1]))
    centroids[0] = features[int(rng.integers(n))]
    d2 = ((features - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:  # all remaining points coincide with chosen centroids
            idx = int(rng.integers(n))
        centroids[j] = features[idx]
        d2 = np.minimum(d2, ((features - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _repair_empty(labels, best, counts):
    """Move the farthest points into empty clusters, deterministically."""
    while True:
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return
        far = int(np.argmax(best))
        if best[far] == 0.0:
            return  # fewer distinct points than clusters; leave the rest empty
        counts[labels[far]] -= 1
        labels[far] = empty[0]
        counts[empty[0]] += 1
        best[far] = 0.0


def lloyd_kmeans(
    features: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
):
    """One k-means run; returns (centroids, inertia, inertia_history)."""
    centroids = _kmeanspp(features, k, rng)
    dim = features.shape[1]
    history = []
    for _ in range(max_iter):
        labels, best = _assign(features, centroids)
        history.append(float(best.sum()))
        counts = np.bincount(labels, minlength=k)
        _repair_empty(labels, best, counts)
        sums = np.empty((k, dim))
        for d in range(dim):
            sums[:, d] = np.bincount(labels, weights=features[:, d], minlength=k)
        new_centroids = np.where(
            counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], centroids
        )
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            break
    _, best = _assign(features, centroids)
    return centroids, float(best.sum()), history


def train_codebook(
    features: np.ndarray,
    M: int,
    seed: int,
    *,
    bounds: RescaleBounds,
    m: int,
    w: int,
    epsilon: float,
    pair_orientation: str = "traversal",
    restarts: int = 1,
) -> "Codebook":
    """Cluster a rescaled feature pool into an M-entry codebook.

    ``restarts`` > 1 reruns k-means with derived seeds and keeps the
    lowest-inertia result.  Identical inputs give identical codebooks.
    """
    pool = np.asarray(features, dtype=float)
    if pool.ndim != 2 or pool.size == 0:
        raise ValueError("expected a nonempty (N, D) feature pool")
    if not np.isfinite(pool).all():
        raise ValueError("feature pool contains non-finite values")
    if M < 2:
        raise ValueError(f"codebook size must be >= 2, got {M}")
    if len(pool) < M:
        raise ValueError(f"pool of {len(pool)} features cannot fill {M} clusters")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centroids, inertia, history = lloyd_kmeans(pool, M, rng)
        if best is None or inertia < best[1]:
            best = (centroids, inertia, history)
    centroids, inertia, history = best
    return Codebook(
        centroids=centroids,
        bounds=bounds,
        m=m,
        w=w,
        epsilon=epsilon,
        pair_orientation=pair_orientation,
        seed=seed,
        inertia=inertia,
        inertia_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# codebook


@dataclass(frozen=True)
class Codebook:
    """M centroids plus the full parameter fingerprint of their features."""

    centroids: np.ndarray  # (M, D)
    bounds: RescaleBounds
    m: int
    w: int
    epsilon: float
    pair_orientation: str
    seed: int
    basis_tag: str = LYNDON_BASIS_TAG
    inertia: float = float("nan")
    inertia_history: tuple = ()

    def __post_init__(self):
        centroids = np.asarray(self.centroids, dtype=float)
        if centroids.ndim != 2 or len(centroids) < 2:
            raise ValueError("centroids must form an (M >= 2, D) array")
        if not np.isfinite(centroids).all():
            raise ValueError("centroids contain non-finite values")
        if centroids.shape[1] != logsig_dim(self.m):
            raise ValueError(
                f"centroid dimension {centroids.shape[1]} does not match level m={self.m}"
            )
        if self.bounds.dim != centroids.shape[1]:
            raise ValueError("rescale bounds dimension does not match centroids")
        if not 1 < self.m < self.w:
            raise ValueError(f"levels must satisfy 1 < m < w, got m={self.m}, w={self.w}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.pair_orientation not in ORIENTATIONS:
            raise ValueError(f"unknown pair orientation {self.pair_orientation!r}")
        object.__setattr__(self, "centroids", centroids)

    @property
    def size(self) -> int:
        return len(self.centroids)

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def fingerprint(self) -> str:
        return hashlib.sha256(_codebook_payload(self)).hexdigest()


def nearest_codes(features: np.ndarray, cb: Codebook) -> np.ndarray:
    """Indices of the nearest centroid for each row; ties pick the lowest."""
    arr = np.asarray(features, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None]
    if arr.shape[1] != cb.dim:
        raise ValueError(
            f"feature dimension {arr.shape[1]} does not match codebook ({cb.dim})"
        )
    labels, _ = _assign(arr, cb.centroids)
    return labels[0] if single else labels


def nearest_code(feature: np.ndarray, cb: Codebook) -> int:
    return int(nearest_codes(feature, cb))


# ---------------------------------------------------------------------------
# feature matrices


@dataclass(frozen=True)
class FeatureMatrix:
    """Normalized M x M histogram of quantized (backward, forward) pairs."""

    matrix: np.ndarray
    pair_count: int

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("feature matrix must be square")
        if not np.isfinite(matrix).all() or (matrix < 0).any():
            raise ValueError("feature matrix entries must be finite and >= 0")
        if self.pair_count > 0:
            if abs(matrix.sum() - 1.0) > 1e-9:
                raise ValueError("nonempty feature matrix must sum to 1")
        elif matrix.any():
            raise ValueError("empty-document matrix must be all zeros")
        object.__setattr__(self, "matrix", matrix)

    @property
    def size(self) -> int:
        return len(self.matrix)


def build_feature_matrix(pair_features, cb: Codebook) -> FeatureMatrix:
    """Quantize rescaled (backward, forward) feature pairs and count.

    ``pair_features`` is a (K, 2, D) array or a sequence of 2-tuples of
    feature vectors.  An empty document yields the zero matrix with a
    warning rather than an error.
    """
    arr = np.asarray(pair_features, dtype=float)
    M = cb.size
    if arr.size == 0:
        warnings.warn("document produced no pathlet pairs; emitting a zero matrix")
        return FeatureMatrix(np.zeros((M, M)), 0)
    if arr.ndim != 3 or arr.shape[1] != 2:
        raise ValueError("expected a (K, 2, D) array of feature pairs")
    back = nearest_codes(arr[:, 0, :], cb)
    fwd = nearest_codes(arr[:, 1, :], cb)
    counts = np.bincount(back * M + fwd, minlength=M * M).reshape(M, M)
    return FeatureMatrix(counts / len(arr), len(arr))


# ---------------------------------------------------------------------------
# persistence


def _pack(magic: bytes, header: dict, arrays) -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    return magic + struct.pack("<I", len(head)) + head + blob


def _unpack(data: bytes, magic: bytes, what: str):
    if not data.startswith(magic):
        raise ValueError(f"not a {what} file (bad magic)")
    off = len(magic)
    (head_len,) = struct.unpack_from("<I", data, off)
    off += 4
    header = json.loads(data[off : off + head_len].decode())
    if header.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported {what} format version {header.get('format')!r}")
    blob = np.frombuffer(data[off + head_len :], dtype="<f8")
    return header, blob


def _codebook_payload(cb: Codebook) -> bytes:
    header = {
        "format": FORMAT_VERSION,
        "M": cb.size,
        "D": cb.dim,
        "m": cb.m,
        "w": cb.w,
        "epsilon": cb.epsilon,
        "pair_orientation": cb.pair_orientation,
        "basis": cb.basis_tag,
        "seed": cb.seed,
    }
    return _pack(b"", header, [cb.bounds.mins, cb.bounds.maxs, cb.centroids])


def save_codebook(cb: Codebook, path) -> None:
    Path(path).write_bytes(CODEBOOK_MAGIC + _codebook_payload(cb))


def load_codebook(path) -> Codebook:
    header, blob = _unpack(Path(path).read_bytes(), CODEBOOK_MAGIC, "codebook")
    if header["basis"] != LYNDON_BASIS_TAG:
        raise ValueError(
            f"codebook uses basis convention {header['basis']!r}; "
            f"this library produces {LYNDON_BASIS_TAG!r}"
        )
    M, D = header["M"], header["D"]
    if blob.size != 2 * D + M * D:
        raise ValueError("codebook payload size does not match header")
    bounds = RescaleBounds(blob[:D].copy(), blob[D : 2 * D].copy())
    centroids = blob[2 * D :].reshape(M, D).copy()
    return Codebook(
        centroids=centroids,
        bounds=bounds,
        m=header["m"],
        w=header["w"],
        epsilon=header["epsilon"],
        pair_orientation=header["pair_orientation"],
        seed=header["seed"],
        basis_tag=header["basis"],
    )


def save_feature_matrix(
    fm: FeatureMatrix, path, *, doc_id: str, writer_id: str, fingerprint: str
) -> None:
    header = {
        "format": FORMAT_VERSION,
        "M": fm.size,
        "doc_id": doc_id,
        "writer_id": writer_id,
        "pair_count": fm.pair_count,
        "codebook": fingerprint,
    }
    Path(path).write_bytes(_pack(MATRIX_MAGIC, header, [fm.matrix]))


def load_feature_matrix(path, expected_fingerprint: str | None = None):
    """Load a matrix file; returns (FeatureMatrix, header metadata)."""
    header, blob = _unpack(Path(path).read_bytes(), MATRIX_MAGIC, "feature matrix")
    if expected_fingerprint is not None and header["codebook"] != expected_fingerprint:
        raise FingerprintMismatchError(
            f"{path}: matrix was built with codebook {header['codebook'][:12]}..., "
            f"expected {expected_fingerprint[:12]}..."
        )
    M = header["M"]
    if blob.size != M * M:
        raise ValueError("matrix payload size does not match header")
    fm = FeatureMatrix(blob.reshape(M, M).copy(), header["pair_count"])
    return fm, header
