"""Sliding-window contour fragments and their log-signature features.

A *pathlet* is a window of ``w`` consecutive vertices on a polygonized
contour, taken at stride 1 (wrapping around closed rings).  Its shape
descriptor is the truncated log path signature in the Lyndon basis,
made scale invariant by dividing the path increments by the pathlet's
arc length before the signature is computed — equivalent to dividing
each level-k coefficient by L**k, but better conditioned on pixel-scale
coordinates.

Documents are ultimately described by *pairs* of pathlets hinged at a
shared contour vertex.  Two orientation conventions are supported:

``traversal`` (default)
    Both windows run in contour-traversal order; the backward window
    ends at the hinge and the forward window starts there.
``outward``
    Both windows start at the hinge and move away from it, i.e. the
    backward window is reversed.

Features are a function of the point increments only, so translating a
pathlet leaves its feature vector unchanged whenever the increments are
preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Polyline
from .signature import (
    batch_hall_project,
    batch_signature_of_increments,
    batch_tensor_log,
    logsig_dim,
)

ORIENTATIONS = ("traversal", "outward")


@dataclass(frozen=True)
class Pathlet:
    """``w`` consecutive contour vertices, open, in window order."""

    points: np.ndarray  # (w, 2) float
    contour_id: int = 0
    anchor: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise ValueError("a pathlet needs at least 3 planar points")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PathletPair:
    """Two pathlets sharing a hinge vertex.

    With ``traversal`` orientation the hinge is backward's last point
    and forward's first; with ``outward`` it is the first point of both.
    """

    backward: Pathlet
    forward: Pathlet
    orientation: str = "traversal"

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"unknown orientation {self.orientation!r}")
        back = self.backward.points
        hinge_pt = back[-1] if self.orientation == "traversal" else back[0]
        if not np.array_equal(hinge_pt, self.forward.points[0]):
            raise ValueError("pathlet pair does not share a hinge point")

    @property
    def hinge(self) -> np.ndarray:
        return self.forward.points[0]


def _check_window_size(w: int) -> None:
    if w < 3:
        raise ValueError(f"pathlet size w must be >= 3, got {w}")


def window_indices(n: int, w: int, closed: bool) -> np.ndarray:
    """(num_windows, w) vertex indices of all stride-1 windows."""
    _check_window_size(w)
    if n < w:
        return np.empty((0, w), dtype=np.intp)
    num = n if closed else n - w + 1
    idx = np.arange(num, dtype=np.intp)[:, None] + np.arange(w, dtype=np.intp)
    return idx % n if closed else idx


def hinge_indices(n: int, w: int, closed: bool) -> np.ndarray:
    """Vertex indices that admit both a backward and a forward window."""
    _check_window_size(w)
    if n < 2 * w - 1:
        return np.empty(0, dtype=np.intp)
    if closed:
        return np.arange(n, dtype=np.intp)
    return np.arange(w - 1, n - w + 1, dtype=np.intp)


def extract_pathlets(contour: Polyline, w: int, contour_id: int = 0) -> list[Pathlet]:
    """All w-point windows of ``contour``, one per anchor vertex."""
    pts = contour.points
    idx = window_indices(len(pts), w, contour.closed)
    return [Pathlet(pts[row], contour_id, int(row[0])) for row in idx]


def extract_pairs(
    contour: Polyline,
    w: int,
    orientation: str = "traversal",
    contour_id: int = 0,
) -> list[PathletPair]:
    """One hinged pathlet pair per eligible contour vertex."""
    if orientation not in ORIENTATIONS:
        raise ValueError(f"unknown orientation {orientation!r}")
    pts = contour.points
    n = len(pts)
    pairs = []
    for i in hinge_indices(n, w, contour.closed):
        back_idx = (np.arange(i - w + 1, i + 1)) % n
        fwd_idx = (np.arange(i, i + w)) % n
        if orientation == "outward":
            back_idx = back_idx[::-1]
        pairs.append(
            PathletPair(
                Pathlet(pts[back_idx], contour_id, int(back_idx[0])),
                Pathlet(pts[fwd_idx], contour_id, int(i)),
                orientation,
            )
        )
    return pairs


def pathlet_features(windows: np.ndarray, m: int) -> np.ndarray:
    """Pre-rescale feature vectors for a batch of (N, w, 2) windows.

    Each window's increments are divided by its arc length, then the
    log signature is computed and projected on the Lyndon basis.
    """
    arr = np.asarray(windows, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("expected an (N, w, 2) window array")
    w = arr.shape[1]
    if not 1 < m < w:
        raise ValueError(f"truncation level must satisfy 1 < m < w, got m={m}, w={w}")
    diffs = np.diff(arr, axis=1)
    lengths = np.linalg.norm(diffs, axis=2).sum(axis=1)
    if np.any(lengths <= 0):
        raise ValueError("pathlet with zero arc length")
    scaled = diffs / lengths[:, None, None]
    sig = batch_signature_of_increments(scaled, m)
    return batch_hall_project(batch_tensor_log(sig))


def lps_feature(p: Pathlet | np.ndarray, m: int) -> np.ndarray:
    """Length-normalized log-signature feature of one pathlet."""
    pts = p.points if isinstance(p, Pathlet) else np.asarray(p, dtype=float)
    return pathlet_features(pts[None], m)[0]


def contour_pair_features(
    contour: Polyline,
    w: int,
    m: int,
    orientation: str = "traversal",
) -> tuple[np.ndarray, np.ndarray]:
    """(backward, forward) feature arrays for every hinged pair.

    Each anchored window's feature is computed once and shared between
    the pairs that reference it.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"unknown orientation {orientation!r}")
    pts = contour.points
    n = len(pts)
    hinges = hinge_indices(n, w, contour.closed)
    if hinges.size == 0:
        dim = logsig_dim(m)
        return np.empty((0, dim)), np.empty((0, dim))
    # anchored[a] is the feature of the traversal-order window starting at
    # vertex a; every hinge's two windows are anchored windows, so each
    # window feature is computed once.
    anchored = pathlet_features(pts[window_indices(n, w, contour.closed)], m)
    back_anchor = (hinges - w + 1) % n if contour.closed else hinges - w + 1
    forward = anchored[hinges]
    if orientation == "traversal":
        backward = anchored[back_anchor]
    else:
        back_windows = np.stack(
            [pts[(np.arange(i, i - w, -1)) % n] for i in hinges]
        )
        backward = pathlet_features(back_windows, m)
    return backward, forward


@dataclass(frozen=True)
class RescaleBounds:
    """Per-dimension (min, max) of the training feature pool."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("bounds must be matching 1-D arrays")
        if np.any(mins > maxs):
            raise ValueError("per-dimension min exceeds max")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def dim(self) -> int:
        return len(self.mins)


def fit_rescale(features: np.ndarray) -> RescaleBounds:
    """Learn per-dimension bounds mapping the pool onto [-1, 1]."""
    arr = np.asarray(features, dtype=float)
    if arr.size == 0:
        raise ValueError("empty feature pool")
    if arr.ndim != 2:
        raise ValueError("expected an (N, D) feature array")
    return RescaleBounds(arr.min(axis=0), arr.max(axis=0))


def apply_rescale(features: np.ndarray, bounds: RescaleBounds) -> np.ndarray:
    """Affine map [min, max] -> [-1, 1] per dimension, clamped.

    Dimensions that were constant on the training pool map to 0.
    """
    arr = np.asarray(features, dtype=float)
    if arr.shape[-1] != bounds.dim:
        raise ValueError(
            f"feature dimension {arr.shape[-1]} does not match bounds ({bounds.dim})"
        )
    span = bounds.maxs - bounds.mins
    safe = np.where(span == 0, 1.0, span)
    out = 2.0 * (arr - bounds.mins) / safe - 1.0
    out = np.where(span == 0, 0.0, out)
    return np.clip(out, -1.0, 1.0)
