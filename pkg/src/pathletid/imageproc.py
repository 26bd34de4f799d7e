"""Page image to polygonized ink contours.

Stages: Otsu binarization (dark ink on light paper unless inverted), border
following to extract closed contour rings for every connected ink component
(outer borders and hole borders), and tolerance-driven polyline simplification
of each ring.

Images are numpy arrays: grayscale pages are (H, W) uint8, ink masks are
(H, W) bool.  Contour points are (x, y) = (column, row); y grows downward.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import Polyline, drop_repeated_points


def load_gray(path) -> np.ndarray:
    """Read a PNG or PGM page as 8-bit grayscale; color inputs use luminance."""
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        return np.asarray(im, dtype=np.uint8)


def otsu_threshold(img: np.ndarray) -> float:
    """Split point maximizing between-class variance of the 256-bin histogram.

    Returns t + 0.5 where bins [0..t] form the dark class, so "darker than
    threshold" is an exact strict comparison.  Ties pick the lowest t, which
    makes the result deterministic for flat histogram plateaus.
    """
    img = np.asarray(img)
    if img.size == 0:
        raise ValueError("empty image")
    hist = np.bincount(img.ravel().astype(np.uint8), minlength=256).astype(float)
    total = hist.sum()
    weighted = hist * np.arange(256)
    w0 = np.cumsum(hist)
    sum0 = np.cumsum(weighted)
    w1 = total - w0
    between = np.zeros(256)
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.divide(sum0, w0, out=np.zeros(256), where=valid)
    mu1 = np.divide(weighted.sum() - sum0, w1, out=np.zeros(256), where=valid)
    between[valid] = w0[valid] * w1[valid] * (mu0[valid] - mu1[valid]) ** 2
    t = int(np.argmax(between[:255]))
    return t + 0.5


def otsu_binarize(img: np.ndarray, invert: bool = False) -> tuple[np.ndarray, float]:
    """Ink mask plus the Otsu threshold.

    Ink is strictly darker than the threshold; ``invert`` flips the polarity
    for light-on-dark pages.  A mask that is entirely ink or entirely empty
    is flagged with a warning (degenerate page, e.g. constant intensity).
    """
    threshold = otsu_threshold(img)
    mask = (img > threshold) if invert else (img < threshold)
    if mask.all() or not mask.any():
        warnings.warn(
            "binarization produced an empty or full ink mask; "
            "the page may be blank or constant",
            stacklevel=2,
        )
    return mask, threshold


@dataclass(frozen=True)
class Contour:
    """Closed border ring: (n, 2) integer (x, y) points, consecutive 8-adjacent."""

    points: np.ndarray
    is_hole: bool


# Moore neighborhood in counterclockwise order for y-down images:
# E, NE, N, NW, W, SW, S, SE as (di, dj).
_NEIGHBORS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
_DIR_OF = {d: i for i, d in enumerate(_NEIGHBORS)}


def trace_contours(mask: np.ndarray, min_perimeter: int = 10) -> list[Contour]:
    """Border following over all 8-connected ink components.

    Every component contributes its outer border; interior holes (the loop of
    an 'o') contribute their own rings.  Rings with fewer than
    ``min_perimeter`` points are dropped as speckle noise.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("ink mask must be 2-D")
    # frame of background so border following never leaves the array
    f = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=np.int32)
    f[1:-1, 1:-1] = mask
    ink = f > 0
    left_bg = ~np.roll(ink, 1, axis=1)
    right_bg = ~np.roll(ink, -1, axis=1)
    candidates = np.argwhere(ink & (left_bg | right_bg))

    contours: list[Contour] = []
    nbd = 1
    for i, j in candidates:
        val = f[i, j]
        if val == 1 and f[i, j - 1] == 0:
            is_hole = False
            start_dir = _DIR_OF[(0, -1)]
        elif val >= 1 and f[i, j + 1] == 0:
            is_hole = True
            start_dir = _DIR_OF[(0, 1)]
        else:
            continue
        nbd += 1
        ring = _follow_border(f, int(i), int(j), start_dir, nbd)
        if len(ring) >= min_perimeter:
            pts = np.array([(c - 1, r - 1) for r, c in ring], dtype=np.int64)
            contours.append(Contour(points=pts, is_hole=is_hole))
    return contours


def _follow_border(f: np.ndarray, i: int, j: int, start_dir: int, nbd: int):
    """Trace one closed border starting at (i, j); marks visited pixels in f."""
    # clockwise sweep for the first nonzero neighbor
    found = -1
    for t in range(8):
        d = (start_dir - t) % 8
        di, dj = _NEIGHBORS[d]
        if f[i + di, j + dj] != 0:
            found = d
            break
    if found < 0:
        f[i, j] = -nbd
        return [(i, j)]

    i1, j1 = i + _NEIGHBORS[found][0], j + _NEIGHBORS[found][1]
    i2, j2 = i1, j1
    i3, j3 = i, j
    ring = [(i, j)]
    while True:
        # counterclockwise sweep around (i3, j3), starting after (i2, j2)
        back = _DIR_OF[(i2 - i3, j2 - j3)]
        east_was_zero = False
        for t in range(1, 9):
            d = (back + t) % 8
            di, dj = _NEIGHBORS[d]
            if f[i3 + di, j3 + dj] != 0:
                i4, j4 = i3 + di, j3 + dj
                break
            if d == 0:
                east_was_zero = True
        if east_was_zero:
            f[i3, j3] = -nbd
        elif f[i3, j3] == 1:
            f[i3, j3] = nbd
        if (i4, j4) == (i, j) and (i3, j3) == (i1, j1):
            return ring
        i2, j2 = i3, j3
        i3, j3 = i4, j4
        ring.append((i3, j3))


def polygonize(contour, epsilon: float) -> Polyline:
    """Simplify a closed contour ring to tolerance ``epsilon``.

    Recursive endpoint-fit simplification adapted to closed curves: the ring
    is split at its two mutually farthest vertices and each half is simplified
    independently.  The surviving vertices are a (cyclic) subsequence of the
    ring, and every dropped point stays within ``epsilon`` of the output.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    pts = contour.points if isinstance(contour, Contour) else np.asarray(contour)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("contour must be an (n, 2) array of points")
    n = pts.shape[0]
    if n <= 3:
        return Polyline(drop_repeated_points(pts, closed=True), closed=True)

    a, b = _farthest_pair(pts)
    if a == b:  # fully degenerate ring (all points equal)
        return Polyline(pts[:1], closed=True)
    rolled = np.roll(pts, -a, axis=0)
    split = (b - a) % n
    arc1 = rolled[: split + 1]
    arc2 = np.vstack([rolled[split:], rolled[:1]])
    keep1 = _endpoint_fit(arc1, epsilon)
    keep2 = _endpoint_fit(arc2, epsilon)
    out = np.vstack([arc1[keep1][:-1], arc2[keep2][:-1]])
    return Polyline(drop_repeated_points(out, closed=True), closed=True)


def _farthest_pair(pts: np.ndarray) -> tuple[int, int]:
    """Indices of the two mutually farthest points (ring diameter)."""
    n = pts.shape[0]
    idx = np.arange(n)
    if n > 64:
        try:
            from scipy.spatial import ConvexHull

            hull = ConvexHull(pts)
            idx = hull.vertices
        except Exception:
            pass  # degenerate (e.g. collinear) rings fall back to brute force
    sub = pts[idx]
    d2 = np.sum((sub[:, None, :] - sub[None, :, :]) ** 2, axis=2)
    a, b = np.unravel_index(np.argmax(d2), d2.shape)
    ia, ib = int(idx[a]), int(idx[b])
    return (ia, ib) if ia <= ib else (ib, ia)


def _endpoint_fit(arc: np.ndarray, epsilon: float) -> np.ndarray:
    """Boolean keep-mask for an open arc; both endpoints always kept."""
    n = arc.shape[0]
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        s, e = stack.pop()
        if e - s < 2:
            continue
        d = _segment_distance(arc[s + 1 : e], arc[s], arc[e])
        worst = int(np.argmax(d))
        if d[worst] > epsilon:
            mid = s + 1 + worst
            keep[mid] = True
            stack.append((s, mid))
            stack.append((mid, e))
    return keep


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        diff = pts - a
        return np.hypot(diff[:, 0], diff[:, 1])
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    diff = pts - proj
    return np.hypot(diff[:, 0], diff[:, 1])


def page_polylines(
    img: np.ndarray,
    epsilon: float,
    min_perimeter: int = 10,
    include_holes: bool = True,
    invert: bool = False,
) -> list[Polyline]:
    """Full page pipeline: binarize, trace, polygonize, drop tiny rings."""
    mask, _ = otsu_binarize(img, invert=invert)
    polys = []
    for contour in trace_contours(mask, min_perimeter=min_perimeter):
        if contour.is_hole and not include_holes:
            continue
        poly = polygonize(contour, epsilon)
        if len(poly) >= 3:
            polys.append(poly)
    return polys


def save_gray(img: np.ndarray, path) -> None:
    """Write an (H, W) uint8 array as PNG or PGM based on the suffix."""
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(Path(path))
