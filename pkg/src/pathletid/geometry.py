"""Shared polyline type for contours and pathlets.

Coordinates are (x, y) with y growing downward (image convention).  This
orientation is load-bearing: log-signature features are not invariant to axis
flips, so every producer and consumer in the package sticks to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Polyline:
    """Ordered 2D point sequence; ``closed`` marks a contour ring.

    A closed polyline does not repeat its first point at the end.
    """

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be an (n, 2) array, got shape {pts.shape}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def arc_length(self) -> float:
        """Sum of segment lengths (including the closing edge if closed)."""
        pts = self.points
        if self.closed:
            pts = np.vstack([pts, pts[:1]])
        seg = np.diff(pts, axis=0)
        return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


def drop_repeated_points(points: np.ndarray, closed: bool) -> np.ndarray:
    """Remove consecutive duplicate vertices (cyclically for closed rings)."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] <= 1:
        return pts
    keep = np.any(pts != np.roll(pts, 1, axis=0), axis=1)
    if not closed:
        keep[0] = True
    if not np.any(keep):
        return pts[:1]
    return pts[keep]
