"""Independent numerical oracles used to validate the library.

Nothing in here reuses the library's tensor-exponential/Chen machinery: the
signature oracle evaluates the iterated-integral definition directly by
quadrature on a fine refinement of the path, and the evaluation oracles are
naive re-implementations of ranking and accuracy counting.
"""

from __future__ import annotations

import numpy as np


def refine_polyline(points: np.ndarray, total_steps: int) -> np.ndarray:
    """Subdivide each segment so the whole path has ~total_steps linear steps.

    Steps are distributed across segments proportionally to arc length, at
    least one per segment, and the original vertices are always sample points.
    """
    pts = np.asarray(points, dtype=float)
    seg = np.diff(pts, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    n_seg = len(lengths)
    if lengths.sum() == 0:
        return pts
    raw = lengths / lengths.sum() * total_steps
    counts = np.maximum(1, np.round(raw).astype(int))
    out = [pts[0]]
    for i in range(n_seg):
        t = np.linspace(0.0, 1.0, counts[i] + 1)[1:]
        out.append(pts[i] + t[:, None] * seg[i])
    return np.vstack(out)


def riemann_iterated_integrals(points: np.ndarray, m: int, total_steps: int = 100_000):
    """All iterated integrals up to level m by quadrature on a refinement.

    Works level by level from the definition: the integral for word
    w + (j,) is the Riemann-Stieltjes sum of the running word-w integral
    against the j-th coordinate increments, using the trapezoidal value of
    the integrand on each step.  Returns dense per-level coefficient arrays
    in the same lexicographic word layout the library uses.
    """
    path = refine_polyline(points, total_steps)
    d = np.diff(path, axis=0)
    n = d.shape[0]
    levels = [np.ones(1)]
    # running[w] = value of the word-w integral at every sample point
    running = {(): np.ones(n + 1)}
    for k in range(1, m + 1):
        new_running = {}
        flat = np.zeros(2**k)
        idx = 0
        for word in _words_of_length(k):
            prefix = word[:-1]
            j = word[-1] - 1
            integrand = running[prefix]
            avg = 0.5 * (integrand[:-1] + integrand[1:])
            vals = np.concatenate(([0.0], np.cumsum(avg * d[:, j])))
            new_running[word] = vals
            flat[idx] = vals[-1]
            idx += 1
        running.update(new_running)
        levels.append(flat)
    return levels


def _words_of_length(k: int):
    """Words over {1, 2} of length k in lexicographic order."""
    words = [()]
    for _ in range(k):
        words = [w + (a,) for w in words for a in (1, 2)]
    return words


def naive_rank(query_id, matrices: dict, metric) -> list[tuple[str, float]]:
    """Ascending (candidate, distance) list; plain loops, tie-break by id."""
    rows = []
    for cand_id, mat in matrices.items():
        if cand_id == query_id:
            continue
        rows.append((cand_id, float(metric(matrices[query_id], mat))))
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


def naive_loo_accuracy(matrices: dict, writers: dict, metric, tops) -> dict[int, float]:
    """Leave-one-out Top-N accuracy by brute force."""
    hits = {n: 0 for n in tops}
    queries = 0
    for query_id in matrices:
        queries += 1
        ranking = naive_rank(query_id, matrices, metric)
        for n in tops:
            top = ranking[:n]
            if any(writers[cand] == writers[query_id] for cand, _ in top):
                hits[n] += 1
    return {n: hits[n] / queries for n in tops}
