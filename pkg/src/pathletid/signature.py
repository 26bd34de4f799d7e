"""Truncated tensor algebra over R^2 for path signatures of piecewise-linear paths.

A path signature is the full collection of iterated integrals of a path,
organised by multi-index words over the alphabet {1, 2} (1 = x, 2 = y).  For a
piecewise-linear path the signature is computed exactly: each straight segment
contributes the tensor exponential of its displacement, and segments are
combined with Chen's identity (signature of a concatenation = truncated tensor
product of the pieces).

The log signature is the truncated tensor logarithm of the signature.  It is a
Lie element, so it is fully described by its coefficients on a basis of the
free Lie algebra; here the Lyndon-word basis for d=2 is used (see
``LYNDON_BASIS_TAG`` for the exact convention).  With this convention the
single level-2 coefficient equals (S^12 - S^21) / 2, i.e. the signed (Levy)
area between the path and its chord.

Coefficient layout: level k is a dense vector of length 2**k; the word
(i_1, ..., i_k) with i_j in {1, 2} sits at flat index
sum_j (i_j - 1) * 2**(k - j), i.e. words are enumerated lexicographically.

All functions are pure; values are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DIM = 2  # planar paths only

#: Identifies the log-signature coefficient convention.  Stored in codebook
#: files so features produced under a different convention can never be mixed.
LYNDON_BASIS_TAG = "lyndon-d2/level-major-lex/bracket[u,v]=uv-vu/level2=(S12-S21)/2"

#: Residual above which a vector handed to hall_project is rejected as not
#: being a Lie element (it then cannot be a tensor logarithm of a signature).
LIE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class TensorSeries:
    """Element of the tensor algebra over R^2 truncated at ``level``.

    ``levels[k]`` holds the 2**k coefficients of tensor degree k;
    ``levels[0]`` is the scalar term.
    """

    levels: tuple[np.ndarray, ...]

    @property
    def level(self) -> int:
        return len(self.levels) - 1

    def coefficient(self, word: tuple[int, ...]) -> float:
        """Coefficient of the multi-index ``word`` (letters in {1, 2})."""
        return float(self.levels[len(word)][word_index(word)])

    def is_group_like(self, tol: float = 1e-12) -> bool:
        return abs(float(self.levels[0][0]) - 1.0) <= tol


@dataclass(frozen=True)
class LogSigVector:
    """Dense log-signature coefficients in Lyndon-basis order (level-major)."""

    coeffs: np.ndarray
    truncation_level: int


def word_index(word: tuple[int, ...]) -> int:
    idx = 0
    for letter in word:
        if letter not in (1, 2):
            raise ValueError(f"letters must be 1 or 2, got {letter}")
        idx = idx * 2 + (letter - 1)
    return idx


def _check_level(m: int) -> None:
    if m < 1:
        raise ValueError(f"truncation level must be >= 1, got {m}")


def identity_series(m: int) -> TensorSeries:
    """Multiplicative unit: 1 at level 0, zero elsewhere."""
    _check_level(m)
    levels = [np.zeros(2**k) for k in range(m + 1)]
    levels[0][0] = 1.0
    return TensorSeries(tuple(levels))


def zero_series(m: int) -> TensorSeries:
    _check_level(m)
    return TensorSeries(tuple(np.zeros(2**k) for k in range(m + 1)))


def segment_signature(displacement, m: int) -> TensorSeries:
    """Signature of one straight segment with the given 2D displacement.

    Closed form: the tensor exponential of the displacement, so the level-k
    coefficient for word (i_1, ..., i_k) is (prod_j d[i_j]) / k!.
    """
    _check_level(m)
    d = np.asarray(displacement, dtype=float)
    if d.shape != (DIM,):
        raise ValueError(f"displacement must be a 2-vector, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ValueError("displacement components must be finite")
    levels = [np.ones(1)]
    power = np.ones(1)
    for k in range(1, m + 1):
        power = np.kron(power, d)
        levels.append(power / math.factorial(k))
    return TensorSeries(tuple(levels))


def _tensor_product(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    """Truncated tensor (concatenation) product, no group-like requirement."""
    if a.level != b.level:
        raise ValueError(f"truncation levels differ: {a.level} vs {b.level}")
    m = a.level
    out = []
    for k in range(m + 1):
        acc = np.zeros(2**k)
        for p in range(k + 1):
            acc += np.kron(a.levels[p], b.levels[k - p])
        out.append(acc)
    return TensorSeries(tuple(out))


def chen_concat(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    """Signature of the concatenated path, given signatures of the pieces.

    Both inputs must be group-like (level-0 coefficient 1).
    """
    if not a.is_group_like() or not b.is_group_like():
        raise ValueError("chen_concat requires group-like inputs (level-0 coefficient 1)")
    return _tensor_product(a, b)


def path_signature(points, m: int) -> TensorSeries:
    """Signature of the piecewise-linear path through ``points`` ((n, 2) array).

    Zero-length segments are dropped (they contribute identity factors).
    """
    _check_level(m)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != DIM or pts.shape[0] < 2:
        raise ValueError("path must be an (n, 2) array with n >= 2")
    diffs = np.diff(pts, axis=0)
    diffs = diffs[np.any(diffs != 0.0, axis=1)]
    sig = identity_series(m)
    for d in diffs:
        sig = _tensor_product(sig, segment_signature(d, m))
    return sig


def tensor_log(s: TensorSeries) -> TensorSeries:
    """Truncated tensor logarithm: sum_{n>=1} (-1)^(n+1)/n (s - 1)^(x) n."""
    if not s.is_group_like():
        raise ValueError("tensor_log requires level-0 coefficient 1")
    m = s.level
    x = TensorSeries((np.zeros(1),) + s.levels[1:])
    acc = [lv.copy() for lv in x.levels]
    power = x
    for n in range(2, m + 1):
        power = _tensor_product(power, x)
        c = (-1.0) ** (n + 1) / n
        for k in range(m + 1):
            acc[k] += c * power.levels[k]
    return TensorSeries(tuple(acc))


def tensor_exp(s: TensorSeries) -> TensorSeries:
    """Truncated tensor exponential; inverse of ``tensor_log``."""
    if abs(float(s.levels[0][0])) > 1e-12:
        raise ValueError("tensor_exp requires level-0 coefficient 0")
    m = s.level
    x = TensorSeries((np.zeros(1),) + s.levels[1:])
    acc = [lv.copy() for lv in identity_series(m).levels]
    power = identity_series(m)
    for n in range(1, m + 1):
        power = _tensor_product(power, x)
        c = 1.0 / math.factorial(n)
        for k in range(m + 1):
            acc[k] += c * power.levels[k]
    return TensorSeries(tuple(acc))


# ---------------------------------------------------------------------------
# Lyndon basis of the free Lie algebra on {1, 2}


@lru_cache(maxsize=None)
def lyndon_words(max_len: int) -> tuple[tuple[int, ...], ...]:
    """All Lyndon words over {1, 2} of length <= max_len, level-major then lex."""
    words: list[tuple[int, ...]] = []
    w = [0]
    while w:
        w[-1] += 1
        words.append(tuple(w))
        period = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - period])
        while w and w[-1] == 2:
            w.pop()
    words.sort(key=lambda t: (len(t), t))
    return tuple(words)


@lru_cache(maxsize=None)
def _standard_bracketing(word: tuple[int, ...]):
    """Binary bracket tree of a Lyndon word via its standard factorization.

    The split point is the longest proper suffix that is itself Lyndon
    (equivalently the lexicographically smallest proper suffix).
    """
    if len(word) == 1:
        return word[0]
    suffixes = [word[i:] for i in range(1, len(word))]
    v = min(suffixes)
    u = word[: len(word) - len(v)]
    return (_standard_bracketing(u), _standard_bracketing(v))


def _expand_bracket(tree) -> np.ndarray:
    """Expand a bracket tree into its homogeneous tensor-algebra vector."""
    if isinstance(tree, int):
        e = np.zeros(DIM)
        e[tree - 1] = 1.0
        return e
    left = _expand_bracket(tree[0])
    right = _expand_bracket(tree[1])
    return np.kron(left, right) - np.kron(right, left)


@lru_cache(maxsize=None)
def _level_expansion(k: int) -> np.ndarray:
    """(2**k, n_k) matrix whose columns expand the level-k Lyndon brackets."""
    words = [w for w in lyndon_words(k) if len(w) == k]
    cols = [_expand_bracket(_standard_bracketing(w)) for w in words]
    return np.column_stack(cols)


@lru_cache(maxsize=None)
def _level_projection(k: int) -> np.ndarray:
    """Pseudo-inverse of the level-k expansion matrix (exact on Lie elements)."""
    return np.linalg.pinv(_level_expansion(k))


def logsig_dim(m: int) -> int:
    """Dimension of the truncated log signature (Witt formula for d=2)."""
    _check_level(m)
    return len(lyndon_words(m))


def logsig_level_dims(m: int) -> list[int]:
    """Number of basis coefficients contributed by each level 1..m."""
    _check_level(m)
    counts = [0] * m
    for w in lyndon_words(m):
        counts[len(w) - 1] += 1
    return counts


def hall_project(logseries: TensorSeries, residual_tol: float = LIE_RESIDUAL_TOL) -> LogSigVector:
    """Coefficients of a Lie element on the Lyndon basis.

    Raises ValueError if the input fails to reconstruct within
    ``residual_tol`` -- a non-Lie input means the upstream log/signature
    computation is broken.
    """
    m = logseries.level
    _check_level(m)
    if abs(float(logseries.levels[0][0])) > residual_tol:
        raise ValueError("a Lie element has zero scalar term")
    blocks = []
    for k in range(1, m + 1):
        coeffs = _level_projection(k) @ logseries.levels[k]
        residual = _level_expansion(k) @ coeffs - logseries.levels[k]
        if np.max(np.abs(residual)) > residual_tol:
            raise ValueError(
                f"input is not a Lie element: level-{k} reconstruction residual "
                f"{np.max(np.abs(residual)):.3e} exceeds {residual_tol:.1e}"
            )
        blocks.append(coeffs)
    return LogSigVector(np.concatenate(blocks), m)


def hall_expand(v: LogSigVector) -> TensorSeries:
    """Rebuild the tensor-algebra log series from Lyndon-basis coefficients."""
    m = v.truncation_level
    dims = logsig_level_dims(m)
    if v.coeffs.shape != (sum(dims),):
        raise ValueError(f"expected {sum(dims)} coefficients, got {v.coeffs.shape}")
    levels = [np.zeros(1)]
    start = 0
    for k in range(1, m + 1):
        block = v.coeffs[start : start + dims[k - 1]]
        start += dims[k - 1]
        levels.append(_level_expansion(k) @ block)
    return TensorSeries(tuple(levels))


def log_signature(points, m: int) -> LogSigVector:
    """Lyndon-basis log signature of a piecewise-linear path."""
    return hall_project(tensor_log(path_signature(points, m)))


# ---------------------------------------------------------------------------
# Batched variants used for bulk pathlet featurization.  A batched series is a
# list of arrays [(n, 1), (n, 2), (n, 4), ...]; row i is one path.  These match
# the scalar functions exactly (same operations, vectorised over rows).


def _batch_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def _batch_segment_levels(d: np.ndarray, m: int) -> list[np.ndarray]:
    n = d.shape[0]
    levels = [np.ones((n, 1))]
    power = np.ones((n, 1))
    for k in range(1, m + 1):
        power = _batch_kron(power, d)
        levels.append(power / math.factorial(k))
    return levels


def _batch_product(a: list[np.ndarray], b: list[np.ndarray]) -> list[np.ndarray]:
    m = len(a) - 1
    return [
        sum(_batch_kron(a[p], b[k - p]) for p in range(k + 1))
        for k in range(m + 1)
    ]


def batch_signature_of_increments(diffs: np.ndarray, m: int) -> list[np.ndarray]:
    """Signatures from per-segment displacements (n_paths, n_segs, 2).

    Depends on the increments only, so callers that need exact
    translation invariance should diff their points before any other
    arithmetic and feed the result here.
    """
    _check_level(m)
    d = np.asarray(diffs, dtype=float)
    if d.ndim != 3 or d.shape[2] != DIM or d.shape[1] < 1:
        raise ValueError("expected an (n_paths, n_segs >= 1, 2) array")
    sig = _batch_segment_levels(d[:, 0, :], m)
    for s in range(1, d.shape[1]):
        sig = _batch_product(sig, _batch_segment_levels(d[:, s, :], m))
    return sig


def batch_path_signature(points: np.ndarray, m: int) -> list[np.ndarray]:
    """Signatures of ``points`` (n_paths, n_pts, 2), one row per path."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 3 or pts.shape[2] != DIM or pts.shape[1] < 2:
        raise ValueError("expected an (n_paths, n_pts >= 2, 2) array")
    return batch_signature_of_increments(np.diff(pts, axis=1), m)


def batch_tensor_log(sig: list[np.ndarray]) -> list[np.ndarray]:
    m = len(sig) - 1
    n = sig[0].shape[0]
    x = [np.zeros((n, 1))] + [lv.copy() for lv in sig[1:]]
    acc = [lv.copy() for lv in x]
    power = x
    for order in range(2, m + 1):
        power = _batch_product(power, x)
        c = (-1.0) ** (order + 1) / order
        for k in range(m + 1):
            acc[k] += c * power[k]
    return acc


def batch_hall_project(logsig: list[np.ndarray], residual_tol: float = LIE_RESIDUAL_TOL) -> np.ndarray:
    """(n_paths, logsig_dim(m)) Lyndon coefficients of batched log series."""
    m = len(logsig) - 1
    blocks = []
    for k in range(1, m + 1):
        coeffs = logsig[k] @ _level_projection(k).T
        residual = coeffs @ _level_expansion(k).T - logsig[k]
        worst = np.max(np.abs(residual)) if residual.size else 0.0
        if worst > residual_tol:
            raise ValueError(
                f"batch contains a non-Lie element: level-{k} residual {worst:.3e}"
            )
        blocks.append(coeffs)
    return np.concatenate(blocks, axis=1)
