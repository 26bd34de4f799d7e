"""Distances between document descriptors and retrieval evaluation.

Documents are compared by their feature matrices under either the
Manhattan (L1) distance or the chi-squared histogram distance; both are
bounded by 2 on sum-1 matrices.  Identification is nearest-neighbour
retrieval: a query hits at rank N if any of its N closest gallery
documents was written by the same writer.  Evaluation supports the
leave-one-out protocol (every document queries the rest) and a
template/query split.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np

from .codebook import FeatureMatrix


@dataclass(frozen=True)
class DocumentDescriptor:
    """A document's identity plus its feature matrix."""

    doc_id: str
    writer_id: str
    matrix: FeatureMatrix
    source: str | None = None

    def __post_init__(self):
        if not self.doc_id or not self.writer_id:
            raise ValueError("document and writer ids must be nonempty")


@dataclass(frozen=True)
class RankingResult:
    """Gallery documents ordered by ascending distance to the query."""

    query_id: str
    ranking: tuple  # ((candidate id, distance), ...) ascending

    def top(self, n: int) -> tuple:
        return self.ranking[:n]


@dataclass(frozen=True)
class AccuracyReport:
    accuracies: dict  # N -> fraction of queries hit within top N
    num_queries: int
    metric: str


def _as_array(x) -> np.ndarray:
    return x.matrix if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=float)


def manhattan_distance(u, v) -> float:
    """Sum of absolute entry differences; <= 2 for sum-1 matrices."""
    a, b = _as_array(u), _as_array(v)
    if a.shape != b.shape:
        raise ValueError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def chi2_distance(u, v) -> float:
    """Chi-squared histogram distance; cells with zero total contribute 0."""
    a, b = _as_array(u), _as_array(v)
    if a.shape != b.shape:
        raise ValueError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    total = a + b
    mask = total > 0
    diff = a[mask] - b[mask]
    return float((diff * diff / total[mask]).sum())


METRICS = {"manhattan": manhattan_distance, "chi2": chi2_distance}


def default_metric(epsilon: float) -> str:
    """Metric pairing with the polygonization tolerance: chi2 at 0.2."""
    return "chi2" if epsilon == 0.2 else "manhattan"


def resolve_metric(metric):
    if callable(metric):
        return metric
    try:
        return METRICS[metric]
    except KeyError:
        raise ValueError(
            f"unknown metric {metric!r}; expected one of {sorted(METRICS)}"
        ) from None


def rank(
    query: DocumentDescriptor, gallery, metric="manhattan"
) -> RankingResult:
    """Full ascending ordering of the gallery; ties break by document id."""
    metric_fn = resolve_metric(metric)
    rows = [
        (metric_fn(query.matrix, cand.matrix), cand.doc_id)
        for cand in gallery
        if cand.doc_id != query.doc_id
    ]
    if not rows:
        raise ValueError("gallery is empty after excluding the query")
    rows.sort()
    return RankingResult(query.doc_id, tuple((doc, dist) for dist, doc in rows))


def _check_unique_ids(docs, label):
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate document ids in {label}")


def evaluate_loo(gallery, metric="manhattan", tops=(1, 10)) -> AccuracyReport:
    """Leave-one-out Top-N accuracy over every document in the gallery.

    A query whose writer has no other document can never hit; it is
    warned about and still counted in the denominator.
    """
    gallery = list(gallery)
    if len(gallery) < 2:
        raise ValueError("leave-one-out needs at least 2 documents")
    _check_unique_ids(gallery, "gallery")
    metric_fn = resolve_metric(metric)
    tops = sorted(set(tops))
    writer_docs = {}
    for doc in gallery:
        writer_docs[doc.writer_id] = writer_docs.get(doc.writer_id, 0) + 1
    if len(writer_docs) == 1:
        warnings.warn(
            "gallery contains a single writer; every retrieval is trivially correct"
        )
    writer_of = {doc.doc_id: doc.writer_id for doc in gallery}
    hits = {n: 0 for n in tops}
    for query in gallery:
        if writer_docs[query.writer_id] < 2:
            warnings.warn(
                f"writer {query.writer_id!r} has a single document; "
                f"query {query.doc_id!r} counts as a miss"
            )
            continue
        result = rank(query, gallery, metric_fn)
        for n in tops:
            if any(writer_of[cand] == query.writer_id for cand, _ in result.top(n)):
                hits[n] += 1
    metric_name = metric if isinstance(metric, str) else getattr(metric, "__name__", "custom")
    return AccuracyReport(
        {n: hits[n] / len(gallery) for n in tops}, len(gallery), metric_name
    )


def evaluate_queryset(
    templates, queries, metric="manhattan", tops=(1, 10)
) -> AccuracyReport:
    """Top-N accuracy of queries against a fixed template gallery."""
    templates, queries = list(templates), list(queries)
    if not templates or not queries:
        raise ValueError("need at least one template and one query")
    _check_unique_ids(templates + queries, "templates + queries")
    metric_fn = resolve_metric(metric)
    tops = sorted(set(tops))
    template_writers = {t.writer_id for t in templates}
    writer_of = {t.doc_id: t.writer_id for t in templates}
    hits = {n: 0 for n in tops}
    for query in queries:
        if query.writer_id not in template_writers:
            warnings.warn(
                f"query {query.doc_id!r}: writer {query.writer_id!r} has no "
                f"template; counts as a miss"
            )
            continue
        result = rank(query, templates, metric_fn)
        for n in tops:
            if any(writer_of[cand] == query.writer_id for cand, _ in result.top(n)):
                hits[n] += 1
    metric_name = metric if isinstance(metric, str) else getattr(metric, "__name__", "custom")
    return AccuracyReport(
        {n: hits[n] / len(queries) for n in tops}, len(queries), metric_name
    )


# ---------------------------------------------------------------------------
# reports

REPORT_COLUMNS = ("dataset", "Top-1", "Top-10", "w", "m", "M")


def _report_rows(entries):
    rows = []
    for e in entries:
        rows.append(
            (
                str(e["dataset"]),
                f"{e['top1']:.2f}",
                f"{e['top10']:.2f}",
                str(e["w"]),
                str(e["m"]),
                str(e["M"]),
            )
        )
    return rows


def format_report_csv(entries) -> str:
    """Accuracy table as CSV with Top-N values in percent."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(REPORT_COLUMNS)
    writer.writerows(_report_rows(entries))
    return out.getvalue()


def format_report_text(entries) -> str:
    """Human-readable accuracy table, one row per dataset/configuration."""
    rows = [REPORT_COLUMNS, *_report_rows(entries)]
    widths = [max(len(r[c]) for r in rows) for c in range(len(REPORT_COLUMNS))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    ]
    return "\n".join(lines) + "\n"
