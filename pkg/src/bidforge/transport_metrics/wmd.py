"""Word Mover's Distance over exact transport, with centroid (wcd) and
relaxed (rwmd) lower bounds, plus the diversity report over generated
concepts.

Both wcd and rwmd are lower bounds on the exact distance. Note that neither
bound dominates the other: with skewed weights the centroid distance can
exceed the relaxed bound, so ``max(wcd, rwmd)`` is the tightest cheap bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyDocument
from .embeddings import EmbeddingTable
from .nbow import NBowDoc, to_nbow
from .solver import TransportProblem, solve_transport

HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class WmdResult:
    distance: float
    flow: np.ndarray
    wcd: float
    rwmd: float


def _require_nonempty(*docs: NBowDoc) -> None:
    for doc in docs:
        if len(doc) == 0:
            raise EmptyDocument("nbow document has no words")


def _cost_matrix(a: NBowDoc, b: NBowDoc) -> np.ndarray:
    diff = a.vectors[:, None, :] - b.vectors[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def wcd(a: NBowDoc, b: NBowDoc) -> float:
    """Word-centroid distance: Euclidean distance between the two
    weight-averaged embeddings. Lower bound on wmd."""
    _require_nonempty(a, b)
    centroid_a = a.weights @ a.vectors
    centroid_b = b.weights @ b.vectors
    diff = centroid_a - centroid_b
    return float(np.sqrt((diff * diff).sum()))


def rwmd(a: NBowDoc, b: NBowDoc) -> float:
    """Relaxed distance: each word ships its full weight to the nearest
    counterpart; the max of the two one-sided solutions. Lower bound on wmd."""
    _require_nonempty(a, b)
    cost = _cost_matrix(a, b)
    l_ab = float(a.weights @ cost.min(axis=1))
    l_ba = float(b.weights @ cost.min(axis=0))
    return max(l_ab, l_ba)


def wmd(a: NBowDoc, b: NBowDoc) -> WmdResult:
    """Exact Word Mover's Distance: minimum-cost transport of a's word mass
    to b's over Euclidean embedding distances."""
    _require_nonempty(a, b)
    cost = _cost_matrix(a, b)
    flow, objective = solve_transport(
        TransportProblem(supply=a.weights, demand=b.weights, cost=cost)
    )
    l_ab = float(a.weights @ cost.min(axis=1))
    l_ba = float(b.weights @ cost.min(axis=0))
    return WmdResult(distance=objective, flow=flow, wcd=wcd(a, b), rwmd=max(l_ab, l_ba))


@dataclass(frozen=True)
class DiversityReport:
    """Distribution of WMD(concept innovation, reference innovation)."""

    reference: str
    distances: tuple[float, ...]
    concept_ids: tuple[str, ...]
    skipped: tuple[str, ...]
    summary: dict
    by_type: dict
    histogram: dict

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "count": len(self.distances),
            "summary": self.summary,
            "by_type": self.by_type,
            "histogram": self.histogram,
            "skipped": list(self.skipped),
            "distances": [
                {"concept_id": cid, "distance": d}
                for cid, d in zip(self.concept_ids, self.distances)
            ],
        }


def diversity_report(
    concepts: Sequence,
    reference_innovation: str,
    table: EmbeddingTable,
    stopwords: frozenset[str] = frozenset(),
    bins: int = HISTOGRAM_BINS,
) -> DiversityReport:
    """Per-concept WMD between each innovation text and the reference
    innovation. Concepts whose innovation yields no usable tokens are
    reported as skipped, not fatal; an unusable reference is fatal."""
    ref_doc = to_nbow(reference_innovation, table, stopwords)
    ids: list[str] = []
    distances: list[float] = []
    types: list[str] = []
    skipped: list[str] = []
    for concept in concepts:
        cid = getattr(concept, "concept_id", None) or str(len(ids) + len(skipped))
        try:
            doc = to_nbow(concept.innovation, table, stopwords)
        except EmptyDocument:
            skipped.append(cid)
            continue
        ids.append(cid)
        gtype = getattr(concept, "gtype", None)
        types.append(getattr(gtype, "value", str(gtype)) if gtype else "unknown")
        distances.append(wmd(doc, ref_doc).distance)

    arr = np.array(distances, dtype=np.float64)
    if arr.size == 0:
        summary: dict = {}
        histogram: dict = {"bin_edges": [], "counts": []}
    else:
        summary = {
            "min": float(arr.min()),
            "max": float(arr.max()),
            "mean": float(arr.mean()),
            "median": float(np.median(arr)),
            "q1": float(np.percentile(arr, 25)),
            "q3": float(np.percentile(arr, 75)),
        }
        upper = float(arr.max()) if float(arr.max()) > 0 else 1.0
        counts, edges = np.histogram(arr, bins=bins, range=(0.0, upper))
        histogram = {"bin_edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}
    by_type: dict = {}
    for gtype in sorted(set(types)):
        values = [d for d, t in zip(distances, types) if t == gtype]
        by_type[gtype] = {"count": len(values), "mean": float(np.mean(values))}
    return DiversityReport(
        reference=reference_innovation,
        distances=tuple(distances),
        concept_ids=tuple(ids),
        skipped=tuple(skipped),
        summary=summary,
        by_type=by_type,
        histogram=histogram,
    )
