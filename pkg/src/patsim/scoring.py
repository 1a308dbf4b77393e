"""Scaled cosine similarity over citation edges.

Scores are 100 * cos(sender_vec, receiver_vec), accumulated in float64 on the
raw stored vectors. Edges are processed in chunks so the full pair list never
resides in memory; chunks may be scored by parallel workers and results are
merged back into input order.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .corpus import CitationEdge, CorpusStore
from .errors import ValidationError
from .psim import EmbeddingMatrix

SKIP_MISSING = "missing-row"
SKIP_ZERO_NORM = "zero-norm"


@dataclass
class ScoredEdges:
    pairs: list[tuple[CitationEdge, float]]
    skipped: list[tuple[CitationEdge, str]] = field(default_factory=list)

    def skip_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, reason in self.skipped:
            counts[reason] = counts.get(reason, 0) + 1
        return counts

    def scores(self) -> np.ndarray:
        return np.array([s for _, s in self.pairs], dtype=np.float64)


def _row_norms(data: np.ndarray, chunk: int = 65536) -> np.ndarray:
    norms = np.empty(data.shape[0], dtype=np.float64)
    for start in range(0, data.shape[0], chunk):
        block = data[start : start + chunk]
        norms[start : start + chunk] = np.sqrt(
            np.einsum("ij,ij->i", block, block, dtype=np.float64)
        )
    return norms


def _chunks(edges: Iterable[CitationEdge], size: int) -> Iterator[list[CitationEdge]]:
    it = iter(edges)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield block


def _score_chunk(
    chunk: list[CitationEdge],
    data: np.ndarray,
    norms: np.ndarray,
    index: dict[str, int],
) -> tuple[list[tuple[CitationEdge, float]], list[tuple[CitationEdge, str]]]:
    n = len(chunk)
    s_idx = np.fromiter(
        (index.get(e.sender_id, -1) for e in chunk), dtype=np.int64, count=n
    )
    r_idx = np.fromiter(
        (index.get(e.receiver_id, -1) for e in chunk), dtype=np.int64, count=n
    )
    present = (s_idx >= 0) & (r_idx >= 0)
    all_present = bool(present.all())
    sp = s_idx if all_present else s_idx[present]
    rp = r_idx if all_present else r_idx[present]
    # products of float32 values are exact in float64, so this accumulation
    # equals the naive per-pair 64-bit oracle without materializing casts
    dots = np.einsum("ij,ij->i", data[sp], data[rp], dtype=np.float64)
    denom = norms[sp] * norms[rp]
    ok = denom > 0.0
    values = 100.0 * dots / np.where(ok, denom, 1.0)
    if all_present and ok.all():
        return list(zip(chunk, values.tolist())), []
    pairs: list[tuple[CitationEdge, float]] = []
    skipped: list[tuple[CitationEdge, str]] = []
    sub = 0
    for i, e in enumerate(chunk):
        if not present[i]:
            skipped.append((e, SKIP_MISSING))
            continue
        if ok[sub]:
            pairs.append((e, float(values[sub])))
        else:
            skipped.append((e, SKIP_ZERO_NORM))
        sub += 1
    return pairs, skipped


def score_edges(
    matrix: EmbeddingMatrix,
    edges: Iterable[CitationEdge],
    chunk_size: int = 4096,
    workers: int = 1,
) -> ScoredEdges:
    """Score citation edges against the embedding matrix.

    Output order equals input edge order regardless of chunking or worker
    count. Edges with a missing endpoint row or a zero-norm vector are skipped
    with a reason, never failing the batch.
    """
    if chunk_size <= 0:
        raise ValidationError("chunk_size must be positive")
    if workers <= 0:
        raise ValidationError("workers must be positive")
    index = matrix.row_index()
    norms = _row_norms(matrix.data)
    result = ScoredEdges(pairs=[])
    if workers == 1:
        for chunk in _chunks(edges, chunk_size):
            pairs, skipped = _score_chunk(chunk, matrix.data, norms, index)
            result.pairs.extend(pairs)
            result.skipped.extend(skipped)
        return result
    # bounded pipeline: at most 2*workers chunks in flight, merged in order
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = []
        for chunk in _chunks(edges, chunk_size):
            pending.append(pool.submit(_score_chunk, chunk, matrix.data, norms, index))
            if len(pending) >= 2 * workers:
                pairs, skipped = pending.pop(0).result()
                result.pairs.extend(pairs)
                result.skipped.extend(skipped)
        for fut in pending:
            pairs, skipped = fut.result()
            result.pairs.extend(pairs)
            result.skipped.extend(skipped)
    return result


def write_scores_csv(scored_pairs: Iterable[tuple[CitationEdge, float]], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sender_id", "receiver_id", "similarity"])
        for edge, value in scored_pairs:
            w.writerow([edge.sender_id, edge.receiver_id, repr(float(value))])
            n += 1
    return n


def read_scores_csv(path) -> list[tuple[CitationEdge, float]]:
    pairs: list[tuple[CitationEdge, float]] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["sender_id", "receiver_id", "similarity"]:
            raise ValidationError(f"malformed header in {path}")
        for row in reader:
            if len(row) != 3:
                raise ValidationError(f"malformed row in {path}: {row!r}")
            pairs.append((CitationEdge(row[0], row[1]), float(row[2])))
    return pairs


def yearly_similarity_stats(
    scored_pairs: Sequence[tuple[CitationEdge, float]], corpus: CorpusStore
) -> list[tuple[int, float, int, float]]:
    """(year, mean, count, stddev) of scores grouped by sender grant year.

    Stddev is the population value, 0 for single-edge groups.
    """
    groups: dict[int, list[float]] = {}
    for edge, value in scored_pairs:
        year = corpus.grant_year(edge.sender_id)
        groups.setdefault(year, []).append(value)
    rows = []
    for year in sorted(groups):
        values = groups[year]
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / len(values)
        rows.append((year, mean, len(values), math.sqrt(var)))
    return rows
