"""Patent metadata and citation edge ingestion.

Input is pre-extracted CSV (see PATENT_HEADER / CITATION_HEADER); the store
is immutable after validation and safe for shared read-only access.
"""

from __future__ import annotations

import csv
import enum
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from . import dates, ipc
from .errors import ValidationError

PATENT_HEADER = [
    "patent_id",
    "grant_date",
    "abstract",
    "ipc_codes",
    "assignee_kind",
    "assignee_id",
    "is_utility",
]
CITATION_HEADER = ["sender_id", "receiver_id"]

_BOOL = {"true": True, "1": True, "false": False, "0": False}


class AssigneeKind(enum.Enum):
    ORGANIZATION = "org"
    INDIVIDUAL = "individual"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PatentRecord:
    patent_id: str
    grant_date: int  # days since 1970-01-01
    abstract_text: str
    ipc_codes: tuple[ipc.IpcCode, ...]
    assignee_kind: AssigneeKind
    assignee_id: str
    is_utility: bool


@dataclass(frozen=True)
class CitationEdge:
    sender_id: str
    receiver_id: str


@dataclass(frozen=True)
class CorpusStore:
    patents: dict[str, PatentRecord]
    edges: tuple[CitationEdge, ...]
    provenance: dict = field(default_factory=dict)
    patent_rejects: tuple[tuple[int, str], ...] = ()
    edge_rejects: tuple[tuple[int, str], ...] = ()

    def grant_year(self, patent_id: str) -> int:
        return dates.year_of_days(self.patents[patent_id].grant_date)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _open_csv(path) -> Iterator[list[str]]:
    try:
        f = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    with f:
        yield from csv.reader(f)


def _check_header(row: list[str] | None, expected: list[str], path) -> None:
    if row is None or [c.strip() for c in row] != expected:
        raise ValidationError(
            f"malformed header in {path}: expected {','.join(expected)}"
        )


def _parse_patent_row(row: list[str], max_days: int) -> PatentRecord:
    if len(row) != len(PATENT_HEADER):
        raise ValidationError(f"expected {len(PATENT_HEADER)} columns, found {len(row)}")
    pid, date_s, abstract, codes_s, kind_s, assignee_id, util_s = row
    pid = pid.strip()
    if not pid:
        raise ValidationError("empty patent_id")
    days = dates.parse_iso_date(date_s)
    if days < dates.MIN_GRANT_DAYS:
        raise ValidationError(f"grant_date {date_s} before 1790-01-01")
    if days > max_days:
        raise ValidationError(f"grant_date {date_s} after ingestion run date")
    codes = tuple(
        ipc.parse_ipc(part) for part in codes_s.split(";") if part.strip()
    )
    try:
        kind = AssigneeKind(kind_s.strip().lower())
    except ValueError:
        raise ValidationError(f"invalid assignee_kind {kind_s!r}") from None
    assignee_id = assignee_id.strip()
    if kind is AssigneeKind.UNKNOWN and assignee_id:
        raise ValidationError("assignee_id must be empty for unknown assignee")
    if kind is not AssigneeKind.UNKNOWN and not assignee_id:
        raise ValidationError(f"missing assignee_id for {kind.value} assignee")
    util = _BOOL.get(util_s.strip().lower())
    if util is None:
        raise ValidationError(f"invalid is_utility {util_s!r}")
    return PatentRecord(pid, days, abstract, codes, kind, assignee_id, util)


def ingest_patents(path, strict: bool = False) -> CorpusStore:
    """Read and validate patents.csv into a store with no edges yet.

    Rows failing validation are dropped and counted (strict=False) or abort
    ingestion naming the row (strict=True). Row numbers are 1-based and count
    the header row.
    """
    path = Path(path)
    rows = _open_csv(path)
    _check_header(next(rows, None), PATENT_HEADER, path)
    max_days = dates.today_days()
    patents: dict[str, PatentRecord] = {}
    rejects: list[tuple[int, str]] = []
    n_rows = 0
    for row_number, row in enumerate(rows, start=2):
        n_rows += 1
        try:
            rec = _parse_patent_row(row, max_days)
            if rec.patent_id in patents:
                raise ValidationError(f"duplicate patent_id {rec.patent_id!r}")
        except ValidationError as exc:
            if strict:
                raise ValidationError(f"{path} row {row_number}: {exc}") from None
            rejects.append((row_number, str(exc)))
            continue
        patents[rec.patent_id] = rec
    provenance = {
        "patents_file": str(path),
        "patents_digest": file_digest(path),
        "patents_rows": n_rows,
        "patents_rejected": len(rejects),
    }
    return CorpusStore(patents, (), provenance, tuple(rejects))


def ingest_citations(path, corpus: CorpusStore) -> CorpusStore:
    """Attach validated citation edges to an already-ingested corpus.

    Self-citations are rejected, edges with endpoints absent from the corpus
    (e.g. receivers granted before the corpus window) are dropped and counted
    as dangling, duplicates keep the first occurrence.
    """
    path = Path(path)
    rows = _open_csv(path)
    _check_header(next(rows, None), CITATION_HEADER, path)
    edges: list[CitationEdge] = []
    seen: set[tuple[str, str]] = set()
    rejects: list[tuple[int, str]] = []
    counts = {"raw": 0, "self": 0, "dangling": 0, "duplicate": 0, "malformed": 0}
    for row_number, row in enumerate(rows, start=2):
        counts["raw"] += 1
        if len(row) != 2 or not row[0].strip() or not row[1].strip():
            counts["malformed"] += 1
            rejects.append((row_number, "malformed row"))
            continue
        sender, receiver = row[0].strip(), row[1].strip()
        if sender == receiver:
            counts["self"] += 1
            rejects.append((row_number, "self-citation"))
            continue
        if sender not in corpus.patents or receiver not in corpus.patents:
            counts["dangling"] += 1
            rejects.append((row_number, "dangling endpoint"))
            continue
        if (sender, receiver) in seen:
            counts["duplicate"] += 1
            rejects.append((row_number, "duplicate edge"))
            continue
        seen.add((sender, receiver))
        edges.append(CitationEdge(sender, receiver))
    provenance = dict(corpus.provenance)
    provenance.update(
        {
            "citations_file": str(path),
            "citations_digest": file_digest(path),
            "citations_raw": counts["raw"],
            "citations_attached": len(edges),
            "citations_dropped_self": counts["self"],
            "citations_dropped_dangling": counts["dangling"],
            "citations_dropped_duplicate": counts["duplicate"],
            "citations_dropped_malformed": counts["malformed"],
        }
    )
    return replace(
        corpus, edges=tuple(edges), provenance=provenance, edge_rejects=tuple(rejects)
    )


def filter_utility(corpus: CorpusStore) -> CorpusStore:
    """Drop non-utility patents and every edge touching them. Idempotent."""
    kept = {pid: rec for pid, rec in corpus.patents.items() if rec.is_utility}
    edges = tuple(
        e for e in corpus.edges if e.sender_id in kept and e.receiver_id in kept
    )
    provenance = dict(corpus.provenance)
    provenance["nonutility_patents_removed"] = provenance.get(
        "nonutility_patents_removed", 0
    ) + (len(corpus.patents) - len(kept))
    provenance["nonutility_edges_removed"] = provenance.get(
        "nonutility_edges_removed", 0
    ) + (len(corpus.edges) - len(edges))
    return replace(corpus, patents=kept, edges=edges, provenance=provenance)


def _patent_row(rec: PatentRecord) -> list[str]:
    return [
        rec.patent_id,
        dates.days_to_iso(rec.grant_date),
        rec.abstract_text,
        ";".join(c.canonical() for c in rec.ipc_codes),
        rec.assignee_kind.value,
        rec.assignee_id,
        "true" if rec.is_utility else "false",
    ]


def export_corpus(corpus: CorpusStore, patents_path, citations_path) -> None:
    """Write the store back out in the ingestion CSV formats.

    Patents are emitted sorted by id, edges in stored order; re-ingesting the
    files yields an order-normalized equal store.
    """
    with open(patents_path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(PATENT_HEADER)
        for pid in sorted(corpus.patents):
            w.writerow(_patent_row(corpus.patents[pid]))
    with open(citations_path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(CITATION_HEADER)
        for e in corpus.edges:
            w.writerow([e.sender_id, e.receiver_id])


def write_rejects_report(rejects: Iterable[tuple[int, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row_number", "reason"])
        for row_number, reason in rejects:
            w.writerow([row_number, reason])
