"""Per-citation regression table: response plus the covariates of Models 0-3."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dates, ipc
from .corpus import AssigneeKind, CitationEdge, CorpusStore
from .errors import ValidationError

DROP_NEGATIVE_LAG = "negative-lag"
DROP_UNDEFINED_JACCARD = "undefined-jaccard"
DROP_MISSING_PATENT = "missing-patent"
NOTE_UNKNOWN_ASSIGNEE = "unknown-assignee"

FEATURE_COLUMNS = [
    "similarity",
    "pub_date",
    "temporal_diff_days",
    "log_sender_citations",
    "is_same_org",
    "is_sender_org",
    "is_receiver_org",
    "j_section",
    "j_class",
    "j_subclass",
    "j_maingroup",
    "j_subgroup",
]
CSV_HEADER = ["sender_id", "receiver_id"] + FEATURE_COLUMNS


@dataclass
class DropReport:
    dropped: dict[str, int] = field(default_factory=dict)
    notes: dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.dropped[reason] = self.dropped.get(reason, 0) + 1

    def note(self, reason: str) -> None:
        self.notes[reason] = self.notes.get(reason, 0) + 1

    def total_dropped(self) -> int:
        return sum(self.dropped.values())


@dataclass(frozen=True)
class FeatureRow:
    sender_id: str
    receiver_id: str
    similarity: float
    pub_date: float  # sender grant date, days since 1976-01-01
    temporal_diff_days: float
    log_sender_citations: float
    is_same_org: float
    is_sender_org: float
    is_receiver_org: float
    jaccard: ipc.JaccardProfile


@dataclass
class FeatureTable:
    sender_ids: list[str]
    receiver_ids: list[str]
    columns: dict[str, np.ndarray]
    drop_report: DropReport = field(default_factory=DropReport)

    @property
    def n(self) -> int:
        return len(self.sender_ids)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise ValidationError(f"unknown feature column {name!r}")
        return self.columns[name]

    def row(self, i: int) -> FeatureRow:
        c = self.columns
        profile = ipc.JaccardProfile(
            c["j_section"][i],
            c["j_class"][i],
            c["j_subclass"][i],
            c["j_maingroup"][i],
            c["j_subgroup"][i],
            defined=True,
        )
        return FeatureRow(
            self.sender_ids[i],
            self.receiver_ids[i],
            float(c["similarity"][i]),
            float(c["pub_date"][i]),
            float(c["temporal_diff_days"][i]),
            float(c["log_sender_citations"][i]),
            float(c["is_same_org"][i]),
            float(c["is_sender_org"][i]),
            float(c["is_receiver_org"][i]),
            profile,
        )


def build_features(
    corpus: CorpusStore,
    scored_pairs: Sequence[tuple[CitationEdge, float]],
    keep_negative_lags: bool = False,
) -> FeatureTable:
    """Assemble one row per scored edge surviving the drop policy.

    Sender citation count is the out-degree in the corpus's validated edge
    set; negative temporal lags are dropped unless keep_negative_lags; rows
    with an undefined Jaccard profile (either side has no IPC codes) are
    dropped; unknown assignees keep the row with zeroed org flags, counted as
    a note.
    """
    out_degree = Counter(e.sender_id for e in corpus.edges)
    report = DropReport()
    sender_ids: list[str] = []
    receiver_ids: list[str] = []
    cols: dict[str, list[float]] = {name: [] for name in FEATURE_COLUMNS}
    for edge, score in scored_pairs:
        sender = corpus.patents.get(edge.sender_id)
        receiver = corpus.patents.get(edge.receiver_id)
        if sender is None or receiver is None:
            report.drop(DROP_MISSING_PATENT)
            continue
        lag = sender.grant_date - receiver.grant_date
        if lag < 0 and not keep_negative_lags:
            report.drop(DROP_NEGATIVE_LAG)
            continue
        profile = ipc.jaccard_profile(sender, receiver)
        if not profile.defined:
            report.drop(DROP_UNDEFINED_JACCARD)
            continue
        s_unknown = sender.assignee_kind is AssigneeKind.UNKNOWN
        r_unknown = receiver.assignee_kind is AssigneeKind.UNKNOWN
        if s_unknown or r_unknown:
            report.note(NOTE_UNKNOWN_ASSIGNEE)
        is_sender_org = float(sender.assignee_kind is AssigneeKind.ORGANIZATION)
        is_receiver_org = float(receiver.assignee_kind is AssigneeKind.ORGANIZATION)
        # same assignee requires identical non-unknown kind, so the flags agree
        is_same_org = float(
            not s_unknown
            and not r_unknown
            and sender.assignee_kind is receiver.assignee_kind
            and sender.assignee_id == receiver.assignee_id
        )
        sender_ids.append(edge.sender_id)
        receiver_ids.append(edge.receiver_id)
        cols["similarity"].append(score)
        cols["pub_date"].append(float(sender.grant_date - dates.WINDOW_START))
        cols["temporal_diff_days"].append(float(lag))
        cols["log_sender_citations"].append(math.log(out_degree[edge.sender_id]))
        cols["is_same_org"].append(is_same_org)
        cols["is_sender_org"].append(is_sender_org)
        cols["is_receiver_org"].append(is_receiver_org)
        for level in ipc.LEVELS:
            cols["j_" + level.value].append(profile.value(level))
    table = FeatureTable(
        sender_ids,
        receiver_ids,
        {name: np.asarray(values, dtype=np.float64) for name, values in cols.items()},
        report,
    )
    assert table.n + report.total_dropped() == len(scored_pairs)
    return table


def yearly_lag_stats(table: FeatureTable) -> list[tuple[int, float, int]]:
    """(year, mean_lag_days, count) grouped by sender grant year."""
    groups: dict[int, list[float]] = {}
    pub = table.column("pub_date")
    lag = table.column("temporal_diff_days")
    for i in range(table.n):
        year = dates.year_of_days(int(pub[i]) + dates.WINDOW_START)
        groups.setdefault(year, []).append(float(lag[i]))
    return [
        (year, math.fsum(vals) / len(vals), len(vals))
        for year, vals in sorted(groups.items())
    ]


def write_features_csv(table: FeatureTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        cols = [table.columns[name] for name in FEATURE_COLUMNS]
        for i in range(table.n):
            w.writerow(
                [table.sender_ids[i], table.receiver_ids[i]]
                + [repr(float(c[i])) for c in cols]
            )


def read_features_csv(path) -> FeatureTable:
    sender_ids: list[str] = []
    receiver_ids: list[str] = []
    cols: dict[str, list[float]] = {name: [] for name in FEATURE_COLUMNS}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValidationError(f"malformed header in {path}")
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise ValidationError(f"malformed row in {path}: {row!r}")
            sender_ids.append(row[0])
            receiver_ids.append(row[1])
            for name, value in zip(FEATURE_COLUMNS, row[2:]):
                cols[name].append(float(value))
    return FeatureTable(
        sender_ids,
        receiver_ids,
        {name: np.asarray(values, dtype=np.float64) for name, values in cols.items()},
    )
