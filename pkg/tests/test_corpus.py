import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patsim import dates, synth
from patsim.corpus import (
    AssigneeKind,
    CitationEdge,
    PatentRecord,
    export_corpus,
    filter_utility,
    ingest_citations,
    ingest_patents,
    write_rejects_report,
)
from patsim.errors import ValidationError
from patsim.ipc import parse_ipc

from conftest import PATENT_HEADER, patent_row, write_csv


def ingest(tmp_path, rows, strict=False, name="patents.csv"):
    path = write_csv(tmp_path / name, PATENT_HEADER, rows)
    return ingest_patents(path, strict=strict)


def test_single_row_mapping(tmp_path):
    store = ingest(tmp_path, [patent_row("P1")])
    rec = store.patents["P1"]
    assert rec.patent_id == "P1"
    assert dates.days_to_iso(rec.grant_date) == "1990-06-01"
    assert rec.abstract_text == "A widget."
    assert len(rec.ipc_codes) == 1
    assert rec.ipc_codes[0] == parse_ipc("A01C 3/04")
    assert rec.assignee_kind is AssigneeKind.ORGANIZATION
    assert rec.assignee_id == "IBM"
    assert rec.is_utility


def test_invalid_date_rejected(tmp_path):
    store = ingest(tmp_path, [patent_row("P1", date="1990-13-01")])
    assert store.patents == {}
    assert store.patent_rejects == ((2, "invalid date '1990-13-01'"),)


def test_duplicate_id_second_rejected(tmp_path):
    store = ingest(tmp_path, [patent_row("P1"), patent_row("P1", date="1991-02-03")])
    assert list(store.patents) == ["P1"]
    assert dates.days_to_iso(store.patents["P1"].grant_date) == "1990-06-01"
    (row, reason), = store.patent_rejects
    assert row == 3 and "duplicate" in reason


def test_date_bounds(tmp_path):
    tomorrow = (datetime.date.today() + datetime.timedelta(days=1)).isoformat()
    store = ingest(
        tmp_path,
        [patent_row("P1", date="1789-12-31"), patent_row("P2", date=tomorrow)],
    )
    assert store.patents == {}
    reasons = [r for _, r in store.patent_rejects]
    assert "before 1790-01-01" in reasons[0]
    assert "after ingestion run date" in reasons[1]


def test_assignee_invariants(tmp_path):
    store = ingest(
        tmp_path,
        [
            patent_row("P1", kind="unknown", assignee="X"),
            patent_row("P2", kind="org", assignee=""),
            patent_row("P3", kind="unknown", assignee=""),
            patent_row("P4", kind="individual", assignee="Ada"),
        ],
    )
    assert sorted(store.patents) == ["P3", "P4"]
    assert len(store.patent_rejects) == 2


def test_bad_kind_utility_and_ipc_rejected(tmp_path):
    store = ingest(
        tmp_path,
        [
            patent_row("P1", kind="corp"),
            patent_row("P2", utility="maybe"),
            patent_row("P3", codes="Z99"),
            patent_row("P4", codes=""),
        ],
    )
    assert list(store.patents) == ["P4"]
    assert store.patents["P4"].ipc_codes == ()
    assert len(store.patent_rejects) == 3


def test_strict_aborts_with_row_number(tmp_path):
    with pytest.raises(ValidationError, match="row 3"):
        ingest(tmp_path, [patent_row("P1"), patent_row("P2", date="bad")], strict=True)


def test_malformed_header(tmp_path):
    path = write_csv(tmp_path / "p.csv", ["id", "when"], [])
    with pytest.raises(ValidationError, match="malformed header"):
        ingest_patents(path)


def test_unreadable_file(tmp_path):
    with pytest.raises(ValidationError, match="cannot read"):
        ingest_patents(tmp_path / "nope.csv")


def make_corpus(tmp_path, patent_rows, edge_rows):
    store = ingest(tmp_path, patent_rows)
    path = write_csv(tmp_path / "cites.csv", ["sender_id", "receiver_id"], edge_rows)
    return ingest_citations(path, store)


def test_citation_validation(tmp_path):
    store = make_corpus(
        tmp_path,
        [patent_row("P1"), patent_row("P2", date="1985-01-01")],
        [
            ["P1", "P2"],
            ["P1", "P1"],
            ["P1", "PX"],
            ["P1", "P2"],
            ["P2", "P1"],
        ],
    )
    assert store.edges == (CitationEdge("P1", "P2"), CitationEdge("P2", "P1"))
    p = store.provenance
    assert p["citations_raw"] == 5
    assert p["citations_dropped_self"] == 1
    assert p["citations_dropped_dangling"] == 1
    assert p["citations_dropped_duplicate"] == 1
    # attached + dropped = raw
    dropped = sum(p[k] for k in p if k.startswith("citations_dropped"))
    assert p["citations_attached"] + dropped == p["citations_raw"]


def test_filter_utility_drops_incident_edges(tmp_path):
    store = make_corpus(
        tmp_path,
        [
            patent_row("P1"),
            patent_row("P2", date="1985-01-01"),
            patent_row("P3", date="1980-01-01", utility="false"),
        ],
        [["P1", "P2"], ["P1", "P3"], ["P3", "P2"]],
    )
    filtered = filter_utility(store)
    assert sorted(filtered.patents) == ["P1", "P2"]
    assert filtered.edges == (CitationEdge("P1", "P2"),)
    assert filtered.provenance["nonutility_patents_removed"] == 1
    assert filtered.provenance["nonutility_edges_removed"] == 2
    # idempotent
    again = filter_utility(filtered)
    assert again.patents == filtered.patents and again.edges == filtered.edges


def test_filter_utility_identity_and_empty(tmp_path):
    store = make_corpus(tmp_path, [patent_row("P1"), patent_row("P2", date="1985-01-01")],
                        [["P1", "P2"]])
    same = filter_utility(store)
    assert same.patents == store.patents and same.edges == store.edges
    empty = ingest(tmp_path, [], name="empty.csv")
    assert filter_utility(empty).patents == {}


def test_export_roundtrip(tmp_path, small_synth_corpus):
    ppath, cpath = tmp_path / "p.csv", tmp_path / "c.csv"
    export_corpus(small_synth_corpus, ppath, cpath)
    back = ingest_citations(cpath, ingest_patents(ppath, strict=True))
    assert back.patents == small_synth_corpus.patents
    assert back.edges == small_synth_corpus.edges
    assert back.patent_rejects == ()


def test_rejects_report_format(tmp_path):
    write_rejects_report([(2, "invalid date"), (7, "duplicate patent_id 'P1'")],
                         tmp_path / "rejects.csv")
    lines = (tmp_path / "rejects.csv").read_text().splitlines()
    assert lines[0] == "row_number,reason"
    assert lines[1] == "2,invalid date"


_kinds = st.sampled_from(
    [(AssigneeKind.ORGANIZATION, "OrgA"), (AssigneeKind.INDIVIDUAL, "Ind B"),
     (AssigneeKind.UNKNOWN, "")]
)
_codes = st.lists(
    st.sampled_from([parse_ipc(c) for c in ["A01C 3/04", "B02B 1/00", "H01L 21/02"]]),
    max_size=2, unique=True,
).map(tuple)
_abstracts = st.text(
    alphabet=st.characters(codec="utf-8", exclude_characters="\r"), max_size=40
)


@st.composite
def _records(draw):
    kind, assignee = draw(_kinds)
    return PatentRecord(
        patent_id=draw(st.uuids()).hex,
        grant_date=draw(st.integers(dates.MIN_GRANT_DAYS, dates.today_days())),
        abstract_text=draw(_abstracts),
        ipc_codes=draw(_codes),
        assignee_kind=kind,
        assignee_id=assignee,
        is_utility=draw(st.booleans()),
    )


@settings(max_examples=30, deadline=None)
@given(st.lists(_records(), max_size=8, unique_by=lambda r: r.patent_id))
def test_roundtrip_property(tmp_path_factory, records):
    from patsim.corpus import CorpusStore

    tmp = tmp_path_factory.mktemp("rt")
    store = CorpusStore({r.patent_id: r for r in records}, ())
    export_corpus(store, tmp / "p.csv", tmp / "c.csv")
    back = ingest_citations(tmp / "c.csv", ingest_patents(tmp / "p.csv", strict=True))
    assert back.patents == store.patents
    assert back.edges == ()
