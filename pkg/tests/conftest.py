import csv

import pytest

from patsim import synth


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    return path


PATENT_HEADER = [
    "patent_id",
    "grant_date",
    "abstract",
    "ipc_codes",
    "assignee_kind",
    "assignee_id",
    "is_utility",
]


def patent_row(pid, date="1990-06-01", abstract="A widget.", codes="A01C 3/04",
               kind="org", assignee="IBM", utility="true"):
    return [pid, date, abstract, codes, kind, assignee, utility]


@pytest.fixture(scope="session")
def small_synth_corpus():
    return synth.synth_corpus(seed=11, n_patents=300, n_edges=2000)
