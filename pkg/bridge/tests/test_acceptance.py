"""Bridge acceptance: emitted files validate, mock rows are unit-norm and
deterministic; the real encoder path runs only when its model asset is
available locally."""

import csv

import numpy as np
import pytest

from psim_bridge import BridgeConfig, encode_corpus, ids_path, mock_encode
from psim_bridge.psimfile import BridgeError, read_psim

HEADER = ["patent_id", "grant_date", "abstract", "ipc_codes", "assignee_kind",
           "assignee_id", "is_utility"]


@pytest.fixture
def patents_csv(tmp_path):
    path = tmp_path / "patents.csv"
    rows = [(f"P{i}", f"Synthetic abstract number {i} about widgets.") for i in range(20)]
    rows.insert(5, ("PEMPTY", ""))
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(HEADER)
        for pid, abstract in rows:
            w.writerow([pid, "1990-01-01", abstract, "A01C 3/04", "org", "X", "true"])
    return path


def validate_with_primary_or_local(path):
    """Prefer the consumer package's validator when it is importable."""
    try:
        from patsim.psim import read_matrix
    except ImportError:
        ids, data = read_psim(path)
        return list(ids), np.asarray(data)
    matrix = read_matrix(path)
    return list(matrix.ids), np.asarray(matrix.data)


def test_mock_encode_acceptance(patents_csv, tmp_path):
    out = tmp_path / "mock.psim"
    summary = mock_encode(seed=7, input_path=patents_csv, output_path=out, dim=384)
    assert summary["count"] == 20 and summary["dim"] == 384
    ids, data = validate_with_primary_or_local(out)
    assert len(ids) == 20 and "PEMPTY" not in ids
    norms = np.linalg.norm(data.astype(np.float64), axis=1)
    assert np.max(np.abs(norms - 1.0)) <= 1e-6
    assert len(ids_path(out).read_text().splitlines()) == 20

    again = tmp_path / "mock2.psim"
    mock_encode(seed=7, input_path=patents_csv, output_path=again, dim=384)
    assert out.read_bytes() == again.read_bytes()
    print("[PASS] bridge mock_encode: validated, unit-norm, deterministic")


def test_encode_corpus_acceptance(patents_csv, tmp_path):
    out = tmp_path / "real.psim"
    config = BridgeConfig(input_path=str(patents_csv), output_path=str(out),
                          batch_size=8)
    try:
        summary = encode_corpus(config)
    except BridgeError as exc:
        pytest.skip(f"encoder model asset unavailable: {exc}")
    assert summary["dim"] == 384
    assert summary["count"] == 20
    ids, data = validate_with_primary_or_local(out)
    assert len(ids) == 20
    assert data.shape == (20, 384)
    print("[PASS] bridge encode_corpus: dim=384, count-consistent sidecar")
