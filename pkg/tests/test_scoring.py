import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from patsim.corpus import CitationEdge
from patsim.errors import ValidationError
from patsim.psim import EmbeddingMatrix
from patsim.scoring import (
    SKIP_MISSING,
    SKIP_ZERO_NORM,
    read_scores_csv,
    score_edges,
    write_scores_csv,
    yearly_similarity_stats,
)


def matrix_from(rows, ids=None):
    data = np.asarray(rows, dtype=np.float32)
    ids = tuple(ids or (f"P{i}" for i in range(data.shape[0])))
    return EmbeddingMatrix(ids, data)


def naive_cosine(u, v):
    u = u.astype(np.float64)
    v = v.astype(np.float64)
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def test_identical_vectors_score_100():
    m = matrix_from([[0.3, -1.2, 7.0], [0.3, -1.2, 7.0]])
    result = score_edges(m, [CitationEdge("P0", "P1")])
    assert result.pairs[0][1] == pytest.approx(100.0, abs=1e-9)


def test_orthogonal_vectors_score_0():
    m = matrix_from([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    result = score_edges(m, [CitationEdge("P0", "P1")])
    assert result.pairs[0][1] == pytest.approx(0.0, abs=1e-12)


def test_three_four_pair_scores_96():
    # brute force: (3,4).(4,3) = 24, norms 5 and 5, 24/25 = 0.96, scaled x100
    m = matrix_from([[3.0, 4.0], [4.0, 3.0]])
    result = score_edges(m, [CitationEdge("P0", "P1")])
    assert result.pairs[0][1] == pytest.approx(96.0, abs=1e-9)


def test_zero_norm_skipped():
    m = matrix_from([[0.0, 0.0], [1.0, 1.0]])
    result = score_edges(m, [CitationEdge("P0", "P1"), CitationEdge("P1", "P1")])
    assert result.pairs == [(CitationEdge("P1", "P1"), pytest.approx(100.0))]
    assert result.skipped == [(CitationEdge("P0", "P1"), SKIP_ZERO_NORM)]
    assert result.skip_counts() == {SKIP_ZERO_NORM: 1}


def test_missing_row_skipped():
    m = matrix_from([[1.0, 0.0]])
    result = score_edges(m, [CitationEdge("P0", "PX"), CitationEdge("PX", "P0")])
    assert result.pairs == []
    assert [r for _, r in result.skipped] == [SKIP_MISSING, SKIP_MISSING]


def test_bad_params():
    m = matrix_from([[1.0, 0.0]])
    with pytest.raises(ValidationError):
        score_edges(m, [], chunk_size=0)
    with pytest.raises(ValidationError):
        score_edges(m, [], workers=0)


@pytest.fixture(scope="module")
def random_instance():
    rng = np.random.default_rng(314)
    data = rng.standard_normal((200, 24)).astype(np.float32)
    ids = tuple(f"P{i}" for i in range(200))
    matrix = EmbeddingMatrix(ids, data)
    edges = [
        CitationEdge(f"P{s}", f"P{r}")
        for s, r in rng.integers(0, 200, size=(500, 2))
        if s != r
    ]
    return matrix, edges


@pytest.mark.parametrize("chunk_size", [1, 7, 64, 4096])
def test_chunked_matches_naive_oracle(random_instance, chunk_size):
    matrix, edges = random_instance
    result = score_edges(matrix, edges, chunk_size=chunk_size)
    index = matrix.row_index()
    assert len(result.pairs) == len(edges)
    for (edge, value), expected_edge in zip(result.pairs, edges):
        assert edge == expected_edge
        oracle = naive_cosine(
            matrix.data[index[edge.sender_id]], matrix.data[index[edge.receiver_id]]
        )
        assert abs(value / 100.0 - oracle) <= 1e-9
        assert abs(value) <= 100.0 + 1e-4


@pytest.mark.parametrize("workers", [2, 3])
def test_worker_count_invariance(random_instance, workers):
    matrix, edges = random_instance
    base = score_edges(matrix, edges, chunk_size=17, workers=1)
    parallel = score_edges(matrix, edges, chunk_size=17, workers=workers)
    assert base.pairs == parallel.pairs
    assert base.skipped == parallel.skipped


def test_accepts_lazy_iterator(random_instance):
    matrix, edges = random_instance
    eager = score_edges(matrix, edges, chunk_size=64)
    lazy = score_edges(matrix, iter(edges), chunk_size=64, workers=2)
    assert eager.pairs == lazy.pairs


_vec = hnp.arrays(
    np.float64,
    st.integers(2, 6),
    elements=st.floats(-50, 50, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(_vec, st.sampled_from([0.25, 0.5, 2.0, 4.0, 16.0]))
def test_symmetry_and_scale_invariance(u, alpha):
    # power-of-two scales stay exact under float32 storage
    v = u[::-1].copy()
    m = matrix_from([u, v, alpha * u])
    fwd = score_edges(m, [CitationEdge("P0", "P1")])
    rev = score_edges(m, [CitationEdge("P1", "P0")])
    if fwd.pairs:
        assert rev.pairs[0][1] == pytest.approx(fwd.pairs[0][1], abs=1e-9)
        scaled = score_edges(m, [CitationEdge("P2", "P1")])
        assert scaled.pairs[0][1] == pytest.approx(fwd.pairs[0][1], abs=1e-9)
    else:
        # zero-norm inputs must be skipped symmetrically
        assert rev.pairs == []


def test_scores_csv_roundtrip(tmp_path, random_instance):
    matrix, edges = random_instance
    result = score_edges(matrix, edges[:50])
    path = tmp_path / "scores.csv"
    n = write_scores_csv(result.pairs, path)
    assert n == 50
    again = read_scores_csv(path)
    assert again == result.pairs  # repr round-trips float64 exactly


def test_yearly_similarity_stats(tmp_path):
    from conftest import PATENT_HEADER, patent_row, write_csv
    from patsim.corpus import ingest_patents

    rows = [
        patent_row("S1", date="1990-03-01"),
        patent_row("S2", date="1990-09-01"),
        patent_row("S3", date="1991-01-01"),
        patent_row("R", date="1980-01-01"),
    ]
    store = ingest_patents(write_csv(tmp_path / "p.csv", PATENT_HEADER, rows))
    pairs = [
        (CitationEdge("S1", "R"), 40.0),
        (CitationEdge("S2", "R"), 60.0),
        (CitationEdge("S3", "R"), 10.0),
    ]
    stats = yearly_similarity_stats(pairs, store)
    assert stats[0] == (1990, 50.0, 2, 10.0)
    assert stats[1] == (1991, 10.0, 1, 0.0)
    assert yearly_similarity_stats([], store) == []
