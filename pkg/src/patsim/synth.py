"""Synthetic corpora with known generating effects, plus mock embeddings.

The generator emits patents with randomized grant dates in the 1976-2021
window, hierarchical IPC code sets, a skewed assignee structure, and an edge
list biased toward earlier-dated receivers. A SynthProfile fixes the true
smooth functions and fixed-effect magnitudes used to generate similarity
responses, so fits can be checked against ground truth.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import dates
from .corpus import AssigneeKind, CitationEdge, CorpusStore, PatentRecord
from .ipc import IpcCode, IpcLevel
from .errors import ValidationError
from .features import build_features
from .psim import EmbeddingMatrix
from .scoring import ScoredEdges

SPAN_DAYS = float(dates.WINDOW_END - dates.WINDOW_START)

DEFAULT_LINEAR_EFFECTS = {
    "is_same_org": 8.0,
    "is_sender_org": -1.2,
    "is_receiver_org": -1.5,
    "j_section": 2.2,
    "j_class": 1.9,
    "j_subclass": 2.5,
    "j_maingroup": 3.6,
    "j_subgroup": 4.2,
}


@dataclass(frozen=True)
class SynthProfile:
    """True generating model: similarity = intercept + smooth effects +
    linear effects + Gaussian noise, clipped to the valid score range."""

    intercept: float = 45.0
    noise_sd: float = 12.0
    linear_effects: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_LINEAR_EFFECTS)
    )
    pub_amp: float = 2.5
    pub_cycles: float = 1.25
    pub_slope: float = -4.0
    lag_amp: float = 5.0
    lag_rate: float = 4.0
    cit_curv: float = 0.45
    cit_center: float = 1.0

    @staticmethod
    def zero_effects(noise_sd: float = 12.0) -> "SynthProfile":
        return SynthProfile(
            noise_sd=noise_sd,
            linear_effects={k: 0.0 for k in DEFAULT_LINEAR_EFFECTS},
            pub_amp=0.0,
            pub_slope=0.0,
            lag_amp=0.0,
            cit_curv=0.0,
        )

    def f_pub_date(self, pub_days):
        u = np.asarray(pub_days, dtype=np.float64) / SPAN_DAYS
        return self.pub_amp * np.sin(2.0 * np.pi * self.pub_cycles * u) + self.pub_slope * (
            u - 0.5
        )

    def f_lag(self, lag_days):
        v = np.asarray(lag_days, dtype=np.float64) / SPAN_DAYS
        return self.lag_amp * (np.exp(-self.lag_rate * v) - 0.5)

    def f_log_citations(self, log_count):
        c = np.asarray(log_count, dtype=np.float64)
        return -self.cit_curv * (c - self.cit_center) ** 2

    def smooth_truth(self, feature: str):
        return {
            "pub_date": self.f_pub_date,
            "temporal_diff_days": self.f_lag,
            "log_sender_citations": self.f_log_citations,
        }[feature]

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_json(data: dict) -> "SynthProfile":
        return SynthProfile(**data)


_WORDS = (
    "apparatus method system device process assembly composition circuit "
    "signal layer polymer sensor module valve coating membrane catalyst "
    "substrate actuator algorithm interface turbine alloy compound antenna"
).split()

_SECTION_LETTERS = "ABCDEFGH"
_SUBCLASS_LETTERS = "BCDFGHJKLMNP"


def _build_ipc_pool(rng: np.random.Generator):
    """Pool of parsed IPC codes with realistic nesting, plus a subclass index."""
    pool: list = []
    by_subclass: dict[str, list[int]] = {}
    for section in _SECTION_LETTERS:
        for class_num in sorted(rng.choice(np.arange(1, 100), size=3, replace=False)):
            letters = rng.choice(list(_SUBCLASS_LETTERS), size=2, replace=False)
            for letter in letters:
                groups = sorted(rng.choice(np.arange(1, 13), size=3, replace=False))
                for group in groups:
                    n_sub = int(rng.integers(2, 5))
                    subs = sorted(rng.choice(np.arange(0, 9) * 2, size=n_sub, replace=False))
                    for sub in subs:
                        code = IpcCode(section, int(class_num), str(letter), int(group), int(sub))
                        by_subclass.setdefault(code.render(IpcLevel.SUBCLASS), []).append(len(pool))
                        pool.append(code)
    return pool, by_subclass


def synth_corpus(
    seed: int, n_patents: int, n_edges: int, profile: SynthProfile | None = None
) -> CorpusStore:
    """Deterministic synthetic corpus for a fixed seed.

    The edge list is biased toward sender dates at or after receiver dates,
    with a small deliberate fraction of negative-lag edges to exercise the
    downstream drop policy.
    """
    if n_patents < 2:
        raise ValidationError("inconsistent sizes: need at least 2 patents")
    if n_edges < 0 or n_edges > n_patents * (n_patents - 1) // 4:
        raise ValidationError(
            f"inconsistent sizes: {n_edges} edges not reachable from {n_patents} patents"
        )
    rng = np.random.default_rng(seed)
    pool, by_subclass = _build_ipc_pool(rng)

    n_orgs = max(4, n_patents // 25)
    n_inds = max(3, n_patents // 40)
    org_ids = [f"ORG{j:05d}" for j in range(n_orgs)]
    ind_ids = [f"IND{j:05d}" for j in range(n_inds)]
    org_weights = 1.0 / np.arange(1, n_orgs + 1)
    org_cum = np.cumsum(org_weights) / org_weights.sum()

    pids = [f"P{i:07d}" for i in range(n_patents)]
    grant = rng.integers(dates.WINDOW_START, dates.WINDOW_END + 1, size=n_patents)
    kind_u = rng.random(n_patents)
    org_pick = rng.random(n_patents)
    ind_pick = rng.integers(0, n_inds, size=n_patents)
    n_codes = rng.choice([1, 2, 3], size=n_patents, p=[0.5, 0.3, 0.2])
    utility_u = rng.random(n_patents)

    patents: dict[str, PatentRecord] = {}
    patent_codes: list[list[int]] = []
    assignee_of: list[str | None] = []
    for i, pid in enumerate(pids):
        if kind_u[i] < 0.62:
            kind, assignee = AssigneeKind.ORGANIZATION, org_ids[
                int(np.searchsorted(org_cum, org_pick[i]))
            ]
        elif kind_u[i] < 0.92:
            kind, assignee = AssigneeKind.INDIVIDUAL, ind_ids[ind_pick[i]]
        else:
            kind, assignee = AssigneeKind.UNKNOWN, ""
        codes = [int(rng.integers(0, len(pool)))]
        for _ in range(int(n_codes[i]) - 1):
            if rng.random() < 0.6:
                siblings = by_subclass[pool[codes[0]].render(IpcLevel.SUBCLASS)]
                codes.append(siblings[int(rng.integers(0, len(siblings)))])
            else:
                codes.append(int(rng.integers(0, len(pool))))
        codes = sorted(set(codes))
        patent_codes.append(codes)
        assignee_of.append(assignee or None)
        words = rng.choice(_WORDS, size=int(rng.integers(8, 15)))
        abstract = f"Synthetic {pid}: " + " ".join(words) + "."
        patents[pid] = PatentRecord(
            patent_id=pid,
            grant_date=int(grant[i]),
            abstract_text=abstract,
            ipc_codes=tuple(pool[c] for c in codes),
            assignee_kind=kind,
            assignee_id=assignee,
            is_utility=bool(utility_u[i] < 0.97),
        )

    patents_by_subclass: dict[str, list[int]] = {}
    for i, codes in enumerate(patent_codes):
        for key in {pool[c].render(IpcLevel.SUBCLASS) for c in codes}:
            patents_by_subclass.setdefault(key, []).append(i)
    edges = _sample_edges(
        rng, n_edges, grant, patent_codes, assignee_of, pool, patents_by_subclass
    )
    provenance = {
        "synthetic": True,
        "seed": seed,
        "n_patents": n_patents,
        "n_edges": n_edges,
    }
    return CorpusStore(
        patents,
        tuple(CitationEdge(pids[s], pids[r]) for s, r in edges),
        provenance,
    )


def _sorted_members(indices, grant):
    arr = np.asarray(indices, dtype=np.int64)
    order = np.argsort(grant[arr], kind="stable")
    members = arr[order]
    return members, grant[members]


def _sample_edges(rng, n_edges, grant, patent_codes, assignee_of, pool, by_subclass):
    n = len(grant)
    date_order = np.argsort(grant, kind="stable")
    rank_of = np.empty(n, dtype=np.int64)
    rank_of[date_order] = np.arange(n)

    by_assignee: dict[str, list[int]] = {}
    for i, a in enumerate(assignee_of):
        if a is not None:
            by_assignee.setdefault(a, []).append(i)
    assignee_sorted = {a: _sorted_members(v, grant) for a, v in by_assignee.items()}
    subclass_sorted = {
        key: _sorted_members(v, grant) for key, v in by_subclass.items()
    }

    propensity = rng.lognormal(0.0, 1.0, size=n)
    sender_cum = np.cumsum(propensity) / propensity.sum()

    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    attempts = 0
    cap = 200 * max(n_edges, 1)
    while len(edges) < n_edges and attempts < cap:
        batch = min(20000, 2 * (n_edges - len(edges)) + 16)
        senders = np.searchsorted(sender_cum, rng.random(batch))
        routes = rng.random(batch)
        picks = rng.random(batch)
        sub_picks = rng.random(batch)
        for k in range(batch):
            attempts += 1
            if len(edges) >= n_edges:
                break
            s = int(senders[k])
            r = _pick_receiver(
                s,
                routes[k],
                picks[k],
                sub_picks[k],
                grant,
                rank_of,
                date_order,
                patent_codes,
                assignee_of,
                pool,
                assignee_sorted,
                subclass_sorted,
            )
            if r is None or r == s:
                continue
            if (s, r) in seen:
                continue
            seen.add((s, r))
            edges.append((s, r))
    if len(edges) < n_edges:
        raise ValidationError(
            f"inconsistent sizes: could not realize {n_edges} unique edges"
        )
    return edges


def _pick_earlier(members, member_dates, sender, sender_date, pick):
    hi = int(np.searchsorted(member_dates, sender_date, side="right"))
    if hi <= 0:
        return None
    idx = min(int(pick * hi), hi - 1)
    r = int(members[idx])
    if r == sender:
        if hi == 1:
            return None
        r = int(members[(idx + 1) % hi])
    return r


def _pick_receiver(
    s,
    route,
    pick,
    sub_pick,
    grant,
    rank_of,
    date_order,
    patent_codes,
    assignee_of,
    pool,
    assignee_sorted,
    subclass_sorted,
):
    sender_date = grant[s]
    rank = int(rank_of[s])
    if route < 0.01:
        # deliberate negative-lag edge
        later = len(grant) - rank - 1
        if later > 0:
            idx = rank + 1 + min(int(pick * later), later - 1)
            return int(date_order[idx])
        return None
    if route < 0.13 and assignee_of[s] is not None:
        members, member_dates = assignee_sorted[assignee_of[s]]
        r = _pick_earlier(members, member_dates, s, sender_date, pick)
        if r is not None:
            return r
    if route < 0.58:
        codes = patent_codes[s]
        key = pool[codes[min(int(sub_pick * len(codes)), len(codes) - 1)]].render(IpcLevel.SUBCLASS)
        members, member_dates = subclass_sorted[key]
        r = _pick_earlier(members, member_dates, s, sender_date, pick)
        if r is not None:
            return r
    if rank <= 0:
        return None
    idx = min(int(pick * rank), rank - 1)
    return int(date_order[idx])


def synth_scores(
    corpus: CorpusStore, profile: SynthProfile, seed: int
) -> tuple[ScoredEdges, int]:
    """Similarity responses for every corpus edge from the generating model.

    Covariates are computed exactly as the feature builder does (including
    negative-lag rows, which the builder may drop later); responses are
    clipped to [-100, 100] and the clip count is returned.
    """
    table = build_features(corpus, [(e, 0.0) for e in corpus.edges], keep_negative_lags=True)
    mu = np.full(table.n, profile.intercept)
    mu += profile.f_pub_date(table.column("pub_date"))
    mu += profile.f_lag(table.column("temporal_diff_days"))
    mu += profile.f_log_citations(table.column("log_sender_citations"))
    for name, coef in profile.linear_effects.items():
        if coef:
            mu += coef * table.column(name)
    rng = np.random.default_rng([seed, 0xA5])
    raw = mu + rng.normal(0.0, profile.noise_sd, size=table.n)
    clipped = int(np.sum((raw < -100.0) | (raw > 100.0)))
    values = np.clip(raw, -100.0, 100.0)
    pairs = [
        (CitationEdge(table.sender_ids[i], table.receiver_ids[i]), float(values[i]))
        for i in range(table.n)
    ]
    return ScoredEdges(pairs=pairs), clipped


def write_truth(profile: SynthProfile, path, extra: dict | None = None) -> None:
    payload = {"profile": profile.to_json()}
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_truth(path) -> tuple[SynthProfile, dict]:
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    return SynthProfile.from_json(payload["profile"]), payload


def mock_vector(seed: int, patent_id: str, dim: int) -> np.ndarray:
    """Deterministic unit-norm vector keyed by (seed, patent_id)."""
    if dim <= 0:
        raise ValidationError("dim must be positive")
    digest = hashlib.sha256(f"{seed}\x1f{patent_id}".encode("utf-8")).digest()
    gen = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    v = gen.standard_normal(dim)
    return v / np.linalg.norm(v)


def mock_matrix(ids, seed: int, dim: int = 384) -> EmbeddingMatrix:
    """Mock embedding matrix: format-identical stand-in for encoder output."""
    ids = tuple(ids)
    data = np.empty((len(ids), dim), dtype=np.float32)
    for i, pid in enumerate(ids):
        data[i] = mock_vector(seed, pid, dim).astype(np.float32)
    return EmbeddingMatrix(ids, data)
