"""Encode patent abstracts into PSIM embedding files.

encode_corpus runs a pre-trained sentence encoder (via sentence-transformers)
over the abstracts of a patents.csv extract; mock_encode emits deterministic
unit-norm pseudo-random vectors keyed by (seed, patent_id) so downstream
pipelines can run without any model asset. Both write the same format plus a
provenance manifest.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .psimfile import BridgeError, write_psim

DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"

_PATENT_ID, _ABSTRACT = "patent_id", "abstract"


@dataclass
class BridgeConfig:
    model_name: str = DEFAULT_MODEL
    batch_size: int = 64
    input_path: str = "patents.csv"
    output_path: str = "vecs.psim"


def read_abstracts(path) -> tuple[list[str], list[str], int]:
    """(ids, abstracts, skipped_empty) from a patents.csv extract, in file order.

    Patents with an empty abstract are skipped and never appear in the ids
    sidecar. Callers are expected to have filtered to utility patents already.
    """
    ids: list[str] = []
    texts: list[str] = []
    skipped = 0
    try:
        f = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise BridgeError(f"cannot read {path}: {exc}") from None
    with f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or _PATENT_ID not in reader.fieldnames or (
            _ABSTRACT not in reader.fieldnames
        ):
            raise BridgeError(
                f"{path}: expected columns {_PATENT_ID!r} and {_ABSTRACT!r}"
            )
        for row in reader:
            abstract = (row[_ABSTRACT] or "").strip()
            if not abstract:
                skipped += 1
                continue
            ids.append(row[_PATENT_ID])
            texts.append(abstract)
    return ids, texts, skipped


def write_manifest(output_path, model: str, dim: int, count: int) -> Path:
    manifest = {
        "model": model,
        "dim": dim,
        "count": count,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = Path(output_path).with_suffix(".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def encode_corpus(config: BridgeConfig) -> dict:
    """Encode abstracts with the configured pre-trained sentence encoder.

    One PSIM row per patent with a non-empty abstract, row order = input
    order; deterministic for a fixed model version and batch size. Returns
    summary counts. Raises BridgeError when the model asset is unavailable.
    """
    ids, texts, skipped = read_abstracts(config.input_path)
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise BridgeError(
            f"sentence-transformers is not installed (pip install "
            f"'psim-bridge[encode]'): {exc}"
        ) from None
    try:
        model = SentenceTransformer(config.model_name)
    except Exception as exc:  # model download/load failure
        raise BridgeError(f"model {config.model_name!r} unavailable: {exc}") from None
    if ids:
        vectors = model.encode(
            texts,
            batch_size=config.batch_size,
            convert_to_numpy=True,
            show_progress_bar=False,
        ).astype(np.float32)
    else:
        dim = model.get_sentence_embedding_dimension() or 0
        vectors = np.empty((0, dim), dtype=np.float32)
    write_psim(config.output_path, ids, vectors)
    write_manifest(config.output_path, config.model_name, vectors.shape[1], len(ids))
    return {"count": len(ids), "dim": int(vectors.shape[1]), "skipped_empty": skipped}


def mock_vector(seed: int, patent_id: str, dim: int) -> np.ndarray:
    if dim <= 0:
        raise BridgeError("dim must be positive")
    digest = hashlib.sha256(f"{seed}\x1f{patent_id}".encode("utf-8")).digest()
    gen = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    v = gen.standard_normal(dim)
    return v / np.linalg.norm(v)


def mock_encode(seed: int, input_path, output_path, dim: int = 384) -> dict:
    """Deterministic stand-in for encode_corpus: unit-norm vectors keyed by
    (seed, patent_id), format-identical output."""
    if dim <= 0:
        raise BridgeError("dim must be positive")
    ids, _texts, skipped = read_abstracts(input_path)
    data = np.empty((len(ids), dim), dtype=np.float32)
    for i, pid in enumerate(ids):
        data[i] = mock_vector(seed, pid, dim).astype(np.float32)
    write_psim(output_path, ids, data)
    write_manifest(output_path, f"mock(seed={seed})", dim, len(ids))
    return {"count": len(ids), "dim": dim, "skipped_empty": skipped}
