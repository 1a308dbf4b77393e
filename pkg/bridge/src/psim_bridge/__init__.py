"""Sentence-encoder bridge emitting PSIM embedding files."""

__version__ = "0.1.0"

from .encode import (
    DEFAULT_MODEL,
    BridgeConfig,
    encode_corpus,
    mock_encode,
    mock_vector,
    read_abstracts,
)
from .psimfile import BridgeError, ids_path, read_psim, write_psim

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "DEFAULT_MODEL",
    "encode_corpus",
    "ids_path",
    "mock_encode",
    "mock_vector",
    "read_abstracts",
    "read_psim",
    "write_psim",
]
