"""Patent citation similarity analytics.

Embedding-based similarity scoring over a patent citation network, and
nested Gaussian additive models (Models 0-3) with penalized spline smooths
explaining the similarity trend.
"""

__version__ = "0.1.0"

from .corpus import (
    AssigneeKind,
    CitationEdge,
    CorpusStore,
    PatentRecord,
    export_corpus,
    filter_utility,
    ingest_citations,
    ingest_patents,
)
from .errors import CollinearityError, PatsimError, ValidationError
from .features import FeatureTable, build_features, yearly_lag_stats
from .gam import (
    ModelFit,
    ModelSpec,
    PartialEffect,
    fit_model,
    fit_penalized_ls,
    fit_report,
    model_catalog,
    optimize_lambda,
    partial_effect,
)
from .ipc import IpcCode, IpcLevel, JaccardProfile, jaccard_profile, parse_ipc
from .psim import EmbeddingMatrix, read_matrix, write_matrix
from .scoring import ScoredEdges, score_edges, yearly_similarity_stats
from .splines import SmoothTerm, build_basis
from .synth import SynthProfile, mock_matrix, synth_corpus, synth_scores

__all__ = [
    "AssigneeKind",
    "CitationEdge",
    "CollinearityError",
    "CorpusStore",
    "EmbeddingMatrix",
    "FeatureTable",
    "IpcCode",
    "IpcLevel",
    "JaccardProfile",
    "ModelFit",
    "ModelSpec",
    "PartialEffect",
    "PatentRecord",
    "PatsimError",
    "ScoredEdges",
    "SmoothTerm",
    "SynthProfile",
    "ValidationError",
    "build_basis",
    "build_features",
    "export_corpus",
    "filter_utility",
    "fit_model",
    "fit_penalized_ls",
    "fit_report",
    "ingest_citations",
    "ingest_patents",
    "jaccard_profile",
    "mock_matrix",
    "model_catalog",
    "optimize_lambda",
    "parse_ipc",
    "partial_effect",
    "read_matrix",
    "score_edges",
    "synth_corpus",
    "synth_scores",
    "write_matrix",
    "yearly_lag_stats",
    "yearly_similarity_stats",
]
