"""Ordered password-candidate generation from autoregressive character models."""

from .adapter import ExternalModel, adapter_query
from .engine import (
    CandidateRecord,
    GenerationConfig,
    OrderedSearch,
    RunSummary,
    brute_force_enumerate,
    random_sample_generate,
    ucs_generate,
)
from .models import (
    InferenceCounter,
    NGramModel,
    ProbabilityModel,
    load_model,
    save_model,
    sequence_log_prob,
    train_ngram,
)
from .search import (
    Frontier,
    PackingLadder,
    SearchState,
    compare_states,
    expand,
    expand_packed,
)
from .vocab import BLANK, END, START, UNK, VOCAB, encode_input, encode_target

__version__ = "0.1.0"

__all__ = [
    "BLANK", "END", "START", "UNK", "VOCAB",
    "CandidateRecord", "ExternalModel", "Frontier", "GenerationConfig",
    "InferenceCounter", "NGramModel", "OrderedSearch", "PackingLadder",
    "ProbabilityModel", "RunSummary", "SearchState", "adapter_query",
    "brute_force_enumerate", "compare_states", "encode_input",
    "encode_target", "expand", "expand_packed", "load_model", "random_sample_generate",
    "save_model", "sequence_log_prob", "train_ngram", "ucs_generate",
]
