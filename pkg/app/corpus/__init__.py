"""
Corpus Module
Builds line-level semantic-divergence corpora from correct/erroneous submission pairs
"""

from app.corpus.builder import CorpusBuilder, build_corpus, load_corpus_inputs
from app.corpus.diffing import diff_indices, first_divergence, slice_pair
from app.corpus.pairing import pair_submissions
from app.corpus.prompts import emit_localization_prompt, ingest_localization_answer
from app.corpus.similarity import jaccard, ngram_set, normalize_lines
from app.corpus.verifier import ProgramVerifier, verify

__all__ = [
    "CorpusBuilder",
    "build_corpus",
    "load_corpus_inputs",
    "diff_indices",
    "first_divergence",
    "slice_pair",
    "pair_submissions",
    "emit_localization_prompt",
    "ingest_localization_answer",
    "jaccard",
    "ngram_set",
    "normalize_lines",
    "ProgramVerifier",
    "verify",
]
