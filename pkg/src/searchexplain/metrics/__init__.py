"""Evaluation metrics: ROUGE-1, BLEU, METEOR and BERTScore."""

from .aggregate import corpus_aggregate
from .bertscore import EmbeddingError, TokenEmbeddings, bertscore, load_embeddings, write_embeddings
from .lexical import ScoreTriple, bleu, rouge1, unigram_overlap
from .meteor import Alignment, Stage, SynonymTable, count_chunks, meteor, meteor_align, meteor_score
from .porter import porter_stem
from .tokens import normalize_tokenize

__all__ = [
    "Alignment",
    "EmbeddingError",
    "ScoreTriple",
    "Stage",
    "SynonymTable",
    "TokenEmbeddings",
    "bertscore",
    "bleu",
    "corpus_aggregate",
    "count_chunks",
    "load_embeddings",
    "meteor",
    "meteor_align",
    "meteor_score",
    "normalize_tokenize",
    "porter_stem",
    "rouge1",
    "unigram_overlap",
    "write_embeddings",
]
