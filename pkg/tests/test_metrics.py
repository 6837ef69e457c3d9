import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_align, naive_bleu, naive_chunks, naive_overlap, random_tokens
from searchexplain.metrics import (
    Alignment,
    EmbeddingError,
    Stage,
    SynonymTable,
    TokenEmbeddings,
    bertscore,
    bleu,
    corpus_aggregate,
    count_chunks,
    load_embeddings,
    meteor,
    meteor_align,
    meteor_score,
    normalize_tokenize,
    porter_stem,
    rouge1,
    unigram_overlap,
    write_embeddings,
)

VOCAB = ["the", "cat", "cats", "run", "runs", "running", "rules", "laws", "gear", "kit", "a", "b"]
SYN = SynonymTable({"rules": {"g1"}, "laws": {"g1", "g2"}, "gear": {"g3"}, "kit": {"g3"}, "a": {"g2"}})


def tri(s):
    return (s.precision, s.recall, s.f)


# tokenisation

@pytest.mark.parametrize(
    "text, tokens",
    [("The cat.", ["the", "cat", "."]), ("", []), ("Don't stop", ["don", "'", "t", "stop"]),
     ("  A\tB\n", ["a", "b"]), ("¿Qué?", ["¿", "qué", "?"]), ("x--y", ["x", "-", "-", "y"])],
)
def test_normalize_tokenize(text, tokens):
    assert normalize_tokenize(text) == tokens


# ROUGE-1 / BLEU

def test_rouge1_hand_example():
    s = rouge1(["the", "cat", "sat"], ["the", "cat", "ate", "fish"])
    assert s.precision == pytest.approx(2 / 3, abs=1e-12)
    assert s.recall == pytest.approx(1 / 2, abs=1e-12)
    assert s.f == pytest.approx(4 / 7, abs=1e-12)


def test_rouge1_edges():
    assert rouge1(["a", "b"], ["a", "b"]).f == 1.0
    assert tri(rouge1(["a"], ["b"])) == (0.0, 0.0, 0.0)
    assert tri(rouge1([], ["b"])) == (0.0, 0.0, 0.0)
    assert tri(rouge1([], [])) == (0.0, 0.0, 0.0)


def test_rouge1_overlap_matches_oracle_and_is_symmetric():
    rng = random.Random(1)
    for _ in range(1000):
        a, b = random_tokens(rng, VOCAB, 10), random_tokens(rng, VOCAB, 10)
        assert unigram_overlap(a, b) == naive_overlap(a, b)
        assert rouge1(a, b).f == rouge1(b, a).f


def test_bleu_hand_examples():
    assert bleu(["the", "the", "the"], ["the", "cat"], max_n=1) == pytest.approx(1 / 3, abs=1e-12)
    assert bleu(["a", "b", "c", "d"], ["a", "b", "c", "d"]) == 1.0
    assert bleu(["x"], ["y"]) == 0.0
    assert bleu(["a", "b"], ["a", "b"]) == 0.0  # 3- and 4-grams absent
    assert bleu([], ["a"]) == 0.0


def test_bleu_brevity_penalty():
    got = bleu(["a", "b"], ["a", "b", "c", "d"], max_n=2)
    assert got == pytest.approx(math.exp(1 - 4 / 2), abs=1e-12)


def test_bleu_matches_naive_oracle():
    rng = random.Random(2)
    for _ in range(500):
        a, b = random_tokens(rng, VOCAB[:5], 8), random_tokens(rng, VOCAB[:5], 8)
        for n in (1, 2, 4):
            assert bleu(a, b, n) == pytest.approx(naive_bleu(a, b, n), abs=1e-12)


# Porter

def test_porter_examples():
    assert porter_stem("running") == "run"
    assert porter_stem("cats") == "cat"
    assert porter_stem("run") == "run"


def test_porter_vocabulary(fixtures_dir):
    mismatches = []
    n = 0
    with open(fixtures_dir / "porter_vocabulary.tsv", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            word, stem = line.rstrip("\n").split("\t")
            n += 1
            if porter_stem(word) != stem:
                mismatches.append((word, stem, porter_stem(word)))
    assert n > 8000
    assert mismatches == []


# METEOR

def test_meteor_stem_example():
    al = meteor_align(["cats", "running"], ["cat", "runs"])
    assert [(c, r, s) for c, r, s in al.pairs] == [(0, 0, Stage.STEM), (1, 1, Stage.STEM)]
    assert al.chunk_count == 1
    assert meteor_score(al, 2, 2) == pytest.approx(0.9375, abs=1e-12)


def test_meteor_identity_and_crossing():
    al = meteor_align(list("abcdef"), list("abcdef"))
    assert al.pairs == tuple((i, i, Stage.EXACT) for i in range(6)) and al.chunk_count == 1
    assert meteor_score(al, 6, 6) == pytest.approx(1 - 0.5 / 216, abs=1e-12)
    assert meteor_score(al, 6, 6) == pytest.approx(0.99769, abs=1e-5)
    assert meteor_align(["b", "a"], ["a", "b"]).chunk_count == 2


def test_meteor_zero_and_synonym_stage(fixtures_dir):
    assert meteor(["x"], ["y"]) == 0.0
    assert meteor_score(Alignment((), 0), 3, 3) == 0.0
    table = SynonymTable.load(fixtures_dir / "synonyms.tsv")
    al = meteor_align(["rules", "kit"], ["regulations", "gear"], table)
    assert [s for _, _, s in al.pairs] == [Stage.SYNONYM, Stage.SYNONYM]
    assert meteor_align(["rules"], ["regulations"]).pairs == ()


def test_meteor_prefers_fewer_chunks():
    # "the" could pair with either reference "the"; only the second keeps one chunk
    al = meteor_align(["the", "cat"], ["the", "dog", "the", "cat"])
    assert [(c, r) for c, r, _ in al.pairs] == [(0, 2), (1, 3)]
    assert al.chunk_count == 1


def test_meteor_tie_break_leftmost():
    al = meteor_align(["a"], ["a", "a"])
    assert [(c, r) for c, r, _ in al.pairs] == [(0, 0)]


def test_count_chunks_matches_naive():
    rng = random.Random(5)
    for _ in range(300):
        refs = rng.sample(range(8), rng.randint(0, 8))
        pairs = list(zip(sorted(rng.sample(range(8), len(refs))), refs))
        assert count_chunks(pairs) == naive_chunks(pairs)


def _oracle_stages(syn):
    return [
        (Stage.EXACT, lambda a, b: a == b),
        (Stage.STEM, lambda a, b: porter_stem(a) == porter_stem(b)),
        (Stage.SYNONYM, syn.are_synonyms),
    ]


def test_meteor_matches_brute_force_search():
    rng = random.Random(11)
    stages = _oracle_stages(SYN)
    for _ in range(500):
        a, b = random_tokens(rng, VOCAB, 6), random_tokens(rng, VOCAB, 6)
        al = meteor_align(a, b, SYN)
        expected = brute_force_align(a, b, stages)
        assert [tuple(p) for p in al.pairs] == expected
        assert al.chunk_count == naive_chunks(expected)
        assert len({c for c, _, _ in al.pairs}) == len({r for _, r, _ in al.pairs}) == len(al.pairs)


def test_meteor_greedy_fallback_is_valid():
    a = ["x"] * 30
    b = ["x"] * 30
    al = meteor_align(a, b)
    assert len(al.pairs) == 30 and al.chunk_count == 1


# BERTScore

def emb(vectors, tokens=None):
    vectors = np.asarray(vectors, dtype=float)
    return TokenEmbeddings(tuple(tokens or [f"t{i}" for i in range(len(vectors))]), vectors)


def test_bertscore_hand_example():
    h = math.sqrt(2) / 2
    s = bertscore(emb([[1, 0], [h, h]]), emb([[1, 0], [0, 1]]))
    assert s.precision == pytest.approx((1 + h) / 2, abs=1e-9)
    assert s.recall == pytest.approx((1 + h) / 2, abs=1e-9)
    assert s.f == pytest.approx(0.8536, abs=1e-4)


def test_bertscore_identity_orthogonal_empty():
    e = emb(np.eye(3))
    assert tri(bertscore(e, e)) == (1.0, 1.0, 1.0)
    assert tri(bertscore(emb([[1, 0]]), emb([[0, 1]]))) == (0.0, 0.0, 0.0)
    assert tri(bertscore(emb(np.zeros((0, 0))), e)) == (0.0, 0.0, 0.0)


def test_bertscore_errors():
    with pytest.raises(EmbeddingError, match="dimension"):
        bertscore(emb([[1, 0]]), emb([[1, 0, 0]]))
    with pytest.raises(EmbeddingError, match="unit"):
        emb([[2, 0]])
    with pytest.raises(EmbeddingError):
        TokenEmbeddings(("a", "b"), np.array([[1.0, 0.0]]))


def test_bertscore_swap_symmetry_with_idf():
    rng = np.random.default_rng(3)
    for _ in range(200):
        c = TokenEmbeddings.normalized([f"c{i}" for i in range(4)], rng.normal(size=(4, 5)))
        r = TokenEmbeddings.normalized([f"r{i}" for i in range(3)], rng.normal(size=(3, 5)))
        idf = {t: float(rng.uniform(0.1, 2)) for t in c.tokens + r.tokens}
        fwd, back = bertscore(c, r, idf), bertscore(r, c, idf)
        assert fwd.precision == pytest.approx(back.recall, abs=1e-12)
        assert fwd.recall == pytest.approx(back.precision, abs=1e-12)


def test_embeddings_round_trip(tmp_path):
    e = TokenEmbeddings.normalized(["a", "b"], [[3, 4], [0, 2]])
    assert np.allclose(e.vectors, [[0.6, 0.8], [0, 1]])
    write_embeddings([(7, "candidate", e)], tmp_path / "e.jsonl")
    back = load_embeddings(tmp_path / "e.jsonl")
    assert np.allclose(back[(7, "candidate")].vectors, e.vectors)
    (tmp_path / "bad.jsonl").write_text('{"record_id": 1, "side": "x", "tokens": [], "vectors": []}\n')
    with pytest.raises(EmbeddingError, match=":1:"):
        load_embeddings(tmp_path / "bad.jsonl")


# ranges

token_lists = st.lists(st.sampled_from(VOCAB), max_size=8)


@settings(max_examples=300, deadline=None)
@given(token_lists, token_lists)
def test_lexical_metrics_in_unit_interval(a, b):
    for value in (*tri(rouge1(a, b)), bleu(a, b), bleu(a, b, 1), meteor(a, b, SYN)):
        assert 0.0 <= value <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(VOCAB), min_size=1, max_size=10))
def test_meteor_identity_closed_form(x):
    assert meteor(x, x) == float(1 - Fraction(1, 2) * Fraction(1, len(x)) ** 3)


# aggregation

def test_corpus_aggregate_hand_computed():
    samples = [
        {"meteor": 0.9375, "rouge1": 4 / 7},
        {"meteor": 0.0, "rouge1": 1.0},
        {"meteor": 0.5, "rouge1": 0.25},
        {"meteor": 1 / 3, "rouge1": 0.0},
        {"meteor": 0.125, "rouge1": 2 / 3},
    ]
    means = corpus_aggregate(samples)
    assert means["meteor"] == pytest.approx(0.3791666666666667, abs=1e-9)
    assert means["rouge1"] == pytest.approx(0.4976190476190476, abs=1e-9)


def test_corpus_aggregate_edges():
    assert corpus_aggregate([{"m": 0.2}, {"m": 0.4}])["m"] == pytest.approx(0.3)
    assert corpus_aggregate([{"m": 0.7}]) == {"m": 0.7}
    assert corpus_aggregate([{"m": 0.7, "b": None}]) == {"m": 0.7}
    with pytest.raises(ValueError):
        corpus_aggregate([])
