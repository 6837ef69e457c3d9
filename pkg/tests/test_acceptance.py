"""Acceptance criteria, one test each, with their runtime limits.

Each test prints a PASS/FAIL line; the lines are repeated in pytest's
terminal summary. Run alone with ``pytest -m acceptance``.
"""

import csv
import io
import json
import logging
import math
import random
import tracemalloc
from fractions import Fraction

import numpy as np
import pytest

from oracles import brute_force_align, naive_chunks, naive_overlap, random_tokens
from searchexplain.cli import main
from searchexplain.dataset import build_dataset, iter_records, read_jsonl
from searchexplain.dump import stream_pages
from searchexplain.genclient import EndpointConfig, GenerationRequest, RetryPolicy, generate, generate_batch
from searchexplain.metrics import (
    Stage,
    SynonymTable,
    TokenEmbeddings,
    bertscore,
    bleu,
    meteor,
    meteor_align,
    meteor_score,
    normalize_tokenize,
    porter_stem,
    rouge1,
    unigram_overlap,
)
from searchexplain.runner import read_scores

pytestmark = pytest.mark.acceptance

TOL = 1e-6
VOCAB = ["the", "cat", "cats", "run", "runs", "running", "rules", "laws", "gear", "kit", "a", "b", "sat"]
SYN = SynonymTable({"rules": {"g1"}, "laws": {"g1"}, "gear": {"g2"}, "kit": {"g2"}})


def test_metric_oracle_suite(criterion):
    with criterion("metric oracle suite", 1.0):
        r = rouge1(["the", "cat", "sat"], ["the", "cat", "ate", "fish"])
        assert abs(r.f - 4 / 7) <= TOL and abs(r.precision - 2 / 3) <= TOL and abs(r.recall - 0.5) <= TOL
        assert abs(bleu(["the", "the", "the"], ["the", "cat"], max_n=1) - 1 / 3) <= TOL
        assert bleu(list("abcd"), list("abcd")) == 1.0
        al = meteor_align(["cats", "running"], ["cat", "runs"])
        assert [s for *_, s in al.pairs] == [Stage.STEM, Stage.STEM] and al.chunk_count == 1
        assert abs(meteor_score(al, 2, 2) - 0.9375) <= TOL
        assert meteor_align(["b", "a"], ["a", "b"]).chunk_count == 2
        assert abs(meteor(list("abcdef"), list("abcdef")) - 0.99769) <= 1e-5
        h = math.sqrt(2) / 2
        c = TokenEmbeddings(("x", "y"), np.array([[1.0, 0.0], [h, h]]))
        ref = TokenEmbeddings(("u", "v"), np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert abs(bertscore(c, ref).f - (1 + h) / 2) <= TOL
        assert abs(bertscore(c, ref).f - 0.8536) <= 1e-4
        assert [porter_stem(w) for w in ("running", "cats", "run")] == ["run", "cat", "run"]
        assert normalize_tokenize("Don't stop") == ["don", "'", "t", "stop"]


def test_brute_force_equivalence(criterion):
    with criterion("brute-force equivalence (1,000 ROUGE-1, 500 METEOR)", 30.0):
        rng = random.Random(20240301)
        for _ in range(1000):
            a, b = random_tokens(rng, VOCAB, 12), random_tokens(rng, VOCAB, 12)
            assert unigram_overlap(a, b) == naive_overlap(a, b)
        stages = [
            (Stage.EXACT, lambda x, y: x == y),
            (Stage.STEM, lambda x, y: porter_stem(x) == porter_stem(y)),
            (Stage.SYNONYM, SYN.are_synonyms),
        ]
        for _ in range(500):
            a, b = random_tokens(rng, VOCAB, 6), random_tokens(rng, VOCAB, 6)
            al = meteor_align(a, b, SYN)
            expected = brute_force_align(a, b, stages)
            assert [tuple(p) for p in al.pairs] == expected
            assert al.chunk_count == naive_chunks(expected)


def test_identity_and_range(criterion):
    with criterion("identity/range properties (10,000 pairs)", 60.0):
        rng = random.Random(7)
        nrng = np.random.default_rng(7)
        for _ in range(10_000):
            a, b = random_tokens(rng, VOCAB, 10), random_tokens(rng, VOCAB, 10)
            r = rouge1(a, b)
            values = [r.precision, r.recall, r.f, bleu(a, b), meteor(a, b, SYN)]
            ca = TokenEmbeddings.normalized(a, nrng.normal(size=(len(a), 4))) if a else TokenEmbeddings((), [])
            cb = TokenEmbeddings.normalized(b, nrng.normal(size=(len(b), 4))) if b else TokenEmbeddings((), [])
            bs = bertscore(ca, cb)
            values += [bs.precision, bs.recall, bs.f]
            assert all(0.0 <= v <= 1.0 for v in values), (a, b, values)
            if a:
                assert rouge1(a, a).f == 1.0
                m = len(a)
                assert meteor(a, a) == float(1 - Fraction(1, 2) * Fraction(1, m) ** 3)
                if len(a) >= 4:
                    assert bleu(a, a) == 1.0
                assert abs(bertscore(ca, ca).f - 1.0) <= 1e-12


def test_dataset_construction(criterion, fixtures_dir, tmp_path):
    with criterion("dataset construction on fixture dump", 5.0):
        expected = json.loads((fixtures_dir / "mini-enwiki.expected.json").read_text())
        dump = fixtures_dir / "mini-enwiki.xml"
        records = list(iter_records(dump))
        assert list(dict.fromkeys(r.query for r in records)) == expected["accepted"]
        assert all(128 <= len(r.document.split()) <= 512 for r in records)
        hill = {r.explanation: len(r.document.split()) for r in records if r.query == "Boundary Hill"}
        assert hill == {"Geography": 128, "Climate": 512, "Fauna": 300}
        assert "Edge Lake" not in {r.query for r in records}

        cards = [build_dataset(dump, tmp_path / run) for run in ("a", "b")]
        assert cards[0] == cards[1]
        assert cards[0]["fractions"] == {"train": "4/5", "dev": "1/10", "test": "1/10"}
        splits = [read_jsonl(tmp_path / "a" / f"{n}.jsonl") for n in ("train", "dev", "test")]
        q = [s.queries() for s in splits]
        assert not (q[0] & q[1] or q[0] & q[2] or q[1] & q[2])
        assert sum(len(s.records) for s in splits) == len(records)
        for n in ("train", "dev", "test"):
            assert (tmp_path / "a" / f"{n}.jsonl").read_bytes() == (tmp_path / "b" / f"{n}.jsonl").read_bytes()


def _synthetic_dump(path, n, chunk_words=150, big_words=20_000):
    page = ('<page><title>P{i}</title><ns>0</ns><id>{i}</id><revision><id>1</id>'
            '<text xml:space="preserve">== A ==\n{body}</text></revision></page>\n')
    small, big = " ".join(["word"] * chunk_words), " ".join(["word"] * big_words)
    largest = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">'
                 "<siteinfo><sitename>synthetic</sitename></siteinfo>\n")
        for i in range(n):
            text = page.format(i=i, body=big if i == n // 2 else small)
            largest = max(largest, len(text.encode("utf-8")))
            fh.write(text)
        fh.write("</mediawiki>\n")
    return largest


def _peak_while_streaming(path):
    tracemalloc.start()
    try:
        count = sum(1 for _ in stream_pages(path))
        return count, tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def test_streaming_memory(criterion, tmp_path):
    with criterion("streaming 50,000 pages with bounded memory", 60.0):
        small_path, big_path = tmp_path / "small.xml", tmp_path / "big.xml"
        _synthetic_dump(small_path, 5_000)
        largest = _synthetic_dump(big_path, 50_000)
        n_small, peak_small = _peak_while_streaming(small_path)
        n_big, peak_big = _peak_while_streaming(big_path)
        assert (n_small, n_big) == (5_000, 50_000)
        # a constant multiple of the largest page (or of one read chunk, whichever is bigger)
        assert peak_big <= 16 * max(largest, 64 * 1024), (peak_big, largest)
        # and no growth with dump length
        assert peak_big <= 1.5 * peak_small + 64 * 1024, (peak_small, peak_big)


def test_end_to_end_echo(criterion, fixtures_dir, tmp_path, capsys):
    with criterion("end-to-end echo run", 30.0):
        out = tmp_path / "run"
        assert main(["run", "--config", str(fixtures_dir / "run.toml"), "--out", str(out)]) == 0
        row = json.loads((out / "row.json").read_text())
        assert row["rouge1"] == 1.0
        assert abs(row["bertscore"] - 1.0) <= 1e-12
        targets = {}
        for line in (out / "prompts.jsonl").read_text().splitlines():
            ex = json.loads(line)
            targets[ex["record_id"]] = ex["target_text"]
        scores = read_scores(out / "scores.jsonl")
        assert len(scores) == len(targets) > 0
        for s in scores:
            m = len(normalize_tokenize(targets[s.record_id]))
            assert s.meteor == float(1 - Fraction(1, 2) * Fraction(1, m) ** 3)
        md = (out / "results.md").read_text()
        assert md.startswith("| Model | Architecture | Parameters | METEOR | ROUGE-1 | BERTScore |")
        assert "**1.0000**" in md
        parsed = list(csv.reader(io.StringIO((out / "results.csv").read_text())))
        assert float(parsed[1][4]) == 1.0
        assert json.loads((out / "results.json").read_text())["best"]["rouge1"] == 1.0
        assert (out / "manifest.json").exists() and (out / "results.png").exists()
        capsys.readouterr()


def test_harness_plumbing(criterion, mock_server, caplog):
    with criterion("harness plumbing (concurrency, retry, order)", 30.0):
        slow = mock_server(mode="delay", delay=0.02)
        cfg = EndpointConfig(slow.url, "m", max_concurrent=4)
        reqs = [GenerationRequest(i, f"prompt {i}") for i in range(100)]
        results = generate_batch(reqs, cfg)
        assert [r.record_id for r in results] == list(range(100))
        assert [r.output_text for r in results] == [f"prompt {i}" for i in range(100)]
        assert slow.stats.max_in_flight <= 4

        flaky = mock_server(mode="fail-n-times", fail_times=2, fail_status=429)
        cfg = EndpointConfig(flaky.url, "m", retry=RetryPolicy(base_backoff=0.01))
        with caplog.at_level(logging.INFO, logger="searchexplain.genclient"):
            r = generate(GenerationRequest(0, "x"), cfg)
        assert r.ok and r.attempts == 3 and r.backoffs == (0.01, 0.02)
        retries = [rec for rec in caplog.records if "retrying" in rec.getMessage()]
        assert len(retries) == 2 and "429" in retries[0].getMessage()
