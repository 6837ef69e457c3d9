import csv
import io
import json

import pytest

from searchexplain.report import (
    HEADER,
    ReportError,
    ResultsRow,
    column_maxima,
    load_rows,
    render_table,
    save_figure,
)


def row(label, meteor=None, rouge1=None, bertscore=None, bleu=None, inference_time=12.4, training_time=None):
    return ResultsRow(label, "arch", "1B", meteor, rouge1, bertscore, bleu, inference_time, 1000, training_time)


@pytest.fixture
def table1(fixtures_dir):
    return load_rows([fixtures_dir / "table1.json"])


def test_header_order():
    assert HEADER[:7] == ("Model", "Architecture", "Parameters", "METEOR", "ROUGE-1", "BERTScore", "BLEU")


def test_table1_literals_and_bolding(table1):
    md = render_table(table1, "markdown")
    line = next(l for l in md.splitlines() if "FT LLaMA(v3)" in l)
    assert "**0.3222**" in line and "**0.4993**" in line and "**0.5652**" in line
    assert md.count("**") == 2 * 3  # BLEU column is empty
    assert "| 393 |" in md


def test_seconds_formatting():
    md = render_table([row("a", 0.1, inference_time=12345.6, training_time=2.5)], "markdown")
    assert "12,346" in md and "| 3 |" in md
    text = render_table([row("a", 0.1, inference_time=12345.6)], "csv")
    assert "12346" in text


def test_bold_split_across_rows():
    md = render_table([row("A", meteor=0.5, rouge1=0.1), row("B", meteor=0.2, rouge1=0.9)], "markdown")
    a, b = [l for l in md.splitlines() if l.startswith("| A") or l.startswith("| B")]
    assert "**0.5000**" in a and "**0.1000**" not in a
    assert "**0.9000**" in b and "**0.2000**" not in b


def test_ties_at_display_precision_both_bold():
    rows = [row("A", meteor=0.12341), row("B", meteor=0.12344)]
    assert column_maxima(rows)["meteor"] == 0.1234
    assert render_table(rows, "markdown").count("**0.1234**") == 2


def test_csv_round_trip(table1):
    parsed = list(csv.reader(io.StringIO(render_table(table1, "csv"))))
    assert tuple(parsed[0]) == HEADER
    for cells, r in zip(parsed[1:], table1):
        assert cells[0] == r.label
        for idx, name in zip(range(3, 7), ("meteor", "rouge1", "bertscore", "bleu")):
            value = getattr(r, name)
            assert (cells[idx] == "-") if value is None else float(cells[idx]) == pytest.approx(value, abs=5e-5)


def test_json_render(table1, tmp_path):
    payload = json.loads(render_table(table1, "json"))
    assert payload["best"]["rouge1"] == 0.4993
    path = tmp_path / "r.json"
    path.write_text(render_table(table1, "json"))
    assert load_rows([path]) == table1


def test_errors():
    with pytest.raises(ReportError, match="no results"):
        render_table([], "markdown")
    with pytest.raises(ReportError, match="unknown report format"):
        render_table([row("a", 0.1)], "html")
    with pytest.raises(ReportError, match=r"\[0, 1\]"):
        row("a", meteor=1.5)


def test_pipe_in_label_escaped():
    assert "a\\|b" in render_table([row("a|b", 0.1)], "markdown")


def test_figure_written(table1, tmp_path):
    path = save_figure(table1, tmp_path / "results.png")
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
