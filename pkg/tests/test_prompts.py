import pytest
from hypothesis import given, strategies as st

from searchexplain.dataset import DatasetSplit, ExplanationRecord
from searchexplain.prompts import (
    DEFAULT_TEMPLATES,
    PromptStyle,
    TemplateError,
    TemplateSet,
    batch_format,
    format_example,
    read_examples,
    write_examples,
)

REC = ExplanationRecord(3, "Badminton", "D", "Rules", page_id=1, section_index=0)


def test_sep_style_is_literal():
    ex = format_example(REC, "sep")
    assert ex.input_text == "Badminton [SEP] D"
    assert ex.target_text == "Rules"
    assert ex.record_id == 3


def test_natural_style_contains_fields():
    ex = format_example(REC, PromptStyle.NATURAL)
    assert ex.input_text == "Explain how the document answers the query. Query: Badminton Document: D"
    assert ex.target_text == "Rules"


def test_instruction_style_has_header_and_cue():
    text = format_example(REC, "instruction").input_text
    assert text.startswith("### Instruction:")
    assert text.endswith("### Response:\n")
    assert "Badminton" in text and "\nD\n" in text


def test_missing_placeholder_named():
    templates = TemplateSet.from_mapping({"natural": "Q={query}"})
    with pytest.raises(TemplateError, match=r"\{document\}"):
        format_example(REC, "natural", templates)


@pytest.mark.parametrize("template", ["{query} {document} {extra}", "{query {document}"])
def test_bad_templates_rejected(template):
    with pytest.raises(TemplateError):
        TemplateSet.from_mapping({"sep": template}).get(PromptStyle.SEP)


def test_escaped_braces_and_braces_in_values():
    templates = TemplateSet.from_mapping({"sep": "{{x}} {query}|{document}"})
    rec = ExplanationRecord(0, "a {document} b", "{query}}", "t", 1, 0)
    assert format_example(rec, "sep", templates).input_text == "{x} a {document} b|{query}}"


def test_aliases_and_unknown_style():
    assert PromptStyle.parse("NaturalSeq2Seq") is PromptStyle.NATURAL
    assert PromptStyle.parse("LegacySep") is PromptStyle.SEP
    with pytest.raises(TemplateError, match="unknown prompt style"):
        PromptStyle.parse("chat")


def test_batch_order_and_empty():
    records = [ExplanationRecord(i, f"q{i}", f"d{i}", f"e{i}", i, 0) for i in (5, 2, 9)]
    out = batch_format(DatasetSplit("test", records), "sep")
    assert [e.record_id for e in out] == [5, 2, 9]
    assert batch_format(DatasetSplit("test"), "sep") == []


def test_batch_propagates_template_error_even_when_empty():
    templates = TemplateSet.from_mapping({"sep": "{query}"})
    with pytest.raises(TemplateError):
        batch_format([], "sep", templates)


def test_styles_differ_in_input_not_target():
    records = [ExplanationRecord(i, f"q{i}", f"d{i}", f"e{i}", i, 0) for i in range(3)]
    a = batch_format(records, "natural")
    b = batch_format(records, "sep")
    for x, y in zip(a, b):
        assert x.input_text != y.input_text
        assert x.target_text == y.target_text


def test_jsonl_round_trip(tmp_path):
    exs = [format_example(REC, s) for s in PromptStyle]
    write_examples(exs, tmp_path / "p.jsonl")
    assert read_examples(tmp_path / "p.jsonl") == exs


def test_as_dict_lists_all_styles():
    assert set(TemplateSet().as_dict()) == {"natural", "instruction", "sep"}
    assert TemplateSet().as_dict()["sep"] == DEFAULT_TEMPLATES[PromptStyle.SEP]


@given(st.text(min_size=1), st.text(min_size=1))
def test_document_never_truncated(query, document):
    rec = ExplanationRecord(0, query, document, "h", 1, 0)
    for style in PromptStyle:
        assert document in format_example(rec, style).input_text
