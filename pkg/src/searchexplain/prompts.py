"""Render explanation records into model input representations."""

from __future__ import annotations

import enum
import json
import os
import re
import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .dataset import DatasetSplit, ExplanationRecord

TEMPLATE_VERSION = "1"
REQUIRED_FIELDS = ("query", "document")
_PLACEHOLDER = re.compile(r"\{\{|\}\}|\{query\}|\{document\}")


class TemplateError(ValueError):
    pass


class PromptStyle(enum.Enum):
    NATURAL = "natural"
    INSTRUCTION = "instruction"
    SEP = "sep"

    @classmethod
    def parse(cls, value: "str | PromptStyle") -> "PromptStyle":
        if isinstance(value, cls):
            return value
        aliases = {
            "naturalseq2seq": cls.NATURAL,
            "legacysep": cls.SEP,
        }
        key = str(value).strip().lower()
        try:
            return aliases.get(key) or cls(key)
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise TemplateError(f"unknown prompt style {value!r} (choose from {choices})") from None


DEFAULT_TEMPLATES = {
    PromptStyle.NATURAL: "Explain how the document answers the query. Query: {query} Document: {document}",
    PromptStyle.INSTRUCTION: (
        "### Instruction:\n"
        "Given a search query and a retrieved document, write a short aspect-oriented "
        "explanation stating which aspect of the query the document addresses.\n\n"
        "### Query:\n{query}\n\n"
        "### Document:\n{document}\n\n"
        "### Response:\n"
    ),
    PromptStyle.SEP: "{query} [SEP] {document}",
}


def _check_template(style: PromptStyle, template: str) -> None:
    try:
        names = {f for _, f, _, _ in string.Formatter().parse(template) if f is not None}
    except ValueError as exc:
        raise TemplateError(f"{style.value} template is not a valid format string: {exc}") from None
    for required in REQUIRED_FIELDS:
        if required not in names:
            raise TemplateError(f"{style.value} template is missing placeholder {{{required}}}")
    extra = names - set(REQUIRED_FIELDS)
    if extra:
        raise TemplateError(f"{style.value} template has unknown placeholder {{{sorted(extra)[0]}}}")


@dataclass(frozen=True)
class TemplateSet:
    templates: Mapping[PromptStyle, str] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, str] | None = None) -> "TemplateSet":
        templates = dict(DEFAULT_TEMPLATES)
        for key, value in (overrides or {}).items():
            templates[PromptStyle.parse(key)] = value
        return cls(templates)

    def get(self, style: PromptStyle) -> str:
        template = self.templates.get(style, DEFAULT_TEMPLATES[style])
        _check_template(style, template)
        return template

    def as_dict(self) -> dict[str, str]:
        return {style.value: self.templates.get(style, DEFAULT_TEMPLATES[style]) for style in PromptStyle}


@dataclass(frozen=True)
class FormattedExample:
    record_id: int
    input_text: str
    target_text: str
    style: PromptStyle

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "input_text": self.input_text,
            "target_text": self.target_text,
            "style": self.style.value,
        }


def format_example(
    record: ExplanationRecord,
    style: PromptStyle | str,
    templates: TemplateSet | None = None,
) -> FormattedExample:
    style = PromptStyle.parse(style)
    template = (templates or TemplateSet()).get(style)
    values = {"{query}": record.query, "{document}": record.document, "{{": "{", "}}": "}"}
    text = _PLACEHOLDER.sub(lambda m: values[m.group(0)], template)
    return FormattedExample(
        record_id=record.record_id,
        input_text=text,
        target_text=record.explanation,
        style=style,
    )


def batch_format(
    split: DatasetSplit | Iterable[ExplanationRecord],
    style: PromptStyle | str,
    templates: TemplateSet | None = None,
) -> list[FormattedExample]:
    records = split.records if isinstance(split, DatasetSplit) else split
    style = PromptStyle.parse(style)
    templates = templates or TemplateSet()
    templates.get(style)
    return [format_example(r, style, templates) for r in records]


def write_examples(examples: Iterable[FormattedExample], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), ensure_ascii=False))
            fh.write("\n")


def read_examples(path: str | os.PathLike) -> list[FormattedExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(
                    FormattedExample(
                        record_id=int(obj["record_id"]),
                        input_text=obj["input_text"],
                        target_text=obj["target_text"],
                        style=PromptStyle.parse(obj["style"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad formatted example: {exc}") from None
    return out
