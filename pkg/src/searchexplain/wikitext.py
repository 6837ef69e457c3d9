"""Section splitting and best-effort wikitext to plain text conversion."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .dump import RawPage

BOILERPLATE_HEADINGS = frozenset(
    {
        "references",
        "external links",
        "see also",
        "notes",
        "further reading",
        "bibliography",
        "sources",
        "footnotes",
        "citations",
        "gallery",
    }
)

_LEVEL2 = re.compile(r"^==(?!=)(.*?)(?<!=)==$")
_SUBHEADING = re.compile(r"^={3,}.*={3,}$")

_COMMENT = re.compile(r"<!--.*?(?:-->|\Z)", re.S)
_REF_SELF = re.compile(r"<ref\b[^>]*/>", re.I)
_REF_PAIR = re.compile(r"<ref\b[^>]*>.*?(?:</ref\s*>|\Z)", re.I | re.S)
_FILE_LINK = re.compile(r"\[\[\s*(?:file|image|category)\s*:", re.I)
_PIPED_LINK = re.compile(r"\[\[([^\[\]|]*)\|([^\[\]]*)\]\]")
_PLAIN_LINK = re.compile(r"\[\[([^\[\]|]*)\]\]")
_EXT_LINK = re.compile(r"\[(?:https?:|ftp:)?//[^\s\]]*(?:\s+([^\]]*))?\]", re.I)
_QUOTES = re.compile(r"'{2,}")
_TAG = re.compile(r"</?[A-Za-z][^<>]*>")
_SPACE = re.compile(r"\s+")


@dataclass(frozen=True)
class Section:
    heading: str
    level: int = 2
    body_wikitext: str = ""
    body_clean: str = ""
    token_count: int = 0


@dataclass(frozen=True)
class CleanArticle:
    title: str
    page_id: int
    sections: list[Section] = field(default_factory=list)


def count_tokens(text: str) -> int:
    """Number of maximal non-whitespace runs in *text*."""
    return len(text.split())


def is_content_heading(heading: str) -> bool:
    return heading.strip().lower() not in BOILERPLATE_HEADINGS


def split_sections(wikitext: str) -> list[Section]:
    """Split on level-2 headings; the lead is dropped, subsections fold into their parent.

    Bodies are left as raw wikitext with level-3+ heading lines removed.
    """
    sections: list[Section] = []
    heading: str | None = None
    body: list[str] = []

    def flush() -> None:
        if heading is not None:
            sections.append(Section(heading=heading, level=2, body_wikitext="\n".join(body)))

    for line in wikitext.splitlines():
        stripped = line.strip()
        m = _LEVEL2.match(stripped)
        if m and m.group(1).strip():
            flush()
            heading = m.group(1).strip()
            body = []
        elif heading is not None and not _SUBHEADING.match(stripped):
            body.append(line)
    flush()
    return sections


def _remove_nested(text: str, opener: str, closer: str, start: re.Pattern | None = None) -> str:
    """Delete balanced ``opener ... closer`` spans, honouring nesting.

    When *start* is given only spans whose opening matches it are removed, but
    nesting is still tracked with *opener*. Unclosed spans run to end of input.
    """
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        if start is not None:
            m = start.search(text, i)
            j = m.start() if m else -1
        else:
            j = text.find(opener, i)
        if j < 0:
            out.append(text[i:])
            break
        out.append(text[i:j])
        depth = 0
        k = j
        while k < n:
            if text.startswith(opener, k):
                depth += 1
                k += len(opener)
            elif text.startswith(closer, k):
                depth -= 1
                k += len(closer)
                if depth == 0:
                    break
            else:
                k += 1
        i = k
    return "".join(out)


def clean_wikitext(body: str) -> str:
    """Reduce a wikitext fragment to whitespace-normalised plain text."""
    text = _COMMENT.sub("", body)
    text = _REF_SELF.sub("", text)
    text = _REF_PAIR.sub("", text)
    text = _remove_nested(text, "{{", "}}")
    text = _remove_nested(text, "{|", "|}")
    text = _remove_nested(text, "[[", "]]", start=_FILE_LINK)
    # innermost first so links nested in captions resolve outward
    while True:
        rewritten = _PLAIN_LINK.sub(r"\1", _PIPED_LINK.sub(r"\2", text))
        if rewritten == text:
            break
        text = rewritten
    text = _EXT_LINK.sub(lambda m: m.group(1) or "", text)
    text = _QUOTES.sub("", text)
    text = _TAG.sub("", text)
    return _SPACE.sub(" ", text).strip()


def clean_page(page: RawPage) -> CleanArticle:
    sections = []
    for section in split_sections(page.wikitext):
        body = clean_wikitext(section.body_wikitext)
        sections.append(
            replace(
                section,
                heading=clean_wikitext(section.heading),
                body_clean=body,
                token_count=count_tokens(body),
            )
        )
    return CleanArticle(title=page.title, page_id=page.page_id, sections=sections)


def is_article(page: RawPage) -> bool:
    """Main-namespace, non-redirect, non-disambiguation page."""
    return (
        page.namespace == 0
        and not page.is_redirect
        and not page.title.endswith("(disambiguation)")
    )
