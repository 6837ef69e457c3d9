"""Regenerate the bundled fixtures.

    python fixtures/make_fixtures.py

Writes the mini dump, its expected per-section token counts (computed here
from the segment recipe, independently of the cleaner), the three-page and
header-only dumps, the fixture dataset built with seed 0, a synonym table and
lexical stand-in embeddings for the test split.
"""

from __future__ import annotations

import hashlib
import json
import random
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

HERE = Path(__file__).resolve().parent

SITEINFO = """  <siteinfo>
    <sitename>Wikipedia</sitename>
    <dbname>enwiki</dbname>
    <base>https://en.wikipedia.org/wiki/Main_Page</base>
    <generator>MediaWiki 1.42.0-wmf.20</generator>
    <case>first-letter</case>
    <namespaces>
      <namespace key="0" case="first-letter" />
      <namespace key="1" case="first-letter">Talk</namespace>
      <namespace key="14" case="first-letter">Category</namespace>
    </namespaces>
  </siteinfo>
"""

HEAD = '<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">\n'

# (markup, tokens it leaves after cleaning)
MARKUP = [
    ("[[Association football|football]]", 1),
    ("[[linked article]]", 2),
    ("'''bold phrase'''", 2),
    ("''italic''", 1),
    ("{{cite web|url=http://example.org|title={{lang|fr|Titre}}}}", 0),
    ("<ref>Smith, J. (2001). A source. p. 4.</ref>", 0),
    ('<ref name="a" />', 0),
    ("<!-- editor note: check this -->", 0),
    ("[http://example.org/page external label]", 2),
    ("[[File:Example.jpg|thumb|A caption with [[a link|text]] inside]]", 0),
    ("<small>tiny</small>", 1),
    ("{{convert|5|km|mi}}", 0),
]

VOCAB = (
    "the of and a to in is was for on that with as by at from it an are this which "
    "be or has its their were also been other first more one two new after most many "
    "used into only over such some time these may than when during between both early "
    "known years later each under while where about would through made part common "
    "form small large several within around modern often including since different "
    "period main based number local system high called century world three region "
    "practice style design players season record history general"
).split()

TABLE = '{| class="wikitable"\n|-\n! Year !! Event\n|-\n| 1900 || founded\n|}'


def body(rng: random.Random, tokens: int, topic: str, subsection: bool = False) -> tuple[str, int]:
    """Wikitext whose cleaned form has exactly *tokens* whitespace tokens."""
    parts: list[str] = []
    count = 0
    lines: list[str] = []
    markup = list(MARKUP)
    rng.shuffle(markup)
    markup = markup[: rng.randint(3, 6)]
    budget = tokens - sum(n for _, n in markup)
    assert budget > 20, tokens
    words = [rng.choice(VOCAB) for _ in range(budget)]
    words[0] = topic.lower().split()[0]
    for w in words:
        parts.append(w)
        count += 1
        if markup and rng.random() < 0.08:
            m, n = markup.pop()
            parts.append(m)
            count += n
    for m, n in markup:
        parts.append(m)
        count += n
    cut = len(parts) // 2
    lines.append(" ".join(parts[:cut]))
    if subsection:
        lines.append("=== Details ===")
    else:
        lines.append(TABLE)
    lines.append(" ".join(parts[cut:]))
    assert count == tokens
    return "\n".join(lines), count


# title -> list of (heading, token count); "lead" text always precedes
ARTICLES: list[tuple[str, list[tuple[str, int]]]] = [
    ("Badminton", [("History", 240), ("Rules", 300), ("Equipment", 220), ("Organization", 180), ("References", 300), ("External links", 150)]),
    ("Chess", [("Rules", 400), ("History", 350), ("Notation", 200), ("See also", 160)]),
    ("Volcano", [("Etymology", 90), ("Formation", 260), ("Eruption types", 310), ("Hazards", 205)]),
    ("Honey bee", [("Taxonomy", 150), ("Life cycle", 260), ("Beekeeping", 280), ("Notes", 200)]),
    ("Jazz", [("Etymology", 140), ("Origins", 500), ("Styles", 330), ("Instruments", 175), ("Further reading", 140)]),
    ("Lighthouse", [("History", 210), ("Construction", 270), ("Lenses", 190)]),
    ("Origami", [("History", 230), ("Techniques", 260), ("Materials", 145), ("Gallery", 200)]),
    ("Tea", [("Etymology", 160), ("Cultivation", 290), ("Processing", 250), ("Preparation", 210)]),
    ("Glacier", [("Formation", 300), ("Motion", 280), ("Landforms", 240)]),
    ("Bicycle", [("History", 460), ("Frame", 200), ("Drivetrain", 190), ("Brakes", 170)]),
    ("Comet", [("Nomenclature", 180), ("Structure", 320), ("Orbits", 260)]),
    ("Coral reef", [("Formation", 330), ("Biology", 300), ("Threats", 230), ("Bibliography", 300)]),
    ("Printing press", [("Invention", 300), ("Mechanics", 240), ("Spread", 200)]),
    ("Saxophone", [("History", 250), ("Construction", 270), ("Use in music", 310), ("Sources", 150)]),
    ("Windmill", [("History", 300), ("Types", 260), ("Uses", 190)]),
    ("Octopus", [("Anatomy", 380), ("Behaviour", 290), ("Intelligence", 210)]),
    ("Marathon", [("Origin", 240), ("Course", 170), ("Records", 200), ("Citations", 140)]),
    ("Sourdough", [("History", 200), ("Starter", 260), ("Baking", 230)]),
    ("Telescope", [("History", 320), ("Optics", 270), ("Mounts", 160), ("Footnotes", 180)]),
    ("Lichen", [("Structure", 210), ("Reproduction", 250), ("Ecology", 280)]),
    # boundary: exactly 128 and 512 qualify, 127 and 513 do not
    ("Boundary Hill", [("Geography", 128), ("Climate", 512), ("Fauna", 300), ("Flora", 127), ("Geology", 513)]),
    # rejected: only two sections in bounds
    ("Edge Lake", [("Geography", 127), ("Climate", 128), ("Fauna", 512), ("Flora", 513)]),
    # rejected: three sections but one is boilerplate
    ("Quiet Street", [("History", 200), ("Residents", 220), ("External links", 300)]),
    # rejected: every section too short
    ("Tiny Island", [("Geography", 60), ("Climate", 70), ("Wildlife", 80), ("Transport", 90)]),
]

# pages that must never reach the dataset even though they have good sections
EXCLUDED = [
    ("Mercury (disambiguation)", 0, False, [("Planet", 200), ("Element", 220), ("Deity", 240)]),
    ("Talk:Badminton", 1, False, [("Sources", 200), ("Rules dispute", 220), ("Scope", 240), ("Merge", 250)]),
    ("Category:Racket sports", 14, False, [("Overview", 200), ("Members", 220), ("Scope", 240)]),
    ("Shuttlecock sport", 0, True, []),
]

ACCEPTED = [t for t, secs in ARTICLES if t not in {"Edge Lake", "Quiet Street", "Tiny Island"}]


def page_xml(title: str, ns: int, page_id: int, text: str, redirect: str | None = None) -> str:
    rev_id = 1_000_000 + page_id
    sha = hashlib.sha1(text.encode()).hexdigest()
    red = f'    <redirect title="{escape(redirect)}" />\n' if redirect else ""
    return (
        "  <page>\n"
        f"    <title>{escape(title)}</title>\n"
        f"    <ns>{ns}</ns>\n"
        f"    <id>{page_id}</id>\n"
        f"{red}"
        "    <revision>\n"
        f"      <id>{rev_id}</id>\n"
        "      <timestamp>2024-03-01T00:00:00Z</timestamp>\n"
        "      <contributor><username>Fixture</username><id>1</id></contributor>\n"
        "      <model>wikitext</model>\n"
        "      <format>text/x-wiki</format>\n"
        f'      <text bytes="{len(text.encode())}" xml:space="preserve">{escape(text)}</text>\n'
        f"      <sha1>{sha}</sha1>\n"
        "    </revision>\n"
        "  </page>\n"
    )


def article_text(rng: random.Random, title: str, sections: list[tuple[str, int]]) -> tuple[str, list[dict]]:
    lead = (
        "{{Short description|Fixture article}}\n{{Infobox thing\n| name = " + title + "\n| image = x.png\n}}\n"
        f"'''{title}''' is a fixture article used to exercise the pipeline.<ref>Lead source.</ref>"
    )
    chunks = [lead]
    expected = []
    for k, (heading, n) in enumerate(sections):
        text, count = body(rng, n, title, subsection=(k % 2 == 1))
        spacing = " " if k % 3 else ""
        chunks.append(f"=={spacing}{heading}{spacing}==")
        chunks.append(text)
        expected.append({"heading": heading, "tokens": count})
    chunks.append("[[Category:Fixture articles]]")
    return "\n".join(chunks) + "\n", expected


def mini_dump() -> dict:
    rng = random.Random(20240301)
    pages = []
    expected = {"articles": [], "excluded": [], "accepted": ACCEPTED}
    page_id = 100
    for title, sections in ARTICLES:
        text, exp = article_text(rng, title, sections)
        pages.append(page_xml(title, 0, page_id, text))
        expected["articles"].append({"title": title, "page_id": page_id, "sections": exp})
        page_id += 1
    for title, ns, redirect, sections in EXCLUDED:
        if redirect:
            text = "#REDIRECT [[Badminton]]"
            pages.append(page_xml(title, ns, page_id, text, redirect="Badminton"))
        else:
            text, _ = article_text(rng, title, sections)
            pages.append(page_xml(title, ns, page_id, text))
        expected["excluded"].append(title)
        page_id += 1
    # interleave the excluded pages so filtering is exercised mid-stream
    ordered = pages[:5] + pages[len(ARTICLES):] + pages[5 : len(ARTICLES)]
    xml = HEAD + SITEINFO + "".join(ordered) + "</mediawiki>\n"
    (HERE / "mini-enwiki.xml").write_text(xml, encoding="utf-8")
    (HERE / "mini-enwiki.expected.json").write_text(json.dumps(expected, indent=2) + "\n", encoding="utf-8")
    return expected


def small_dumps() -> None:
    three = [
        page_xml("Alpha", 0, 1, "== One ==\nalpha text"),
        page_xml("Beta", 0, 2, "#REDIRECT [[Alpha]]", redirect="Alpha"),
        page_xml("Talk:Alpha", 1, 3, "discussion"),
    ]
    (HERE / "three-pages.xml").write_text(HEAD + SITEINFO + "".join(three) + "</mediawiki>\n", encoding="utf-8")
    (HERE / "siteinfo-only.xml").write_text(HEAD + SITEINFO + "</mediawiki>\n", encoding="utf-8")


def token_vector(token: str, dim: int = 16) -> list[float]:
    """Deterministic unit vector per token; a lexical stand-in for an encoder."""
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return (v / np.linalg.norm(v)).tolist()


def embeddings() -> None:
    import sys

    sys.path.insert(0, str(HERE.parent / "src"))
    from searchexplain.dataset import read_jsonl
    from searchexplain.metrics import normalize_tokenize

    lines = []
    for name in ("train", "dev", "test"):
        for r in read_jsonl(HERE / "dataset" / f"{name}.jsonl").records:
            tokens = normalize_tokenize(r.explanation)
            vectors = [token_vector(t) for t in tokens]
            for side in ("candidate", "reference"):
                lines.append(json.dumps({"record_id": r.record_id, "side": side, "tokens": tokens, "vectors": vectors}))
    (HERE / "embeddings.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def dataset() -> None:
    import sys

    sys.path.insert(0, str(HERE.parent / "src"))
    from searchexplain.dataset import SplitConfig, build_dataset

    build_dataset(HERE / "mini-enwiki.xml", HERE / "dataset", SplitConfig(seed=0), dump_id="mini-enwiki (fixture)")


def synonyms() -> None:
    rows = [
        ("rules", "g.regulation"),
        ("regulations", "g.regulation"),
        ("laws", "g.regulation,g.law"),
        ("equipment", "g.gear"),
        ("gear", "g.gear"),
        ("kit", "g.gear"),
        ("history", "g.past"),
        ("origins", "g.past,g.origin"),
        ("origin", "g.origin"),
        ("beginnings", "g.origin"),
    ]
    text = "# token<TAB>group_id[,group_id...]\n" + "".join(f"{t}\t{g}\n" for t, g in rows)
    (HERE / "synonyms.tsv").write_text(text, encoding="utf-8")


if __name__ == "__main__":
    mini_dump()
    small_dumps()
    dataset()
    embeddings()
    synonyms()
