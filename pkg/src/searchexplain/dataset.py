"""Qualification filters, record emission and query-grouped splitting."""

from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .dump import DumpSource, stream_pages
from .wikitext import (
    BOILERPLATE_HEADINGS,
    CleanArticle,
    Section,
    clean_page,
    count_tokens,
    is_article,
    is_content_heading,
)

log = logging.getLogger(__name__)

MIN_TOKENS = 128
MAX_TOKENS = 512
MIN_SECTIONS = 3
SPLIT_NAMES = ("train", "dev", "test")
PRNG_NAME = "python-random-mt19937"

RECORD_KEYS = ("record_id", "query", "document", "explanation", "page_id", "section_index")


class RecordError(ValueError):
    pass


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class ExplanationRecord:
    record_id: int
    query: str
    document: str
    explanation: str
    page_id: int
    section_index: int

    def validate(self) -> None:
        if not (self.query and self.document and self.explanation):
            raise RecordError(f"record {self.record_id}: empty query, document or explanation")
        n = count_tokens(self.document)
        if not MIN_TOKENS <= n <= MAX_TOKENS:
            raise RecordError(f"record {self.record_id}: document has {n} tokens")
        if not is_content_heading(self.explanation):
            raise RecordError(f"record {self.record_id}: boilerplate heading {self.explanation!r}")


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: Fraction = Fraction(8, 10)
    dev_fraction: Fraction = Fraction(1, 10)
    test_fraction: Fraction = Fraction(1, 10)
    seed: int = 0

    def __post_init__(self):
        for name in ("train_fraction", "dev_fraction", "test_fraction"):
            value = Fraction(str(getattr(self, name)))
            if value < 0:
                raise SplitError(f"{name} must be non-negative")
            object.__setattr__(self, name, value)
        if self.train_fraction + self.dev_fraction + self.test_fraction != 1:
            raise SplitError("split fractions must sum to 1")
        if not 0 <= self.seed < 2**64:
            raise SplitError("seed must be an unsigned 64-bit integer")


@dataclass
class DatasetSplit:
    name: str
    records: list[ExplanationRecord] = field(default_factory=list)

    def queries(self) -> set[str]:
        return {r.query for r in self.records}


def qualify_article(
    article: CleanArticle,
    min_tokens: int = MIN_TOKENS,
    max_tokens: int = MAX_TOKENS,
    min_sections: int = MIN_SECTIONS,
) -> list[Section] | None:
    """Sections with a content heading and an in-bounds token count, or None
    when fewer than *min_sections* survive."""
    keep = [
        s
        for s in article.sections
        if s.heading and is_content_heading(s.heading) and min_tokens <= s.token_count <= max_tokens
    ]
    return keep if len(keep) >= min_sections else None


def build_records(
    article: CleanArticle, qualifying: list[Section], start_id: int = 0
) -> list[ExplanationRecord]:
    # qualifying is a subsequence of article.sections, so identity lookup is exact
    position = {id(s): i for i, s in enumerate(article.sections)}
    return [
        ExplanationRecord(
            record_id=start_id + k,
            query=article.title,
            document=s.body_clean,
            explanation=s.heading,
            page_id=article.page_id,
            section_index=position[id(s)],
        )
        for k, s in enumerate(qualifying)
    ]


def iter_records(source: DumpSource, **limits) -> Iterator[ExplanationRecord]:
    """Stream a dump and yield every record from every qualifying article."""
    next_id = 0
    for page in stream_pages(source):
        if not is_article(page):
            continue
        article = clean_page(page)
        qualifying = qualify_article(article, **limits)
        if qualifying is None:
            continue
        records = build_records(article, qualifying, next_id)
        next_id += len(records)
        yield from records


def group_by_query(records: Iterable[ExplanationRecord]) -> list[list[ExplanationRecord]]:
    groups: dict[str, list[ExplanationRecord]] = {}
    for r in records:
        groups.setdefault(r.query, []).append(r)
    return list(groups.values())


def assign_splits(
    records: list[ExplanationRecord], config: SplitConfig
) -> tuple[DatasetSplit, DatasetSplit, DatasetSplit]:
    """Shuffle query groups with a seeded PRNG and fill train, dev, test greedily
    by record count."""
    groups = group_by_query(records)
    if len(groups) < 3:
        raise SplitError(f"need at least 3 query groups to fill three splits, got {len(groups)}")
    random.Random(config.seed).shuffle(groups)

    total = len(records)
    train_target = config.train_fraction * total
    dev_target = (config.train_fraction + config.dev_fraction) * total
    splits = tuple(DatasetSplit(name) for name in SPLIT_NAMES)
    filled = 0
    for group in groups:
        if filled < train_target:
            target = splits[0]
        elif filled < dev_target:
            target = splits[1]
        else:
            target = splits[2]
        target.records.extend(group)
        filled += len(group)
    for split in splits:
        split.records.sort(key=lambda r: r.record_id)
    return splits  # type: ignore[return-value]


def write_jsonl(split: DatasetSplit, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in split.records:
            fh.write(json.dumps(asdict(r), ensure_ascii=False))
            fh.write("\n")


def read_jsonl(path: str | os.PathLike, name: str | None = None, validate: bool = True) -> DatasetSplit:
    path = Path(path)
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                missing = [k for k in RECORD_KEYS if k not in obj]
                if missing:
                    raise RecordError(f"missing key {missing[0]!r}")
                record = ExplanationRecord(
                    record_id=int(obj["record_id"]),
                    query=str(obj["query"]),
                    document=str(obj["document"]),
                    explanation=str(obj["explanation"]),
                    page_id=int(obj["page_id"]),
                    section_index=int(obj["section_index"]),
                )
                if validate:
                    record.validate()
            except (ValueError, TypeError) as exc:
                raise RecordError(f"{path}:{lineno}: {exc}") from None
            records.append(record)
    return DatasetSplit(name or path.stem, records)


def build_dataset(
    dump: str | os.PathLike,
    out_dir: str | os.PathLike,
    config: SplitConfig = SplitConfig(),
    dump_id: str | None = None,
) -> dict:
    """Full dump-to-splits pipeline; returns the dataset card it writes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = list(iter_records(dump))
    splits = assign_splits(records, config)
    for split in splits:
        write_jsonl(split, out_dir / f"{split.name}.jsonl")
    card = {
        "dump": dump_id or Path(dump).name,
        "filters": {
            "namespace": 0,
            "exclude_redirects": True,
            "exclude_disambiguation": True,
            "min_tokens": MIN_TOKENS,
            "max_tokens": MAX_TOKENS,
            "min_sections": MIN_SECTIONS,
            "tokenizer": "whitespace",
            "boilerplate_headings": sorted(BOILERPLATE_HEADINGS),
        },
        "fractions": {
            "train": str(config.train_fraction),
            "dev": str(config.dev_fraction),
            "test": str(config.test_fraction),
        },
        "seed": config.seed,
        "prng": PRNG_NAME,
        "counts": {
            "articles": len(group_by_query(records)),
            "records": len(records),
            **{s.name: len(s.records) for s in splits},
        },
    }
    with open(out_dir / "dataset_card.json", "w", encoding="utf-8") as fh:
        json.dump(card, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %d records (%s)", len(records), card["counts"])
    return card
