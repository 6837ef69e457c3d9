"""Streaming reader for MediaWiki XML export dumps.

Pages are yielded one at a time and discarded from the parse tree as soon as
they are complete, so memory stays bounded by the largest single page.
"""

from __future__ import annotations

import bz2
import gzip
import io
import os
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Union
from xml.etree.ElementTree import ParseError, XMLPullParser

CHUNK_SIZE = 64 * 1024

GZIP_MAGIC = b"\x1f\x8b"
BZIP2_MAGIC = b"BZh"

DumpSource = Union[str, os.PathLike, BinaryIO]


class DumpError(Exception):
    """Base class for dump reading failures."""


class MalformedDumpError(DumpError):
    def __init__(self, message: str, offset: int, title: str | None = None):
        where = f"near byte {offset}"
        if title:
            where += f" in page {title!r}"
        super().__init__(f"malformed XML {where}: {message}")
        self.offset = offset
        self.title = title


class TruncatedDumpError(DumpError):
    def __init__(self, message: str, offset: int, pages_read: int):
        super().__init__(
            f"dump truncated after {pages_read} complete pages "
            f"(byte {offset}): {message}"
        )
        self.offset = offset
        self.pages_read = pages_read


@dataclass(frozen=True)
class RawPage:
    title: str
    namespace: int
    is_redirect: bool
    wikitext: str
    page_id: int


def _local(tag: str) -> str:
    # export schema puts every element in the mediawiki.org namespace
    return tag.rsplit("}", 1)[-1]


def open_dump(source: DumpSource) -> BinaryIO:
    """Open *source* as a decompressed binary stream.

    Compression is sniffed from the leading magic bytes, not the file name.
    """
    if isinstance(source, (str, os.PathLike)):
        raw: BinaryIO = open(source, "rb")
    else:
        raw = source
    buffered = raw if hasattr(raw, "peek") else io.BufferedReader(raw)  # type: ignore[arg-type]
    head = buffered.peek(3)[:3]
    if head.startswith(GZIP_MAGIC):
        return gzip.GzipFile(fileobj=buffered, mode="rb")  # type: ignore[return-value]
    if head.startswith(BZIP2_MAGIC):
        return bz2.BZ2File(buffered, mode="rb")  # type: ignore[return-value]
    return buffered  # type: ignore[return-value]


def _page_from_element(elem) -> RawPage:
    title = ""
    ns = 0
    page_id = None
    redirect = False
    text = ""
    for child in elem:
        tag = _local(child.tag)
        if tag == "title":
            title = (child.text or "").strip()
        elif tag == "ns":
            ns = int((child.text or "0").strip())
        elif tag == "id":
            page_id = int((child.text or "0").strip())
        elif tag == "redirect":
            redirect = True
        elif tag == "revision":
            # later revisions win; exports list them oldest first
            for field in child:
                if _local(field.tag) == "text":
                    text = field.text or ""
    if not title:
        raise ValueError("page without a title")
    return RawPage(
        title=title,
        namespace=ns,
        is_redirect=redirect,
        wikitext=text,
        page_id=page_id if page_id is not None else 0,
    )


def stream_pages(source: DumpSource, chunk_size: int = CHUNK_SIZE) -> Iterator[RawPage]:
    """Yield every ``<page>`` of a MediaWiki export in document order.

    Raises :class:`MalformedDumpError` on invalid XML and
    :class:`TruncatedDumpError` when the stream ends mid-document; in the
    latter case all complete pages have already been yielded.
    """
    stream = open_dump(source)
    close_stream = isinstance(source, (str, os.PathLike))
    parser = XMLPullParser(events=("start", "end"))
    offset = 0
    pages = 0
    title: str | None = None
    stack: list = []

    def drain() -> Iterator[RawPage]:
        nonlocal pages, title
        events = parser.read_events()
        while True:
            # feed() queues syntax errors; they surface here
            try:
                event, elem = next(events)
            except StopIteration:
                return
            except ParseError as exc:
                raise MalformedDumpError(str(exc), offset, title) from None
            tag = _local(elem.tag)
            if event == "start":
                stack.append(elem)
                if tag == "page":
                    title = None
                continue
            stack.pop()
            if tag == "title" and stack and _local(stack[-1].tag) == "page":
                title = (elem.text or "").strip()
            elif tag == "page":
                try:
                    page = _page_from_element(elem)
                except ValueError as exc:
                    raise MalformedDumpError(str(exc), offset, title) from None
                if stack:
                    stack[-1].remove(elem)
                pages += 1
                yield page

    try:
        while True:
            try:
                chunk = stream.read(chunk_size)
            except (EOFError, OSError) as exc:
                # gzip/bz2 raise here when the compressed stream is cut short
                yield from drain()
                raise TruncatedDumpError(str(exc), offset, pages) from None
            if not chunk:
                break
            parser.feed(chunk)
            offset += len(chunk)
            yield from drain()
        try:
            parser.close()
        except ParseError as exc:
            yield from drain()
            raise TruncatedDumpError(str(exc), offset, pages) from None
        yield from drain()
    finally:
        if close_stream:
            stream.close()
