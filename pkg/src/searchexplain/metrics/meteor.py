"""METEOR (2005 formulation): staged exact / stem / synonym alignment with a
fragmentation penalty. There is no paraphrase stage.

Each stage picks, among the maximum one-to-one matchings of still-unmatched
tokens, the one that minimises the chunk count of the combined alignment.
Ties go to the matching whose reference indices, read in candidate order, are
lexicographically smallest (leftmost reference for the earliest candidate).
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .porter import porter_stem

EXACT_SEARCH_LIMIT = 12


class Stage(enum.IntEnum):
    EXACT = 1
    STEM = 2
    SYNONYM = 3


Pair = tuple[int, int, Stage]


class SynonymTable:
    """Token -> synonym group ids; two tokens are synonyms iff their id sets meet."""

    def __init__(self, groups: Mapping[str, Iterable[str]] | None = None):
        self._groups: dict[str, frozenset[str]] = {
            tok.lower(): frozenset(ids) for tok, ids in (groups or {}).items()
        }

    def __len__(self) -> int:
        return len(self._groups)

    def groups(self, token: str) -> frozenset[str]:
        return self._groups.get(token, frozenset())

    def are_synonyms(self, a: str, b: str) -> bool:
        return bool(self.groups(a) & self.groups(b))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SynonymTable":
        groups: dict[str, set[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                token, sep, ids = line.partition("\t")
                id_list = [i.strip() for i in ids.split(",") if i.strip()]
                if not sep or not token.strip() or not id_list:
                    raise ValueError(f"{path}:{lineno}: expected 'token<TAB>group_id[,group_id...]'")
                groups.setdefault(token.strip(), set()).update(id_list)
        return cls(groups)


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[Pair, ...]
    chunk_count: int

    def __len__(self) -> int:
        return len(self.pairs)


def count_chunks(pairs: Iterable[tuple[int, int] | Pair]) -> int:
    """Maximal runs of pairs adjacent in both candidate and reference index."""
    ordered = sorted((p[0], p[1]) for p in pairs)
    chunks = 0
    prev = None
    for c, r in ordered:
        if prev is None or c != prev[0] + 1 or r != prev[1] + 1:
            chunks += 1
        prev = (c, r)
    return chunks


def _stage_predicates(synonyms: SynonymTable | None) -> list[tuple[Stage, Callable[[str, str], bool]]]:
    stages: list[tuple[Stage, Callable[[str, str], bool]]] = [
        (Stage.EXACT, lambda a, b: a == b),
        (Stage.STEM, lambda a, b: porter_stem(a) == porter_stem(b)),
    ]
    if synonyms is not None and len(synonyms):
        stages.append((Stage.SYNONYM, synonyms.are_synonyms))
    return stages


def _greedy(options: dict[int, list[int]]) -> dict[int, int]:
    used: set[int] = set()
    chosen = {}
    for c in sorted(options):
        for r in options[c]:
            if r not in used:
                chosen[c] = r
                used.add(r)
                break
    return chosen


def _min_chunk_matching(
    n_candidate: int,
    fixed: dict[int, int],
    options: dict[int, list[int]],
) -> dict[int, int]:
    """Exact search over the ambiguous candidates in *options*.

    Walks candidate positions left to right. A new chunk starts at position i
    unless position i-1 is matched to reference r-1, so a step's cost depends
    only on the previous position's reference and the search can keep one best
    prefix per (used-reference mask, previous reference) state. Costs are
    (-matched, chunks), compared before the reference sequence itself.
    """
    refs = sorted({r for rs in options.values() for r in rs})
    bit = {r: 1 << k for k, r in enumerate(refs)}
    skip = len(refs) + max(refs) + 1  # sorts after every reference index

    states: dict[tuple[int, int | None], tuple[tuple[int, int], tuple[int, ...]]] = {(0, None): ((0, 0), ())}
    for i in range(n_candidate):
        nxt: dict = {}

        def offer(key, value):
            if key not in nxt or value < nxt[key]:
                nxt[key] = value

        for (used, prev), ((m, ch), picks) in states.items():
            if i in fixed:
                r = fixed[i]
                step = 0 if prev is not None and r == prev + 1 else 1
                offer((used, r), ((m, ch + step), picks))
            elif i in options:
                offer((used, None), ((m, ch), picks + (skip,)))
                for r in options[i]:
                    if used & bit[r]:
                        continue
                    step = 0 if prev is not None and r == prev + 1 else 1
                    offer((used | bit[r], r), ((m - 1, ch + step), picks + (r,)))
            else:
                offer((used, None), ((m, ch), picks))
        states = nxt

    _, picks = min(states.values())
    return {c: r for c, r in zip(sorted(options), picks) if r != skip}


def meteor_align(
    candidate: Sequence[str],
    reference: Sequence[str],
    synonyms: SynonymTable | None = None,
    exact_limit: int = EXACT_SEARCH_LIMIT,
) -> Alignment:
    matched_c: dict[int, int] = {}
    stage_of: dict[int, Stage] = {}
    for stage, same in _stage_predicates(synonyms):
        used_r = set(matched_c.values())
        options = {
            c: [r for r in range(len(reference)) if r not in used_r and same(candidate[c], reference[r])]
            for c in range(len(candidate))
            if c not in matched_c
        }
        options = {c: rs for c, rs in options.items() if rs}
        if not options:
            continue
        # a candidate with one partner that has no other suitor is in every maximum matching
        suitors: dict[int, int] = {}
        for rs in options.values():
            for r in rs:
                suitors[r] = suitors.get(r, 0) + 1
        forced = {c: rs[0] for c, rs in options.items() if len(rs) == 1 and suitors[rs[0]] == 1}
        ambiguous = {c: rs for c, rs in options.items() if c not in forced}
        fixed = {**matched_c, **forced}
        if not ambiguous:
            chosen = {}
        else:
            n_refs = len({r for rs in ambiguous.values() for r in rs})
            if len(ambiguous) <= exact_limit and n_refs <= exact_limit:
                chosen = _min_chunk_matching(len(candidate), fixed, ambiguous)
            else:
                chosen = _greedy(ambiguous)
        for c, r in {**forced, **chosen}.items():
            matched_c[c] = r
            stage_of[c] = stage
    pairs = tuple(sorted((c, r, stage_of[c]) for c, r in matched_c.items()))
    return Alignment(pairs=pairs, chunk_count=count_chunks(pairs))


def meteor_score(alignment: Alignment, candidate_len: int, reference_len: int) -> float:
    m = len(alignment.pairs)
    if m == 0 or candidate_len == 0 or reference_len == 0:
        return 0.0
    p = Fraction(m, candidate_len)
    r = Fraction(m, reference_len)
    f_mean = 10 * p * r / (r + 9 * p)
    penalty = Fraction(1, 2) * Fraction(alignment.chunk_count, m) ** 3
    return float(f_mean * (1 - penalty))


def meteor(candidate: Sequence[str], reference: Sequence[str], synonyms: SynonymTable | None = None) -> float:
    alignment = meteor_align(candidate, reference, synonyms)
    return meteor_score(alignment, len(candidate), len(reference))
