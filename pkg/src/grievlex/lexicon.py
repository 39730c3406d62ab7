"""Rated category wordlists: data model, threshold versions and the TSV format.

A lexicon maps ``(key, category)`` pairs to the mean fit rating the pair
received from annotators (0 = does not fit, 10 = fits perfectly) and the
number of ratings behind that mean. Keys are stems, or space-separated
stem sequences for phrases.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

GRIEVANCE_CATEGORIES: tuple[str, ...] = (
    "planning", "violence", "weaponry", "help", "hate", "frustration",
    "suicide", "threat", "grievance", "fixation", "desperation", "deadline",
    "murder", "relationship", "loneliness", "surveillance", "soldier",
    "honour", "impostor", "jealousy", "god", "paranoia",
)

TSV_HEADER = ("key", "category", "mean_rating", "n_ratings")
RATING_MIN, RATING_MAX = 0.0, 10.0


class LexiconError(ValueError):
    """Base class for lexicon problems."""


class LexiconParseError(LexiconError):
    def __init__(self, message: str, line: int | None = None, path: str | os.PathLike | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class LexiconValidationError(LexiconError):
    pass


def _check_key(key: str) -> None:
    if not key:
        raise LexiconValidationError("empty key")
    if key != key.strip():
        raise LexiconValidationError(f"key {key!r} has leading/trailing whitespace")
    if key != key.lower():
        raise LexiconValidationError(f"key {key!r} is not lowercase")
    if " ".join(key.split()) != key:
        raise LexiconValidationError(f"phrase key {key!r} must use single spaces between tokens")


@dataclass(frozen=True, order=True)
class LexiconEntry:
    """One rated ``(key, category)`` pair.

    Ordering is the canonical file order: category first, then key.
    """

    category: str
    key: str
    mean_rating: float
    n_ratings: int

    def __post_init__(self) -> None:
        _check_key(self.key)
        if not self.category or self.category != self.category.strip():
            raise LexiconValidationError(f"invalid category {self.category!r}")
        if not (RATING_MIN <= self.mean_rating <= RATING_MAX) or math.isnan(self.mean_rating):
            raise LexiconValidationError(
                f"mean_rating {self.mean_rating} for {self.key!r}/{self.category} outside [0, 10]"
            )
        if isinstance(self.n_ratings, bool) or int(self.n_ratings) != self.n_ratings or self.n_ratings < 1:
            raise LexiconValidationError(f"n_ratings must be a positive integer, got {self.n_ratings!r}")

    @property
    def is_phrase(self) -> bool:
        return " " in self.key

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.key.split(" "))


@dataclass(frozen=True)
class Lexicon:
    """Immutable collection of :class:`LexiconEntry` values.

    Entries are held in canonical (category, key) order. ``categories`` keeps
    the caller's order and may include categories without entries.
    """

    entries: tuple[LexiconEntry, ...]
    categories: tuple[str, ...]
    version_tag: str = ""
    threshold: float | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        entries = tuple(sorted(self.entries))
        object.__setattr__(self, "entries", entries)
        categories = tuple(self.categories)
        object.__setattr__(self, "categories", categories)
        if len(set(categories)) != len(categories):
            raise LexiconValidationError("duplicate category in category list")
        known = set(categories)
        index: dict[tuple[str, str], LexiconEntry] = {}
        for e in entries:
            if e.category not in known:
                raise LexiconValidationError(f"entry {e.key!r} references unlisted category {e.category!r}")
            pair = (e.key, e.category)
            if pair in index:
                raise LexiconValidationError(f"duplicate (key, category) pair {pair}")
            index[pair] = e
        if self.threshold is not None:
            object.__setattr__(self, "threshold", float(self.threshold))
            below = [e for e in entries if e.mean_rating < self.threshold]
            if below:
                raise LexiconValidationError(
                    f"{len(below)} entries rated below threshold {self.threshold}, e.g. {below[0].key!r}"
                )
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[LexiconEntry],
        categories: Sequence[str] | None = None,
        version_tag: str = "",
        threshold: float | None = None,
    ) -> "Lexicon":
        entries = list(entries)
        if categories is None:
            categories = list(dict.fromkeys(e.category for e in sorted(entries)))
        return cls(tuple(entries), tuple(categories), version_tag, threshold)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, pair) -> bool:
        return pair in self._index

    def get(self, key: str, category: str) -> LexiconEntry | None:
        return self._index.get((key, category))

    def in_category(self, category: str) -> list[LexiconEntry]:
        if category not in self.categories:
            raise KeyError(category)
        return [e for e in self.entries if e.category == category]

    def counts(self) -> dict[str, int]:
        out = {c: 0 for c in self.categories}
        for e in self.entries:
            out[e.category] += 1
        return out

    def n_stems(self) -> int:
        """Number of distinct keys across all categories."""
        return len({e.key for e in self.entries})


def filter_by_threshold(lex: Lexicon, theta: float, prune_categories: bool = False) -> Lexicon:
    """Keep the entries whose mean rating is at least ``theta`` (inclusive)."""
    if not (RATING_MIN <= theta <= RATING_MAX) or math.isnan(theta):
        raise ValueError(f"threshold must lie in [0, 10], got {theta}")
    kept = [e for e in lex.entries if e.mean_rating >= theta]
    categories = lex.categories
    if prune_categories:
        used = {e.category for e in kept}
        categories = tuple(c for c in categories if c in used)
    threshold = theta if lex.threshold is None else max(theta, lex.threshold)
    return replace(lex, entries=tuple(kept), categories=categories,
                   version_tag=f"threshold-{threshold:g}", threshold=threshold)


def _parse_rows(lines: Iterable[str], path=None) -> Lexicon:
    meta: dict[str, str] = {}
    entries: list[LexiconEntry] = []
    seen: set[tuple[str, str]] = set()
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                k, v = body.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        cols = line.split("\t")
        if not header_seen:
            if tuple(cols) != TSV_HEADER:
                raise LexiconParseError(f"expected header {'<TAB>'.join(TSV_HEADER)}", lineno, path)
            header_seen = True
            continue
        if len(cols) != 4:
            raise LexiconParseError(f"expected 4 columns, got {len(cols)}", lineno, path)
        key, category, rating_s, n_s = cols
        if not key.strip():
            raise LexiconParseError("empty key", lineno, path)
        try:
            rating = float(rating_s)
            n = int(n_s)
        except ValueError:
            raise LexiconParseError(f"bad number in {rating_s!r} / {n_s!r}", lineno, path) from None
        if not (RATING_MIN <= rating <= RATING_MAX):
            raise LexiconParseError(f"rating {rating_s} outside [0, 10]", lineno, path)
        if (key, category) in seen:
            raise LexiconValidationError(f"{path or '<input>'}:{lineno}: duplicate (key, category) ({key!r}, {category!r})")
        seen.add((key, category))
        try:
            entries.append(LexiconEntry(category, key, rating, n))
        except LexiconValidationError as exc:
            raise LexiconParseError(str(exc), lineno, path) from None
    if not header_seen:
        raise LexiconParseError("missing header", None, path)

    categories = list(dict.fromkeys(e.category for e in entries))
    if meta.get("categories"):
        categories = [c for c in meta["categories"].split(",") if c]
        listed = set(categories)
        categories += [c for c in dict.fromkeys(e.category for e in entries) if c not in listed]
    threshold = float(meta["threshold"]) if meta.get("threshold") else None
    return Lexicon.from_entries(entries, categories, meta.get("version_tag", ""), threshold)


def load_lexicon(path: str | os.PathLike, format: str = "tsv") -> Lexicon:
    """Read a lexicon TSV written by :func:`save_lexicon` (or by hand).

    Lines starting with ``#`` are metadata/comments; ``# categories:``,
    ``# version_tag:`` and ``# threshold:`` are honoured when present.
    """
    if format != "tsv":
        raise ValueError(f"unsupported lexicon format {format!r}")
    with open(path, encoding="utf-8", newline="") as fh:
        return _parse_rows(fh, path)


def loads_lexicon(text: str) -> Lexicon:
    return _parse_rows(io.StringIO(text))


def dumps_lexicon(lex: Lexicon, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(f"# version_tag: {lex.version_tag}\n")
    if lex.threshold is not None:
        buf.write(f"# threshold: {lex.threshold!r}\n")
    buf.write(f"# categories: {','.join(lex.categories)}\n")
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_NONE, escapechar=None)
    writer.writerow(TSV_HEADER)
    for e in lex.entries:
        writer.writerow((e.key, e.category, f"{e.mean_rating:.6f}", e.n_ratings))
    return buf.getvalue()


def save_lexicon(lex: Lexicon, path: str | os.PathLike, comment: str | None = None) -> None:
    """Write ``lex`` as TSV in canonical (category, key) order.

    Ratings are printed with six decimals, so the round trip is exact for
    ratings that carry at most six decimals (which :mod:`grievlex.builder`
    guarantees).
    """
    try:
        Path(path).write_text(dumps_lexicon(lex, comment), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write lexicon to {path}: {exc.strerror or exc}") from exc
