"""Matching lexicon keys against documents and computing category scores.

Input tokens are stemmed and compared with lexicon keys in stem space.
Phrase keys match runs of consecutive stems. Inside one category, matches
are resolved longest key first and may not overlap: once a phrase claims
its tokens, no other key of that category can use them. Matches in
different categories are independent, so one token can count towards
several categories.
"""

from __future__ import annotations

import csv
import io
import os
import weakref
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lexicon import Lexicon, LexiconEntry
from .textprep import Corpus, Document, stem

MODES = ("proportional", "weighted")


class _Node:
    __slots__ = ("children", "hits")

    def __init__(self) -> None:
        self.children: dict[str, _Node] = {}
        self.hits: list[tuple[int, LexiconEntry]] = []


class Matcher:
    """Compiled, immutable form of a lexicon for fast scanning.

    Builds one trie over the stem sequences of all keys. Scanning a
    document walks the trie from every start position, so the cost is
    linear in document length times the length of the longest partially
    matched prefix.
    """

    def __init__(self, lex: Lexicon) -> None:
        self.categories: tuple[str, ...] = lex.categories
        self._cat_index = {c: i for i, c in enumerate(self.categories)}
        self._root = _Node()
        has_phrase = [False] * len(self.categories)
        for e in lex.entries:
            ci = self._cat_index[e.category]
            node = self._root
            for tok in e.tokens:
                node = node.children.setdefault(tok, _Node())
            node.hits.append((ci, e))
            if e.is_phrase:
                has_phrase[ci] = True
        self._has_phrase = tuple(has_phrase)

    def scan(self, stems: Sequence[str]) -> list[dict[LexiconEntry, int]]:
        """Per-category occurrence counts keyed by entry, for a stemmed token list."""
        n_cat = len(self.categories)
        counts: list[dict[LexiconEntry, int]] = [defaultdict(int) for _ in range(n_cat)]
        # (length, start, entry) candidates for categories that contain phrases
        pending: list[list[tuple[int, int, LexiconEntry]]] = [[] for _ in range(n_cat)]
        has_phrase = self._has_phrase
        root_children = self._root.children
        n = len(stems)
        for i in range(n):
            node = root_children.get(stems[i])
            j = i
            while node is not None:
                length = j - i + 1
                for ci, entry in node.hits:
                    if has_phrase[ci]:
                        pending[ci].append((length, i, entry))
                    else:
                        counts[ci][entry] += 1
                j += 1
                if j >= n:
                    break
                node = node.children.get(stems[j])
        for ci, cands in enumerate(pending):
            if not cands:
                continue
            cands.sort(key=lambda c: (-c[0], c[1]))
            used = bytearray(n)
            for length, start, entry in cands:
                span = used[start:start + length]
                if any(span):
                    continue
                used[start:start + length] = b"\x01" * length
                counts[ci][entry] += 1
        return [dict(c) for c in counts]


_MATCHERS: dict[int, Matcher] = {}


def compile_lexicon(lex: Lexicon | Matcher) -> Matcher:
    """Return the (cached) matcher for ``lex``."""
    if isinstance(lex, Matcher):
        return lex
    key = id(lex)
    m = _MATCHERS.get(key)
    if m is None:
        m = Matcher(lex)
        _MATCHERS[key] = m
        weakref.finalize(lex, _MATCHERS.pop, key, None)
    return m


def _stems(doc: Document) -> list[str]:
    return [stem(t) for t in doc.tokens]


def match(doc: Document, lex: Lexicon | Matcher) -> list[tuple[str, str, int]]:
    """All ``(category, key, occurrences)`` with at least one occurrence.

    Ordered by the lexicon's category order, then key.
    """
    m = compile_lexicon(lex)
    out = []
    for ci, counts in enumerate(m.scan(_stems(doc))):
        cat = m.categories[ci]
        for entry in sorted(counts, key=lambda e: e.key):
            out.append((cat, entry.key, counts[entry]))
    return out


@dataclass(frozen=True)
class ScoreProfile:
    doc_id: str
    mode: str
    per_category: dict[str, float]
    match_counts: dict[str, int]
    token_count: int


def _profile(doc_id: str, n_tokens: int, per_cat: list[dict[LexiconEntry, int]],
             categories: Sequence[str], mode: str) -> ScoreProfile:
    scores, mcounts = {}, {}
    for cat, counts in zip(categories, per_cat):
        total = sum(counts.values())
        mcounts[cat] = total
        if mode == "proportional":
            scores[cat] = total / n_tokens if n_tokens else 0.0
        elif mode == "weighted":
            scores[cat] = sum(e.mean_rating * k for e, k in counts.items()) / total if total else 0.0
        else:
            raise ValueError(f"unknown scoring mode {mode!r}; expected one of {MODES}")
    return ScoreProfile(doc_id, mode, scores, mcounts, n_tokens)


def score_document(doc: Document, lex: Lexicon | Matcher, mode: str = "proportional") -> ScoreProfile:
    m = compile_lexicon(lex)
    return _profile(doc.id, len(doc.tokens), m.scan(_stems(doc)), m.categories, mode)


def score_proportional(doc: Document, lex: Lexicon | Matcher) -> ScoreProfile:
    """Category matches divided by the document's token count (0 for empty documents)."""
    return score_document(doc, lex, "proportional")


def score_weighted(doc: Document, lex: Lexicon | Matcher) -> ScoreProfile:
    """Mean rating over all match occurrences per category (0 without matches)."""
    return score_document(doc, lex, "weighted")


@dataclass
class ScoreTable:
    """Per-document category scores, one row per document in corpus order.

    ``values`` has shape ``(n_docs, n_columns)``. ``token_counts`` and
    ``match_counts`` are absent for score tables read from external tools.
    """

    doc_ids: list[str]
    columns: list[str]
    values: np.ndarray
    token_counts: np.ndarray | None = None
    match_counts: np.ndarray | None = None
    mode: str = "proportional"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.doc_ids), len(self.columns))
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValueError("duplicate doc_id in score table")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column in score table")

    def __len__(self) -> int:
        return len(self.doc_ids)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def take(self, rows) -> "ScoreTable":
        rows = np.asarray(rows, dtype=int)
        return ScoreTable(
            [self.doc_ids[i] for i in rows], list(self.columns), self.values[rows],
            None if self.token_counts is None else self.token_counts[rows],
            None if self.match_counts is None else self.match_counts[rows],
            self.mode,
        )

    def select(self, columns: Sequence[str]) -> "ScoreTable":
        missing = [c for c in columns if c not in self.columns]
        if missing:
            raise KeyError(f"columns not in table: {missing}")
        idx = [self.columns.index(c) for c in columns]
        return ScoreTable(list(self.doc_ids), list(columns), self.values[:, idx],
                          self.token_counts,
                          None if self.match_counts is None else self.match_counts[:, idx],
                          self.mode)

    def align(self, doc_ids: Sequence[str]) -> "ScoreTable":
        """Reorder rows to ``doc_ids``; the id sets must be identical."""
        if set(doc_ids) != set(self.doc_ids) or len(doc_ids) != len(self.doc_ids):
            raise ValueError("score tables do not share the same document ids")
        pos = {d: i for i, d in enumerate(self.doc_ids)}
        return self.take([pos[d] for d in doc_ids])

    def profiles(self) -> list[ScoreProfile]:
        out = []
        for i, doc_id in enumerate(self.doc_ids):
            out.append(ScoreProfile(
                doc_id, self.mode,
                dict(zip(self.columns, self.values[i].tolist())),
                {} if self.match_counts is None else dict(zip(self.columns, self.match_counts[i].tolist())),
                -1 if self.token_counts is None else int(self.token_counts[i]),
            ))
        return out

    @classmethod
    def from_profiles(cls, profiles: Sequence[ScoreProfile], columns: Sequence[str], mode: str) -> "ScoreTable":
        columns = list(columns)
        values = np.array([[p.per_category[c] for c in columns] for p in profiles], dtype=float)
        counts = np.array([[p.match_counts[c] for c in columns] for p in profiles], dtype=np.int64)
        return cls([p.doc_id for p in profiles], columns,
                   values.reshape(len(profiles), len(columns)),
                   np.array([p.token_count for p in profiles], dtype=np.int64),
                   counts.reshape(len(profiles), len(columns)), mode)


def _score_batch(matcher: Matcher, docs: Sequence[Document], mode: str) -> list[ScoreProfile]:
    return [_profile(d.id, len(d.tokens), matcher.scan(_stems(d)), matcher.categories, mode) for d in docs]


def score_corpus(corpus: Corpus | Iterable[Document], lex: Lexicon | Matcher,
                 mode: str = "proportional", workers: int = 1) -> ScoreTable:
    """Score every document; rows follow corpus order whatever ``workers`` is."""
    if mode not in MODES:
        raise ValueError(f"unknown scoring mode {mode!r}; expected one of {MODES}")
    m = compile_lexicon(lex)
    docs = list(corpus)
    if workers > 1 and len(docs) > 1:
        size = -(-len(docs) // (workers * 4))
        batches = [docs[i:i + size] for i in range(0, len(docs), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_score_batch, [m] * len(batches), batches, [mode] * len(batches))
            profiles = [p for batch in results for p in batch]
    else:
        profiles = _score_batch(m, docs, mode)
    return ScoreTable.from_profiles(profiles, m.categories, mode)


@dataclass
class WordOccurrenceMatrix:
    """Per-document proportional occurrence of each key of one category."""

    category: str
    doc_ids: list[str]
    keys: list[str]
    values: np.ndarray


def word_occurrence_matrix(corpus: Corpus | Iterable[Document], lex: Lexicon, category: str) -> WordOccurrenceMatrix:
    if category not in lex.categories:
        raise ValueError(f"unknown category {category!r}")
    m = compile_lexicon(lex)
    ci = m.categories.index(category)
    entries = lex.in_category(category)
    col = {e: j for j, e in enumerate(entries)}
    docs = list(corpus)
    values = np.zeros((len(docs), len(entries)))
    for i, d in enumerate(docs):
        n = len(d.tokens)
        if not n:
            continue
        for entry, k in m.scan(_stems(d))[ci].items():
            values[i, col[entry]] = k / n
    return WordOccurrenceMatrix(category, [d.id for d in docs], [e.key for e in entries], values)


def dumps_score_table(table: ScoreTable, counts: bool = False, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    has_tokens = table.token_counts is not None
    w.writerow(["doc_id"] + (["token_count"] if has_tokens else []) + list(table.columns))
    data = table.match_counts if counts else table.values
    if counts and data is None:
        raise ValueError("score table carries no match counts")
    for i, doc_id in enumerate(table.doc_ids):
        row = [doc_id] + ([int(table.token_counts[i])] if has_tokens else [])
        row += [str(int(v)) for v in data[i]] if counts else [f"{v:.6f}" for v in data[i]]
        w.writerow(row)
    return buf.getvalue()


def write_score_table(table: ScoreTable, path: str | os.PathLike, counts_path: str | os.PathLike | None = None,
                      comment: str | None = None) -> None:
    """Write the score CSV and, optionally, the companion match-count CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_score_table(table, comment=comment))
    if counts_path is not None:
        with open(counts_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(dumps_score_table(table, counts=True, comment=comment))


def read_score_table(path: str | os.PathLike, mode: str = "proportional") -> ScoreTable:
    """Read a score CSV (``doc_id[,token_count],<feature>...``); ``#`` lines are skipped."""
    with open(path, encoding="utf-8", newline="") as fh:
        numbered = [(i, line) for i, line in enumerate(fh, start=1) if line.strip() and not line.startswith("#")]
    rows = [(i, r) for (i, _), r in zip(numbered, csv.reader(line for _, line in numbered))]
    if not rows or rows[0][1][0] != "doc_id":
        raise ValueError(f"{path}: expected a header starting with 'doc_id'")
    header = rows[0][1]
    has_tokens = len(header) > 1 and header[1] == "token_count"
    first = 2 if has_tokens else 1
    columns = header[first:]
    ids, vals, toks = [], [], []
    for lineno, r in rows[1:]:
        if len(r) != len(header):
            raise ValueError(f"{path}:{lineno}: {len(r)} fields, expected {len(header)}")
        ids.append(r[0])
        try:
            if has_tokens:
                toks.append(int(r[1]))
            vals.append([float(v) for v in r[first:]])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    values = np.array(vals, dtype=float).reshape(len(ids), len(columns))
    return ScoreTable(ids, columns, values, np.array(toks, dtype=np.int64) if has_tokens else None, None, mode)
