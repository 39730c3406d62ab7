"""Rebuilding a rated lexicon from seed words, expansions and crowdsourced ratings.

Pipeline: seed words per category -> synonym expansion -> embedding
nearest-neighbour expansion -> per-category de-duplication -> ratings
(attention-check filter, "unknown word" filter, stemming, pooling) ->
weighted lexicon, from which thresholded versions are derived.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .lexicon import Lexicon, LexiconEntry, filter_by_threshold
from .textprep import stem_phrase

log = logging.getLogger(__name__)

DEFAULT_NEIGHBOURS = 10
UNKNOWN_DROP_SHARE = 0.5
RATING_DECIMALS = 6


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class SeedList:
    category: str
    words: tuple[str, ...]

    def __post_init__(self) -> None:
        words = tuple(w.strip().lower() for w in self.words if w.strip())
        if not words:
            raise ValueError(f"seed list for {self.category!r} is empty")
        object.__setattr__(self, "words", words)


class Expansion(NamedTuple):
    words: list[str]
    skipped: int  # seeds the expander had nothing for


def expand_synonyms(seeds: SeedList | Sequence[str], provider: Mapping[str, Sequence[str]]) -> Expansion:
    """Seeds followed by every related word the provider lists for them, de-duplicated in order."""
    words = seeds.words if isinstance(seeds, SeedList) else [w.lower() for w in seeds]
    out = dict.fromkeys(words)
    skipped = 0
    for w in words:
        related = provider.get(w)
        if related is None:
            skipped += 1
            continue
        for r in related:
            r = r.strip().lower()
            if r:
                out.setdefault(r)
    return Expansion(list(out), skipped)


class EmbeddingTable:
    """Word vectors, held as a matrix of unit-normalised rows for cosine queries."""

    def __init__(self, words: Sequence[str], vectors: np.ndarray) -> None:
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise ValueError("need one vector per word")
        if len(set(words)) != len(words):
            raise ValueError("duplicate word in embedding table")
        norms = np.linalg.norm(vectors, axis=1)
        if (norms == 0).any():
            bad = words[int(np.flatnonzero(norms == 0)[0])]
            raise ValueError(f"zero-norm vector for {bad!r}")
        self.words = list(words)
        self.dimension = vectors.shape[1]
        self.vectors = vectors
        self._unit = vectors / norms[:, None]
        self._index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def neighbours(self, word: str, k: int = DEFAULT_NEIGHBOURS) -> list[tuple[str, float]]:
        """The ``k`` most cosine-similar other words; equal similarities ordered by word."""
        i = self._index[word]
        sims = self._unit @ self._unit[i]
        sims[i] = -np.inf
        k = min(k, len(self.words) - 1)
        if k <= 0:
            return []
        # every word tied with the k-th best similarity competes on the tie-break
        kth = np.partition(sims, -k)[-k]
        cands = np.flatnonzero(sims >= kth)
        order = sorted(cands.tolist(), key=lambda j: (-sims[j], self.words[j]))
        return [(self.words[j], float(sims[j])) for j in order[:k]]


def load_embeddings(path: str | os.PathLike) -> EmbeddingTable:
    """Read the plain-text vector layout: a word followed by its components per line."""
    words, rows = [], []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected a word and at least one component")
            try:
                vec = [float(x) for x in parts[1:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric vector component") from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} components, got {len(vec)}")
            words.append(parts[0])
            rows.append(vec)
    if not words:
        raise ValueError(f"{path}: no vectors")
    return EmbeddingTable(words, np.array(rows))


def expand_embeddings(seeds: SeedList | Sequence[str], table: EmbeddingTable, k: int = DEFAULT_NEIGHBOURS) -> Expansion:
    """The ``k`` nearest vocabulary words of each in-vocabulary seed (seeds themselves excluded).

    Out-of-vocabulary seeds add nothing and are counted in ``skipped``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(table) == 0:
        raise ValueError("empty embedding vocabulary")
    words = seeds.words if isinstance(seeds, SeedList) else [w.lower() for w in seeds]
    out: list[str] = []
    skipped = 0
    for w in words:
        if w not in table:
            skipped += 1
            continue
        out.extend(n for n, _ in table.neighbours(w, k))
    if skipped:
        log.warning("%d seed(s) not in the embedding vocabulary", skipped)
    return Expansion(out, skipped)


def merge_candidates(per_category: Mapping[str, Iterable[Sequence[str]]]) -> dict[str, list[str]]:
    """Union of each category's word lists, de-duplicated within (not across) categories."""
    return {cat: list(dict.fromkeys(w.lower() for lst in lists for w in lst))
            for cat, lists in per_category.items()}


@dataclass(frozen=True)
class RatingRecord:
    participant_id: str
    word: str
    category: str
    rating: int | None       # None when the participant marked the word unknown
    attention_pass: bool = True

    def __post_init__(self) -> None:
        if self.rating is not None and (isinstance(self.rating, bool) or self.rating not in range(11)):
            raise ValueError(f"rating must be an integer 0-10 or None, got {self.rating!r}")

    @property
    def unknown(self) -> bool:
        return self.rating is None


@dataclass
class Ingestion:
    lexicon: Lexicon
    participants_total: int
    participants_dropped: int
    records_dropped_attention: int
    words_dropped_unknown: list[tuple[str, str]]
    words_dropped_empty: list[tuple[str, str]]
    words_rated: int


def ingest_ratings(records: Iterable[RatingRecord], categories: Sequence[str] | None = None,
                   candidates: Mapping[str, Iterable[str]] | None = None) -> Ingestion:
    """Turn raw ratings into the weighted (unthresholded) lexicon.

    1. Drop every record of a participant who failed any attention check.
    2. Drop a (word, category) when "unknown" makes up half or more of its
       remaining records.
    3. Stem words (phrases token by token) and pool the numeric ratings of
       all words sharing a stem within a category.
    4. Mean rating is the flat mean of the pooled ratings, rounded to six
       decimals so the TSV round trip is exact.
    """
    records = list(records)
    if candidates is not None:
        known = {(w.lower(), c) for c, ws in candidates.items() for w in ws}
        stray = [r for r in records if (r.word.lower(), r.category) not in known]
        if stray:
            raise BuildError(f"{len(stray)} rating(s) for unknown candidates, e.g. {stray[0].word!r}/{stray[0].category}")

    participants = {r.participant_id for r in records}
    failed = {r.participant_id for r in records if not r.attention_pass}
    kept = [r for r in records if r.participant_id not in failed]

    by_word: dict[tuple[str, str], list[RatingRecord]] = defaultdict(list)
    for r in records:
        by_word.setdefault((r.word.lower(), r.category), [])
    for r in kept:
        by_word[(r.word.lower(), r.category)].append(r)

    dropped_unknown, dropped_empty = [], []
    pooled: dict[tuple[str, str], list[int]] = defaultdict(list)
    for (word, cat), recs in sorted(by_word.items()):
        if not recs:
            dropped_empty.append((word, cat))
            continue
        n_unknown = sum(r.unknown for r in recs)
        if n_unknown >= UNKNOWN_DROP_SHARE * len(recs):
            dropped_unknown.append((word, cat))
            continue
        key = stem_phrase(word)
        if not key:
            dropped_empty.append((word, cat))
            continue
        pooled[(key, cat)].extend(r.rating for r in recs if not r.unknown)

    entries = [LexiconEntry(cat, key, round(sum(v) / len(v), RATING_DECIMALS), len(v))
               for (key, cat), v in pooled.items()]
    if not entries:
        raise BuildError("no rated candidates survived filtering")
    seen_cats = sorted({cat for _, cat in by_word})
    categories = list(categories or []) + [c for c in seen_cats if c not in (categories or [])]
    lex = Lexicon.from_entries(entries, categories, version_tag="weighted")
    return Ingestion(lex, len(participants), len(failed), len(records) - len(kept),
                     dropped_unknown, dropped_empty, len(by_word))


@dataclass
class BuildResult:
    weighted: Lexicon
    versions: dict[float, Lexicon]
    stages: dict[str, int]
    per_category: dict[str, dict[str, int]]
    ingestion: Ingestion
    candidates: dict[str, list[str]] = field(repr=False, default_factory=dict)


def build_lexicon(seeds: Sequence[SeedList], records: Iterable[RatingRecord],
                  synonyms: Mapping[str, Sequence[str]] | None = None,
                  embeddings: EmbeddingTable | None = None, k: int = DEFAULT_NEIGHBOURS,
                  thresholds: Sequence[float] = (7.0, 5.0), check_candidates: bool = False) -> BuildResult:
    """Run the whole pipeline and tally counts at every stage."""
    synonyms = synonyms or {}
    per_cat_lists: dict[str, list[list[str]]] = defaultdict(list)
    per_category: dict[str, dict[str, int]] = {}
    syn_skipped = emb_skipped = 0
    categories = list(dict.fromkeys(s.category for s in seeds))
    for s in seeds:
        syn = expand_synonyms(s, synonyms)
        emb = expand_embeddings(s, embeddings, k) if embeddings is not None else Expansion([], 0)
        syn_skipped += syn.skipped
        emb_skipped += emb.skipped
        per_cat_lists[s.category] += [syn.words, emb.words]
        tally = per_category.setdefault(s.category, dict.fromkeys(
            ("seeds", "post_synonym", "post_embedding", "post_dedup"), 0))
        tally["seeds"] += len(s.words)
        tally["post_synonym"] += len(syn.words)
        tally["post_embedding"] += len(syn.words) + len(emb.words)
    candidates = merge_candidates(per_cat_lists)
    for cat, words in candidates.items():
        per_category[cat]["post_dedup"] = len(words)

    ing = ingest_ratings(records, categories, candidates if check_candidates else None)
    versions = {theta: filter_by_threshold(ing.lexicon, theta) for theta in thresholds}
    for cat in categories:
        per_category[cat]["final_entries"] = ing.lexicon.counts().get(cat, 0)
    stages = {
        "seeds": sum(t["seeds"] for t in per_category.values()),
        "post_synonym": sum(t["post_synonym"] for t in per_category.values()),
        "post_embedding": sum(t["post_embedding"] for t in per_category.values()),
        "post_dedup": sum(len(w) for w in candidates.values()),
        "synonym_seeds_missing": syn_skipped,
        "embedding_seeds_oov": emb_skipped,
        "participants": ing.participants_total,
        "participants_dropped": ing.participants_dropped,
        "ratings_dropped_attention": ing.records_dropped_attention,
        "words_rated": ing.words_rated,
        "words_dropped_unknown": len(ing.words_dropped_unknown),
        "words_dropped_no_ratings": len(ing.words_dropped_empty),
        "final_entries": len(ing.lexicon),
        "final_stems": ing.lexicon.n_stems(),
    }
    for theta, lex in versions.items():
        stages[f"entries_threshold_{theta:g}"] = len(lex)
    return BuildResult(ing.lexicon, versions, stages, per_category, ing, candidates)


def build_report(result: BuildResult, config: Mapping | None = None) -> dict:
    """Machine-readable provenance: stage counts overall and per category."""
    report = {
        "stages": dict(result.stages),
        "per_category": {c: dict(v) for c, v in result.per_category.items()},
        "dropped_unknown": [list(p) for p in result.ingestion.words_dropped_unknown],
        "dropped_no_ratings": [list(p) for p in result.ingestion.words_dropped_empty],
    }
    if config is not None:
        report["config"] = dict(config)
    return report


def write_build_report(report: Mapping, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_seeds(path: str | os.PathLike) -> list[SeedList]:
    """``category<TAB>word`` per line; categories keep first-appearance order."""
    words: dict[str, list[str]] = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].strip():
                raise ValueError(f"{path}:{lineno}: expected category<TAB>word")
            if not words and parts == ["category", "word"]:
                continue
            words[parts[0].strip()].append(parts[1])
    return [SeedList(c, tuple(ws)) for c, ws in words.items()]


def load_synonyms(path: str | os.PathLike) -> dict[str, list[str]]:
    """``word<TAB>related1,related2,...`` per line."""
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected word<TAB>related,...")
            word = parts[0].strip().lower()
            out.setdefault(word, []).extend(r.strip() for r in parts[1].split(",") if r.strip())
    return out


_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f", ""}


def _flag(value: str, path, lineno, name) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError(f"{path}:{lineno}: bad boolean {value!r} in column {name}")


def load_ratings(path: str | os.PathLike) -> list[RatingRecord]:
    """``participant_id,word,category,rating,unknown,attention_pass``; rating blank when unknown."""
    expected = ["participant_id", "word", "category", "rating", "unknown", "attention_pass"]
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            pid, word, cat, rating, unknown, attn = row
            is_unknown = _flag(unknown, path, lineno, "unknown")
            if is_unknown:
                if rating.strip():
                    raise ValueError(f"{path}:{lineno}: rating must be blank when unknown is true")
                value = None
            else:
                try:
                    value = int(rating)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: rating {rating!r} is not an integer 0-10") from None
            try:
                out.append(RatingRecord(pid, word, cat, value, _flag(attn, path, lineno, "attention_pass")))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out
