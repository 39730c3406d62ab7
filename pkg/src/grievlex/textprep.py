"""Tokenizing, stemming, chunking and loading of text corpora."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from nltk.stem.porter import PorterStemmer

DEFAULT_CHUNK_SIZE = 100

# Word characters joined by internal hyphens or apostrophes: "ak-47", "it's".
_TOKEN_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'",
                              "‐": "-", "‑": "-"})

# The original 1980 rule set; NLTK's default mode adds irregular-form
# exceptions that have changed between releases.
_PORTER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


class CorpusError(ValueError):
    pass


def tokenize(raw: str) -> list[str]:
    """Lowercase word tokens; punctuation and whitespace separate tokens.

    Internal hyphens and apostrophes stay inside a token and digits are
    ordinary token characters, so ``"AK-47, ammo!"`` gives
    ``["ak-47", "ammo"]``.
    """
    return _TOKEN_RE.findall(raw.translate(_APOSTROPHES).lower())


@lru_cache(maxsize=1 << 18)
def stem(token: str) -> str:
    """Porter stem of a single lowercase token (never empty for a non-empty token)."""
    out = _PORTER.stem(token)
    return out or token


def stem_phrase(text: str) -> str:
    """Tokenize ``text`` and stem each token; the lexicon key for a word or phrase."""
    return " ".join(stem(t) for t in tokenize(text))


@dataclass(frozen=True)
class Document:
    id: str
    raw: str
    tokens: tuple[str, ...] = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.tokens is None:
            object.__setattr__(self, "tokens", tuple(tokenize(self.raw)))
        else:
            object.__setattr__(self, "tokens", tuple(self.tokens))

    @classmethod
    def from_tokens(cls, id: str, tokens: Sequence[str], label: str | None = None) -> "Document":
        return cls(id, " ".join(tokens), tuple(tokens), label)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Corpus:
    docs: tuple[Document, ...]
    name: str = "corpus"
    _ids: frozenset = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        docs = tuple(self.docs)
        object.__setattr__(self, "docs", docs)
        ids = [d.id for d in docs]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CorpusError(f"duplicate document id {dup!r} in corpus {self.name!r}")
        object.__setattr__(self, "_ids", frozenset(ids))

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.docs)

    def __getitem__(self, i):
        return self.docs[i]

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.docs]

    def n_tokens(self) -> int:
        return sum(len(d) for d in self.docs)


def chunk(doc: Document, size: int = DEFAULT_CHUNK_SIZE) -> list[Document]:
    """Split ``doc`` into consecutive windows of exactly ``size`` tokens.

    The trailing remainder shorter than ``size`` is dropped.
    """
    if size < 1:
        raise ValueError(f"chunk size must be >= 1, got {size}")
    toks = doc.tokens
    return [
        Document.from_tokens(f"{doc.id}#{i}", toks[i * size:(i + 1) * size], doc.label)
        for i in range(len(toks) // size)
    ]


def chunk_corpus(corpus: Corpus, size: int = DEFAULT_CHUNK_SIZE) -> Corpus:
    return Corpus(tuple(c for d in corpus for c in chunk(d, size)), corpus.name)


def _read_jsonl(path: Path) -> Iterator[Document]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            for key in ("id", "text"):
                if key not in row:
                    raise CorpusError(f"{path}:{lineno}: missing field {key!r}")
            if not isinstance(row["text"], str):
                raise CorpusError(f"{path}:{lineno}: field 'text' must be a string")
            label = row.get("label")
            yield Document(str(row["id"]), row["text"], label=None if label is None else str(label))


def _read_txt_dir(path: Path) -> Iterator[Document]:
    for f in sorted(path.glob("*.txt")):
        yield Document(f.stem, f.read_text(encoding="utf-8"))


def load_corpus(path: str | os.PathLike, format: str | None = None, name: str | None = None) -> Corpus:
    """Load a JSONL file (``id``, ``text``, optional ``label``) or a directory of ``*.txt`` files.

    ``format`` is inferred from the path when omitted. Text-directory
    documents are read in filename order and take the file stem as id.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus not found: {path}")
    if format is None:
        format = "txt-dir" if path.is_dir() else "jsonl"
    if format == "jsonl":
        docs = _read_jsonl(path)
    elif format == "txt-dir":
        if not path.is_dir():
            raise CorpusError(f"{path} is not a directory")
        docs = _read_txt_dir(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    return Corpus(tuple(docs), name or path.stem)


def write_corpus_jsonl(corpus: Iterable[Document], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in corpus:
            row = {"id": d.id, "text": " ".join(d.tokens)}
            if d.label is not None:
                row["label"] = d.label
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
