"""Corpus ingestion: tokenization, collection statistics, and co-occurrence counts.

Documents are tokenized into lowercase letter runs. Two statistics tables are
built from the token stream: an inverted index with document lengths and
collection frequencies, and a sliding-window co-occurrence table used by the
association models and the context filter. Both tables can be written to a
snapshot directory and reloaded without loss.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Iterator

FORMAT_VERSION = 1

# A token is a maximal run of Unicode letters; digits, underscores and
# punctuation all act as separators.
_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)

UNKNOWN_TAG = "UNK"


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class StopwordList:
    """Exact-match stopword filter applied to normalized tokens."""

    words: frozenset[str] = frozenset()

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)


def load_stopwords(path: str | Path) -> StopwordList:
    """Read one stopword per line, normalizing case like the tokenizer does."""
    words = set()
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            word = line.strip().lower()
            if word:
                words.add(word)
    return StopwordList(frozenset(words))


def tokenize(text: str, stopwords: StopwordList | None = None) -> list[str]:
    """Split text into lowercase letter-run tokens, dropping stopwords.

    Token order is preserved; no stemming or other conflation is applied here.
    """
    tokens = _TOKEN_RE.findall(text.lower())
    if stopwords is not None and len(stopwords):
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


class CollectionIndex:
    """Inverted index with document lengths and collection term frequencies."""

    def __init__(self) -> None:
        self.postings: dict[str, dict[str, int]] = {}
        self.doc_len: dict[str, int] = {}
        self.collection_freq: Counter[str] = Counter()
        self.total_tokens: int = 0

    @property
    def vocabulary(self) -> set[str]:
        return set(self.postings)

    @property
    def num_docs(self) -> int:
        return len(self.doc_len)

    def tf(self, term: str, doc_id: str) -> int:
        return self.postings.get(term, {}).get(doc_id, 0)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, {}))

    def cf(self, term: str) -> int:
        return self.collection_freq.get(term, 0)

    def p_collection(self, term: str) -> float:
        """Maximum-likelihood collection language model p(t|C)."""
        if self.total_tokens == 0:
            return 0.0
        return self.collection_freq.get(term, 0) / self.total_tokens

    def add_document(self, doc_id: str, tokens: list[str]) -> None:
        if doc_id in self.doc_len:
            raise ValueError(f"duplicate document identifier: {doc_id!r}")
        self.doc_len[doc_id] = len(tokens)
        self.total_tokens += len(tokens)
        for term, count in Counter(tokens).items():
            self.postings.setdefault(term, {})[doc_id] = count
            self.collection_freq[term] += count


def build_index(
    docs: Iterable[Document], stopwords: StopwordList | None = None
) -> CollectionIndex:
    """Tokenize documents and accumulate index statistics.

    Duplicate document identifiers raise ValueError naming the identifier.
    """
    index = CollectionIndex()
    for doc in docs:
        index.add_document(doc.doc_id, tokenize(doc.text, stopwords))
    return index


class CooccurrenceTable:
    """Window-level co-occurrence counts over the tokenized collection.

    Windows of ``window_size`` tokens advance one token at a time within each
    document and never cross document boundaries; a document shorter than the
    window contributes a single truncated window. Each window counts every
    distinct unordered term pair at most once, and self pairs are excluded.
    """

    def __init__(self, window_size: int) -> None:
        if window_size < 1:
            raise ValueError(f"window_size must be >= 1, got {window_size}")
        self.window_size = window_size
        self._pairs: Counter[tuple[str, str]] = Counter()
        self.unigram_window_count: Counter[str] = Counter()
        self.total_windows: int = 0

    def pair_count(self, a: str, b: str) -> int:
        if a == b:
            return 0
        key = (a, b) if a <= b else (b, a)
        return self._pairs.get(key, 0)

    def add_document(self, tokens: list[str]) -> None:
        n = len(tokens)
        if n == 0:
            return
        w = self.window_size
        starts = range(n - w + 1) if n > w else range(1)
        for start in starts:
            window = set(tokens[start : start + w])
            self.total_windows += 1
            for term in window:
                self.unigram_window_count[term] += 1
            for a, b in combinations(window, 2):
                key = (a, b) if a <= b else (b, a)
                self._pairs[key] += 1

    def iter_pairs(self) -> Iterator[tuple[str, str, int]]:
        for (a, b), count in self._pairs.items():
            yield a, b, count


def build_cooccurrence(
    docs: Iterable[Document],
    window_size: int,
    stopwords: StopwordList | None = None,
) -> CooccurrenceTable:
    table = CooccurrenceTable(window_size)
    for doc in docs:
        table.add_document(tokenize(doc.text, stopwords))
    return table


@dataclass
class PosLexicon:
    """Term to part-of-speech mapping with an unknown-tag fallback."""

    tags: dict[str, str] = field(default_factory=dict)

    def tag_of(self, term: str) -> str:
        return self.tags.get(term, UNKNOWN_TAG)

    @property
    def tagset(self) -> set[str]:
        return set(self.tags.values()) | {UNKNOWN_TAG}


def load_pos_lexicon(path: str | Path) -> PosLexicon:
    """Read tab-separated ``term<TAB>tag`` lines; blank lines are skipped."""
    tags: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise ValueError(f"{path}: malformed lexicon line {lineno}: {line!r}")
            tags[fields[0]] = fields[1]
    return PosLexicon(tags)


def as_tagger(pos: PosLexicon | Callable[[str], str] | None) -> Callable[[str], str]:
    """Accept a lexicon, a plain callable, or None (everything unknown)."""
    if pos is None:
        return lambda term: UNKNOWN_TAG
    if isinstance(pos, PosLexicon):
        return pos.tag_of
    return pos


def read_documents(path: str | Path) -> list[Document]:
    """Read a document file in TREC-style SGML or ``id<TAB>text`` lines.

    The format is sniffed from the first non-blank line: files opening a
    ``<DOC>`` element are parsed as SGML with DOCNO and TEXT fields, anything
    else is treated as one tab-separated document per line.
    """
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("<DOC>"):
        return _read_sgml(text, str(path))
    return _read_tsv(text, str(path))


def _read_sgml(text: str, source: str) -> list[Document]:
    docs = []
    for block in re.findall(r"<DOC>(.*?)</DOC>", text, flags=re.DOTALL):
        docno = re.search(r"<DOCNO>(.*?)</DOCNO>", block, flags=re.DOTALL)
        if docno is None:
            raise ValueError(f"{source}: document block without DOCNO")
        body = "\n".join(re.findall(r"<TEXT>(.*?)</TEXT>", block, flags=re.DOTALL))
        docs.append(Document(docno.group(1).strip(), body.strip()))
    if not docs:
        raise ValueError(f"{source}: no <DOC> blocks found")
    return docs


def _read_tsv(text: str, source: str) -> list[Document]:
    docs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        doc_id, sep, body = line.partition("\t")
        if not sep or not doc_id:
            raise ValueError(f"{source}: malformed document line {lineno}")
        docs.append(Document(doc_id, body))
    if not docs:
        raise ValueError(f"{source}: no documents found")
    return docs


def save_index(index: CollectionIndex, directory: str | Path) -> None:
    """Write the index as sorted TSV files plus a JSON manifest.

    Writes are fully sorted so repeated runs over the same corpus produce
    byte-identical snapshots.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "collection_index",
        "num_docs": index.num_docs,
        "total_tokens": index.total_tokens,
        "vocabulary_size": len(index.postings),
        "tokenizer": {"lowercase": True, "token_pattern": _TOKEN_RE.pattern},
    }
    _write_json(directory / "index.json", manifest)
    with open(directory / "postings.tsv", "w", encoding="utf-8") as handle:
        for term in sorted(index.postings):
            for doc_id in sorted(index.postings[term]):
                handle.write(f"{term}\t{doc_id}\t{index.postings[term][doc_id]}\n")
    with open(directory / "doc_lens.tsv", "w", encoding="utf-8") as handle:
        for doc_id in sorted(index.doc_len):
            handle.write(f"{doc_id}\t{index.doc_len[doc_id]}\n")


def load_index(directory: str | Path) -> CollectionIndex:
    directory = Path(directory)
    manifest = _read_json(directory / "index.json", "collection_index")
    index = CollectionIndex()
    with open(directory / "doc_lens.tsv", encoding="utf-8") as handle:
        for line in handle:
            doc_id, length = line.rstrip("\n").split("\t")
            index.doc_len[doc_id] = int(length)
            index.total_tokens += int(length)
    with open(directory / "postings.tsv", encoding="utf-8") as handle:
        for line in handle:
            term, doc_id, count = line.rstrip("\n").split("\t")
            index.postings.setdefault(term, {})[doc_id] = int(count)
            index.collection_freq[term] += int(count)
    if index.num_docs != manifest["num_docs"]:
        raise ValueError(f"{directory}: document count mismatch against manifest")
    if index.total_tokens != manifest["total_tokens"]:
        raise ValueError(f"{directory}: token count mismatch against manifest")
    return index


def save_cooccurrence(table: CooccurrenceTable, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "cooccurrence",
        "window_size": table.window_size,
        "total_windows": table.total_windows,
    }
    _write_json(directory / "cooccurrence.json", manifest)
    with open(directory / "pair_windows.tsv", "w", encoding="utf-8") as handle:
        for a, b, count in sorted(table.iter_pairs()):
            handle.write(f"{a}\t{b}\t{count}\n")
    with open(directory / "unigram_windows.tsv", "w", encoding="utf-8") as handle:
        for term in sorted(table.unigram_window_count):
            handle.write(f"{term}\t{table.unigram_window_count[term]}\n")


def load_cooccurrence(directory: str | Path) -> CooccurrenceTable:
    directory = Path(directory)
    manifest = _read_json(directory / "cooccurrence.json", "cooccurrence")
    table = CooccurrenceTable(manifest["window_size"])
    table.total_windows = manifest["total_windows"]
    with open(directory / "pair_windows.tsv", encoding="utf-8") as handle:
        for line in handle:
            a, b, count = line.rstrip("\n").split("\t")
            table._pairs[(a, b)] = int(count)
    with open(directory / "unigram_windows.tsv", encoding="utf-8") as handle:
        for line in handle:
            term, count = line.rstrip("\n").split("\t")
            table.unigram_window_count[term] = int(count)
    return table


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _read_json(path: Path, expected_kind: str) -> dict:
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("kind") != expected_kind:
        raise ValueError(f"{path}: expected {expected_kind} snapshot")
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version")
    return payload
