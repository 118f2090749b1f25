"""
corpus.py
Corpus ingestion and text normalization.

This module provides functions to:
- Read a dated, sourced JSONL corpus into Documents
- Normalize text into casefolded token sequences (numerals and stopwords removed)
- Build a lexicographically ordered corpus vocabulary
- Load stopword lists and lemma maps used as normalization hooks
"""

import re
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from nidwatch.errors import CorpusError, VocabularyError
from nidwatch.io_utils import PathLike, write_jsonl

logger = logging.getLogger(__name__)

# Word characters, optionally joined by inner ".,:-" ("1.000", "covid-19").
TOKEN_PATTERN = re.compile(r"\w+(?:[.,:\-]\w+)*")
NUMERAL_STRIP = str.maketrans("", "", ".,:-")

REQUIRED_FIELDS = ("id", "date", "source", "text")


@dataclass(frozen=True)
class Document:
    """
    One dated, sourced text unit (title and body concatenated).

    Attributes:
        id: Unique identifier within a corpus
        date: Publication day
        source: Source label, e.g. a newspaper name
        text: Raw text
    """
    id: str
    date: date
    source: str
    text: str

    def sort_key(self) -> Tuple[date, str]:
        return (self.date, self.id)

    def to_dict(self) -> Dict[str, str]:
        return {
            "id": self.id,
            "date": self.date.isoformat(),
            "source": self.source,
            "text": self.text,
        }


@dataclass(frozen=True)
class TokenizedDoc:
    id: str
    date: date
    source: str
    tokens: Tuple[str, ...]

    def sort_key(self) -> Tuple[date, str]:
        return (self.date, self.id)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered distinct terms with a term -> position index."""
    terms: Tuple[str, ...]
    index: Dict[str, int] = field(compare=False, repr=False)

    @classmethod
    def from_terms(cls, terms: Iterable[str]) -> "Vocabulary":
        ordered = tuple(sorted(set(terms)))
        return cls(terms=ordered, index={t: i for i, t in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def to_lines(self) -> str:
        return "".join(term + "\n" for term in self.terms)

    @classmethod
    def from_file(cls, path: PathLike) -> "Vocabulary":
        terms = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
        vocab = cls.from_terms(t for t in terms if t)
        if len(vocab) == 0:
            raise VocabularyError("empty vocabulary")
        return vocab


@dataclass(frozen=True)
class NormalizeOpts:
    """
    Normalization options.

    Args:
        lemmatizer: Optional token -> lemma hook applied after filtering
        min_token_length: Tokens shorter than this are dropped
    """
    lemmatizer: Optional[Callable[[str], str]] = None
    min_token_length: int = 1


def parse_date(value: str) -> date:
    return date.fromisoformat(value)


def _parse_record(record: dict, line_no: int) -> Document:
    missing = [name for name in REQUIRED_FIELDS if name not in record]
    if missing:
        raise CorpusError(f"line {line_no}: missing field(s) {', '.join(missing)}")

    doc_id = str(record["id"])
    try:
        day = parse_date(str(record["date"]))
    except ValueError:
        raise CorpusError(
            f"line {line_no}: record '{doc_id}' has unparseable date {record['date']!r}"
        )

    text = str(record["text"])
    if not text.strip():
        raise CorpusError(f"line {line_no}: record '{doc_id}' has empty text")

    return Document(id=doc_id, date=day, source=str(record["source"]), text=text)


def ingest(path: PathLike, format: str = "jsonl") -> List[Document]:
    """
    Read a JSONL corpus.

    Args:
        path: Corpus file, one {"id", "date", "source", "text"} object per line
        format: Input format; only "jsonl" is supported

    Returns:
        Documents sorted by (date, id)

    Raises:
        CorpusError: malformed line, duplicate id or unparseable date
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format: {format}")

    source_path = Path(path)
    if not source_path.exists():
        raise FileNotFoundError(f"corpus not found: {source_path}")

    docs: List[Document] = []
    seen: Dict[str, int] = {}
    with open(source_path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {line_no}: malformed JSON ({e.msg})")
            if not isinstance(record, dict):
                raise CorpusError(f"line {line_no}: expected a JSON object")

            doc = _parse_record(record, line_no)
            if doc.id in seen:
                raise CorpusError(
                    f"duplicate id '{doc.id}' on lines {seen[doc.id]} and {line_no}"
                )
            seen[doc.id] = line_no
            docs.append(doc)

    docs.sort(key=Document.sort_key)
    logger.info("Ingested %d documents from %s", len(docs), source_path)
    return docs


def emit(docs: Iterable[Document], path: PathLike) -> Path:
    """Write documents in the JSONL corpus format."""
    return write_jsonl(path, (doc.to_dict() for doc in docs))


def sources(docs: Iterable) -> List[str]:
    return sorted({doc.source for doc in docs})


def tokenize(text: str) -> List[str]:
    return TOKEN_PATTERN.findall(text)


def is_numeral(token: str) -> bool:
    stripped = token.translate(NUMERAL_STRIP)
    return bool(stripped) and all(ch in "0123456789" for ch in stripped)


def _keep(token: str, stopwords: Set[str], opts: NormalizeOpts) -> bool:
    return not is_numeral(token) and token not in stopwords and len(token) >= opts.min_token_length


def normalize(doc: Document, stopwords: Set[str], opts: Optional[NormalizeOpts] = None) -> TokenizedDoc:
    """
    Casefold, drop numerals and stopwords, then apply the optional lemmatizer.

    Lemmas are casefolded and filtered again, so a lemma that is itself a
    stopword or numeral is dropped.

    Args:
        doc: Document to normalize
        stopwords: Casefolded stopword set
        opts: Normalization options

    Returns:
        TokenizedDoc with tokens in original order (may be empty)
    """
    opts = opts or NormalizeOpts()
    tokens = []
    for raw in tokenize(doc.text):
        token = raw.casefold()
        if not _keep(token, stopwords, opts):
            continue
        if opts.lemmatizer is not None:
            token = opts.lemmatizer(token).casefold()
            if not _keep(token, stopwords, opts):
                continue
        tokens.append(token)
    return TokenizedDoc(id=doc.id, date=doc.date, source=doc.source, tokens=tuple(tokens))


def normalize_all(docs: Iterable[Document], stopwords: Set[str], opts: Optional[NormalizeOpts] = None) -> List[TokenizedDoc]:
    return [normalize(doc, stopwords, opts) for doc in docs]


def build_vocabulary(docs: Iterable[TokenizedDoc], min_count: int = 1) -> Vocabulary:
    """
    Collect the terms whose corpus frequency is at least ``min_count``.

    Raises:
        ValueError: min_count < 1
        VocabularyError: no term survives
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")

    counts: Counter = Counter()
    for doc in docs:
        counts.update(doc.tokens)

    vocab = Vocabulary.from_terms(term for term, n in counts.items() if n >= min_count)
    if len(vocab) == 0:
        raise VocabularyError("empty vocabulary")

    logger.info("Vocabulary built: %d terms (min_count=%d, %d distinct)", len(vocab), min_count, len(counts))
    return vocab


def load_stopwords(path: PathLike) -> Set[str]:
    """One token per line; blank lines and '#' comments are skipped."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        entry = line.strip()
        if entry and not entry.startswith("#"):
            words.add(entry.casefold())
    return words


def load_lemma_map(path: PathLike) -> Dict[str, str]:
    """Read a ``surface<TAB>lemma`` TSV file."""
    lemmas: Dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise CorpusError(f"lemma map line {line_no}: expected 'surface<TAB>lemma'")
        lemmas[parts[0].strip().casefold()] = parts[1].strip().casefold()
    return lemmas


def lemmatizer_from_map(lemmas: Dict[str, str]) -> Callable[[str], str]:
    def lemmatize(token: str) -> str:
        return lemmas.get(token, token)

    return lemmatize
