"""
represent.py
Document representations on the probability simplex.

Turns tokenized documents into strictly positive distributions, either as
smoothed term frequencies or as topic mixtures from a collapsed-Gibbs LDA
model, and imports distributions produced by external topic models.
"""

import json
import zlib
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.feature_extraction.text import CountVectorizer

from nidwatch.corpus import TokenizedDoc, Vocabulary, parse_date
from nidwatch.errors import DimensionError, RepresentationError, VocabularyError
from nidwatch.io_utils import PathLike, write_jsonl

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9
IMPORT_TOL = 1e-6
IMPORT_FLOOR = 1e-12

DEFAULT_LDA_TOPICS = 20
DEFAULT_LDA_BETA = 0.01
DEFAULT_LDA_ITERATIONS = 500


@dataclass(eq=False)
class DocDistribution:
    """
    A document as a point on the K-simplex.

    Attributes:
        id: Document id (the ISO date for day-aggregated rows)
        date: Publication day
        source: Source label
        p: Strictly positive vector summing to 1
        prior_fallback: True when LDA inference had no in-vocabulary tokens
    """
    id: str
    date: date
    source: str
    p: np.ndarray
    prior_fallback: bool = False

    @property
    def K(self) -> int:
        return int(self.p.shape[0])

    def sort_key(self) -> Tuple[date, str]:
        return (self.date, self.id)

    def to_dict(self) -> Dict:
        row = {
            "id": self.id,
            "date": self.date.isoformat(),
            "source": self.source,
            "p": [float(x) for x in self.p],
        }
        if self.prior_fallback:
            row["prior_fallback"] = True
        return row


def is_valid_simplex(p: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
    return bool(np.all(p > 0) and abs(float(p.sum()) - 1.0) <= tol)


def count_matrix(docs: Sequence[TokenizedDoc], vocab: Vocabulary):
    """Sparse document-term counts over a fixed vocabulary (out-of-vocabulary tokens ignored)."""
    vectorizer = CountVectorizer(analyzer=lambda tokens: tokens, vocabulary=vocab.index)
    return vectorizer.fit_transform([list(doc.tokens) for doc in docs])


def default_smoothing(vocab: Vocabulary) -> float:
    return 0.5 / len(vocab)


def _smoothed(counts: np.ndarray, smoothing: float) -> np.ndarray:
    V = counts.shape[-1]
    total = counts.sum(axis=-1, keepdims=True)
    return (counts + smoothing) / (total + smoothing * V)


def tf_distribution(doc: TokenizedDoc, vocab: Vocabulary, smoothing: float) -> DocDistribution:
    """
    Smoothed term-frequency distribution.

    p[i] = (count_i + smoothing) / (total + smoothing * V)
    """
    return tf_distributions([doc], vocab, smoothing)[0]


def tf_distributions(docs: Sequence[TokenizedDoc], vocab: Vocabulary, smoothing: Optional[float] = None) -> List[DocDistribution]:
    if len(vocab) == 0:
        raise VocabularyError("empty vocabulary")
    if smoothing is None:
        smoothing = default_smoothing(vocab)
    if smoothing <= 0:
        raise RepresentationError("smoothing must be > 0")
    if not docs:
        return []

    counts = count_matrix(docs, vocab).toarray().astype(float)
    probs = _smoothed(counts, smoothing)
    return [
        DocDistribution(id=doc.id, date=doc.date, source=doc.source, p=probs[i])
        for i, doc in enumerate(docs)
    ]


# ===== LATENT DIRICHLET ALLOCATION =====

@dataclass(eq=False)
class LdaModel:
    """
    Collapsed-Gibbs LDA state.

    Attributes:
        K: Topic count
        alpha: Symmetric document-topic prior
        beta: Symmetric topic-term prior
        topic_term_counts: K x V assignment counts
        seed: RNG seed used for fitting
        iterations: Gibbs sweeps performed
        vocab: Vocabulary the columns refer to
        doc_topic_counts: D x K assignment counts of the training documents
        doc_ids: Training document ids, row order of doc_topic_counts
    """
    K: int
    alpha: float
    beta: float
    topic_term_counts: np.ndarray
    seed: int
    iterations: int
    vocab: Vocabulary
    doc_topic_counts: np.ndarray = field(repr=False)
    doc_ids: Tuple[str, ...] = field(default=(), repr=False)

    @property
    def V(self) -> int:
        return int(self.topic_term_counts.shape[1])

    def topic_term(self) -> np.ndarray:
        """Row-stochastic K x V topic-term matrix (counts + beta)."""
        smoothed = self.topic_term_counts + self.beta
        return smoothed / smoothed.sum(axis=1, keepdims=True)

    def doc_distributions(self) -> np.ndarray:
        smoothed = self.doc_topic_counts + self.alpha
        return smoothed / smoothed.sum(axis=1, keepdims=True)


def _word_ids(doc: TokenizedDoc, vocab: Vocabulary) -> np.ndarray:
    return np.array([vocab.index[t] for t in doc.tokens if t in vocab.index], dtype=np.int64)


def _draw(weights: np.ndarray, u: float) -> int:
    cumulative = np.cumsum(weights)
    k = int(np.searchsorted(cumulative, u * cumulative[-1], side="right"))
    return min(k, weights.shape[0] - 1)


def lda_fit(
    docs: Sequence[TokenizedDoc],
    vocab: Vocabulary,
    K: int = DEFAULT_LDA_TOPICS,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_LDA_BETA,
    iterations: int = DEFAULT_LDA_ITERATIONS,
    seed: int = 0,
) -> LdaModel:
    """
    Fit LDA by collapsed Gibbs sampling.

    Args:
        docs: Training documents
        vocab: Vocabulary (out-of-vocabulary tokens are skipped)
        K: Topic count, >= 2
        alpha: Document-topic prior (default 5 / K)
        beta: Topic-term prior
        iterations: Number of full sweeps, >= 1
        seed: RNG seed; equal inputs and seed give bit-identical models

    Returns:
        Fitted LdaModel
    """
    if K < 2:
        raise RepresentationError("LDA needs K >= 2 topics")
    if iterations < 1:
        raise RepresentationError("LDA needs at least one iteration")
    alpha = 5.0 / K if alpha is None else alpha
    if alpha <= 0 or beta <= 0:
        raise RepresentationError("LDA priors must be positive")

    doc_words = [_word_ids(doc, vocab) for doc in docs]
    empty = sum(1 for w in doc_words if w.size == 0)
    if empty == len(doc_words):
        raise RepresentationError("all documents are empty after vocabulary filtering")
    if empty:
        logger.warning("%d document(s) have no in-vocabulary tokens and are skipped by LDA", empty)

    words = np.concatenate(doc_words)
    doc_of = np.concatenate([np.full(w.size, d, dtype=np.int64) for d, w in enumerate(doc_words)])
    distinct = np.unique(words).size
    if K > distinct:
        raise RepresentationError(f"K={K} exceeds the {distinct} distinct tokens in the corpus")

    V = len(vocab)
    rng = np.random.default_rng(seed)
    z = rng.integers(K, size=words.size)

    ndk = np.zeros((len(doc_words), K), dtype=np.int64)
    nkw = np.zeros((K, V), dtype=np.int64)
    nk = np.zeros(K, dtype=np.int64)
    np.add.at(ndk, (doc_of, z), 1)
    np.add.at(nkw, (z, words), 1)
    np.add.at(nk, z, 1)

    v_beta = V * beta
    for sweep in range(iterations):
        uniforms = rng.random(words.size)
        for i in range(words.size):
            d, w, k = doc_of[i], words[i], z[i]
            ndk[d, k] -= 1
            nkw[k, w] -= 1
            nk[k] -= 1

            weights = (ndk[d] + alpha) * (nkw[:, w] + beta) / (nk + v_beta)
            k = _draw(weights, uniforms[i])

            z[i] = k
            ndk[d, k] += 1
            nkw[k, w] += 1
            nk[k] += 1
        if (sweep + 1) % 100 == 0:
            logger.debug("LDA sweep %d/%d", sweep + 1, iterations)

    logger.info("LDA fitted: K=%d, V=%d, tokens=%d, sweeps=%d", K, V, words.size, iterations)
    return LdaModel(
        K=K, alpha=alpha, beta=beta, topic_term_counts=nkw, seed=seed,
        iterations=iterations, vocab=vocab, doc_topic_counts=ndk,
        doc_ids=tuple(doc.id for doc in docs),
    )


def _doc_rng(seed: int, doc_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(doc_id.encode("utf-8"))])


def lda_infer(model: LdaModel, doc: TokenizedDoc, burn: int = 50, samples: int = 100, seed: int = 0) -> DocDistribution:
    """
    Fold a document into a fitted model with the topic-term matrix held fixed.

    The topic mixture is averaged over ``samples`` sweeps after ``burn`` sweeps.
    A document without in-vocabulary tokens gets the symmetric prior (1/K each)
    and ``prior_fallback=True``.
    """
    if samples < 1:
        raise RepresentationError("lda_infer needs samples >= 1")

    words = _word_ids(doc, model.vocab)
    if words.size == 0:
        logger.warning("Document %s has no in-vocabulary tokens; using the prior", doc.id)
        return DocDistribution(
            id=doc.id, date=doc.date, source=doc.source,
            p=np.full(model.K, 1.0 / model.K), prior_fallback=True,
        )

    phi = model.topic_term()
    rng = _doc_rng(seed, doc.id)
    z = rng.integers(model.K, size=words.size)
    ndk = np.bincount(z, minlength=model.K).astype(np.int64)

    theta = np.zeros(model.K)
    denom = words.size + model.K * model.alpha
    for sweep in range(burn + samples):
        uniforms = rng.random(words.size)
        for i in range(words.size):
            ndk[z[i]] -= 1
            k = _draw((ndk + model.alpha) * phi[:, words[i]], uniforms[i])
            z[i] = k
            ndk[k] += 1
        if sweep >= burn:
            theta += (ndk + model.alpha) / denom

    theta /= samples
    theta /= theta.sum()
    return DocDistribution(id=doc.id, date=doc.date, source=doc.source, p=theta)


def lda_infer_many(model: LdaModel, docs: Sequence[TokenizedDoc], burn: int = 50, samples: int = 100, seed: int = 0) -> List[DocDistribution]:
    return [lda_infer(model, doc, burn=burn, samples=samples, seed=seed) for doc in docs]


# ===== INTERCHANGE =====

def _validated(p: np.ndarray, row_label: str) -> np.ndarray:
    if not np.all(np.isfinite(p)):
        raise RepresentationError(f"{row_label}: non-finite probability")
    if np.any(p < 0):
        raise RepresentationError(f"{row_label}: negative probability component")
    total = float(p.sum())
    # 1e-12 slack absorbs float rounding of the 1e-6 boundary itself
    if abs(total - 1.0) > IMPORT_TOL + 1e-12:
        raise RepresentationError(f"{row_label}: components sum to {total!r}, outside 1 +/- {IMPORT_TOL}")
    floored = np.maximum(p, IMPORT_FLOOR)
    return floored / floored.sum()


def _rows_from_jsonl(path: Path) -> List[Tuple[str, str, str, List[float]]]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                rows.append((str(record["id"]), str(record["date"]), str(record["source"]), list(record["p"])))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise RepresentationError(f"row {line_no}: malformed distribution record ({e})")
    return rows


def _rows_from_csv(path: Path) -> List[Tuple[str, str, str, List[float]]]:
    frame = pd.read_csv(path, dtype={"id": str, "date": str, "source": str})
    missing = [c for c in ("id", "date", "source") if c not in frame.columns]
    if missing:
        raise RepresentationError(f"distribution CSV missing column(s): {', '.join(missing)}")
    prob_cols = [c for c in frame.columns if c not in ("id", "date", "source")]
    if not prob_cols:
        raise RepresentationError("distribution CSV has no probability columns")
    values = frame[prob_cols].to_numpy(dtype=float)
    return [
        (row.id, row.date, row.source, list(values[i]))
        for i, row in enumerate(frame[["id", "date", "source"]].itertuples(index=False))
    ]


def import_distributions(path: PathLike) -> List[DocDistribution]:
    """
    Load externally produced distributions (JSONL or CSV).

    Rows are checked against the simplex within 1e-6, floored at 1e-12 and
    renormalized exactly.

    Returns:
        Distributions sorted by (date, id)
    """
    source_path = Path(path)
    if not source_path.exists():
        raise FileNotFoundError(f"distribution file not found: {source_path}")

    if source_path.suffix.lower() == ".csv":
        rows = _rows_from_csv(source_path)
    else:
        rows = _rows_from_jsonl(source_path)

    dists: List[DocDistribution] = []
    K: Optional[int] = None
    for row_no, (doc_id, day, source, probs) in enumerate(rows, start=1):
        label = f"row {row_no} ('{doc_id}')"
        p = np.asarray(probs, dtype=float)
        if K is None:
            K = p.shape[0]
        elif p.shape[0] != K:
            raise DimensionError(f"{label}: expected {K} components, got {p.shape[0]}")
        try:
            parsed_day = parse_date(day)
        except ValueError:
            raise RepresentationError(f"{label}: unparseable date {day!r}")
        dists.append(DocDistribution(id=doc_id, date=parsed_day, source=source, p=_validated(p, label)))

    dists.sort(key=DocDistribution.sort_key)
    logger.info("Imported %d distributions (K=%s) from %s", len(dists), K, source_path)
    return dists


def emit_distributions(dists: Sequence[DocDistribution], path: PathLike) -> Path:
    return write_jsonl(path, (d.to_dict() for d in dists))
