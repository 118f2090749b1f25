"""
synth.py
Ground-truthed synthetic data.

- Piecewise-Gaussian novelty series with two known change points
- Dated document corpora whose topical mixtures collapse toward a single
  event distribution inside a known window
- A small multi-source panel mixing event-driven and null sources
"""

import logging
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from nidwatch.corpus import Document

logger = logging.getLogger(__name__)

DEFAULT_START_DATE = date(2019, 12, 1)


# ===== SPECS =====

class SynthSeriesSpec(BaseModel):
    """Piecewise-Gaussian series; observation t belongs to segment 2 iff tau[0] <= t < tau[1]."""
    T: int = Field(ge=3)
    tau: Tuple[int, int]
    mu: Tuple[float, float, float]
    sigma: float = Field(gt=0)
    seed: int

    @model_validator(mode="after")
    def check_tau(self):
        t1, t2 = self.tau
        if not 0 < t1 < t2 < self.T:
            raise ValueError(f"tau must satisfy 0 < t1 < t2 < T (got {self.tau} with T={self.T})")
        return self


class SynthCorpusSpec(BaseModel):
    """
    NID-like corpus. Days in [event_window[0], event_window[1]) belong to the event.

    event_concentration = 1 leaves the event window indistinguishable from
    the rest; larger values pull every document toward one event mixture.
    """
    days: int = Field(ge=1)
    docs_per_day: int = Field(ge=1)
    vocab_size: int = Field(ge=2)
    event_window: Tuple[int, int]
    event_concentration: float = Field(ge=1.0)
    seed: int

    source: str = "synthetic"
    start_date: date = DEFAULT_START_DATE
    n_topics: int = Field(default=12, ge=2)
    tokens_per_doc: int = Field(default=120, ge=1)
    day_alpha: float = Field(default=0.5, gt=0)
    persistence: float = Field(default=0.5, ge=0, lt=1)
    story_weight: float = Field(default=0.5, ge=0, le=1)
    story_alpha: float = Field(default=0.3, gt=0)
    topic_word_alpha: float = Field(default=0.05, gt=0)
    event_topic_share: float = Field(default=0.15, ge=0, le=1)

    @field_validator("source")
    @classmethod
    def validate_source(cls, v):
        if not v.strip():
            raise ValueError("source must be non-empty")
        return v

    @model_validator(mode="after")
    def check_window(self):
        start, end = self.event_window
        if not 0 <= start < end <= self.days:
            raise ValueError(
                f"event_window must satisfy 0 <= start < end <= days (got {self.event_window} with days={self.days})"
            )
        return self


# ===== TRUTH RECORDS =====

@dataclass(frozen=True)
class SeriesTruth:
    T: int
    tau_days: Tuple[int, int]
    mu: Tuple[float, float, float]
    sigma: float
    seed: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "series",
            "T": self.T,
            "tau_days": list(self.tau_days),
            "mu": list(self.mu),
            "sigma": self.sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SeriesTruth":
        return cls(
            T=int(data["T"]),
            tau_days=tuple(int(v) for v in data["tau_days"]),
            mu=tuple(float(v) for v in data["mu"]),
            sigma=float(data["sigma"]),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class CorpusTruth:
    source: str
    days: int
    docs_per_day: int
    event_window: Tuple[int, int]
    event_concentration: float
    start_date: date
    seed: int

    @property
    def event_dates(self) -> Tuple[date, date]:
        """First event day and first day after the event."""
        return (
            self.start_date + timedelta(days=self.event_window[0]),
            self.start_date + timedelta(days=self.event_window[1]),
        )

    def to_dict(self) -> Dict[str, Any]:
        first, after = self.event_dates
        return {
            "kind": "corpus",
            "source": self.source,
            "days": self.days,
            "docs_per_day": self.docs_per_day,
            "event_window": list(self.event_window),
            "event_dates": [first.isoformat(), after.isoformat()],
            "event_concentration": self.event_concentration,
            "start_date": self.start_date.isoformat(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CorpusTruth":
        return cls(
            source=str(data["source"]),
            days=int(data["days"]),
            docs_per_day=int(data["docs_per_day"]),
            event_window=tuple(int(v) for v in data["event_window"]),
            event_concentration=float(data["event_concentration"]),
            start_date=date.fromisoformat(data["start_date"]),
            seed=int(data["seed"]),
        )


# ===== GENERATORS =====

def gen_series(spec: SynthSeriesSpec) -> Tuple[np.ndarray, SeriesTruth]:
    """Draw y[t] ~ Normal(segment mean, sigma)."""
    rng = np.random.default_rng(spec.seed)
    t1, t2 = spec.tau
    t = np.arange(spec.T)
    means = np.where(t < t1, spec.mu[0], np.where(t < t2, spec.mu[1], spec.mu[2]))
    y = means + spec.sigma * rng.standard_normal(spec.T)
    truth = SeriesTruth(T=spec.T, tau_days=spec.tau, mu=spec.mu, sigma=spec.sigma, seed=spec.seed)
    return y, truth


def vocabulary_terms(vocab_size: int) -> List[str]:
    width = max(4, len(str(vocab_size - 1)))
    return [f"term{i:0{width}d}" for i in range(vocab_size)]


def _event_mixture(spec: SynthCorpusSpec) -> np.ndarray:
    base = np.full(spec.n_topics, (1.0 - spec.event_topic_share) / spec.n_topics)
    return np.concatenate([base, [spec.event_topic_share]])


def gen_corpus(spec: SynthCorpusSpec) -> Tuple[List[Document], CorpusTruth]:
    """
    Generate a dated corpus with a topical collapse inside the event window.

    Outside the event a document mixes its day's topic mixture with a
    story-specific one. Inside it the mixture is pulled toward a fixed event
    mixture with weight 1 - 1/event_concentration. Random draws do not depend
    on the concentration, so equal seeds give paired corpora.
    """
    rng = np.random.default_rng(spec.seed)
    K = spec.n_topics
    terms = vocabulary_terms(spec.vocab_size)

    # Base topics plus one dedicated event topic
    phi = rng.dirichlet(np.full(spec.vocab_size, spec.topic_word_alpha), size=K + 1)
    theta_event = _event_mixture(spec)
    lam = 1.0 - 1.0 / spec.event_concentration
    start, end = spec.event_window

    docs: List[Document] = []
    theta_day = None
    for day in range(spec.days):
        shock = rng.dirichlet(np.full(K, spec.day_alpha))
        theta_day = shock if theta_day is None else spec.persistence * theta_day + (1 - spec.persistence) * shock
        day_date = spec.start_date + timedelta(days=day)
        in_event = start <= day < end

        for k in range(spec.docs_per_day):
            story = rng.dirichlet(np.full(K, spec.story_alpha))
            mixture = np.append((1 - spec.story_weight) * theta_day + spec.story_weight * story, 0.0)
            if in_event:
                mixture = lam * theta_event + (1 - lam) * mixture
            word_probs = mixture @ phi
            word_probs /= word_probs.sum()
            tokens = rng.choice(spec.vocab_size, size=spec.tokens_per_doc, p=word_probs)
            docs.append(Document(
                id=f"{spec.source}-{day:03d}-{k:02d}",
                date=day_date,
                source=spec.source,
                text=" ".join(terms[i] for i in tokens),
            ))

    truth = CorpusTruth(
        source=spec.source,
        days=spec.days,
        docs_per_day=spec.docs_per_day,
        event_window=spec.event_window,
        event_concentration=spec.event_concentration,
        start_date=spec.start_date,
        seed=spec.seed,
    )
    logger.info(
        "Generated corpus '%s': %d documents, event days %d-%d, concentration %.1f",
        spec.source, len(docs), start, end, spec.event_concentration,
    )
    return docs, truth


PANEL_SOURCES = (
    ("broadsheet-a", 50.0),
    ("broadsheet-b", 50.0),
    ("broadsheet-c", 25.0),
    ("broadsheet-d", 25.0),
    ("tabloid-a", 1.0),
    ("tabloid-b", 1.0),
)


def gen_panel(seed: int, days: int = 210, docs_per_day: int = 10, vocab_size: int = 400, event_window: Tuple[int, int] = (98, 133)) -> Dict[str, Tuple[List[Document], CorpusTruth]]:
    """Four event-driven sources and two null sources, each with its own derived seed."""
    children = np.random.SeedSequence(seed).spawn(len(PANEL_SOURCES))
    panel = {}
    for (source, concentration), child in zip(PANEL_SOURCES, children):
        spec = SynthCorpusSpec(
            days=days,
            docs_per_day=docs_per_day,
            vocab_size=vocab_size,
            event_window=event_window,
            event_concentration=concentration,
            seed=int(child.generate_state(1)[0]),
            source=source,
        )
        panel[source] = gen_corpus(spec)
    return panel
