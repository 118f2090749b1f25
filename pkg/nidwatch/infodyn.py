"""
infodyn.py
Windowed information signals over a time-sorted document stream.

Novelty is the mean Jensen-Shannon divergence of a document against the w
documents before it, transience the same against the w documents after it,
and resonance their difference. All quantities are in bits (log base 2).
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from nidwatch.errors import DimensionError, NidError, SeriesTooShortError
from nidwatch.io_utils import PathLike, write_frame_csv
from nidwatch.represent import DocDistribution

logger = logging.getLogger(__name__)

SIGNAL_COLUMNS = ["id", "date", "source", "novelty", "transience", "resonance"]
POOLED_SOURCE = "pooled"


@dataclass(frozen=True)
class SignalConfig:
    """
    Window configuration.

    Attributes:
        w: Window size in documents (or days in day-aggregated mode)
        log_base: Fixed at 2; signals are in bits
    """
    w: int = 7
    log_base: int = 2

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("window w must be >= 1")
        if self.log_base != 2:
            raise ValueError("log_base is fixed at 2")


@dataclass(frozen=True)
class SignalPoint:
    """Signals for one document; None marks an undefined value."""
    id: str
    date: date
    source: str
    novelty: Optional[float]
    transience: Optional[float]
    resonance: Optional[float]

    @property
    def defined(self) -> bool:
        return self.resonance is not None

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "date": self.date.isoformat(),
            "source": self.source,
            "novelty": self.novelty,
            "transience": self.transience,
            "resonance": self.resonance,
        }


@dataclass
class SignalSeries:
    points: List[SignalPoint]
    config: SignalConfig
    valid_range: Tuple[int, int] = field(default=(0, -1))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def source(self) -> str:
        labels = {p.source for p in self.points}
        return labels.pop() if len(labels) == 1 else POOLED_SOURCE

    def defined(self) -> List[SignalPoint]:
        return [p for p in self.points if p.defined]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([p.to_dict() for p in self.points], columns=SIGNAL_COLUMNS)
        for column in ("novelty", "transience", "resonance"):
            frame[column] = frame[column].astype(float)
        return frame

    def write_csv(self, path: PathLike):
        return write_frame_csv(path, self.to_frame())


# ===== DIVERGENCES =====

def _as_vector(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def kld(p, q) -> float:
    """
    Kullback-Leibler divergence D(p | q) in bits, with 0 * log(0 / q) = 0.

    Raises:
        DimensionError: p and q differ in length
        NidError: q has a zero component
    """
    p, q = _as_vector(p), _as_vector(q)
    if p.shape != q.shape:
        raise DimensionError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    if np.any(q <= 0):
        raise NidError("KLD reference distribution q must be strictly positive")
    ratio = np.where(p > 0, p, 1.0) / q
    return max(float(np.sum(p * np.log2(ratio))), 0.0)


def _kld_unchecked(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    # m > 0 wherever p > 0 since m is the midpoint; works row-wise on 2-D input
    ratio = np.where(p > 0, p, 1.0) / np.where(m > 0, m, 1.0)
    return np.sum(p * np.log2(ratio), axis=-1)


def jsd(p, q) -> float:
    """
    Jensen-Shannon divergence in bits, bounded by [0, 1].

    JSD(p | q) = 1/2 D(p | M) + 1/2 D(q | M) with M = (p + q) / 2.
    """
    p, q = _as_vector(p), _as_vector(q)
    if p.shape != q.shape:
        raise DimensionError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    m = (p + q) / 2
    value = 0.5 * float(_kld_unchecked(p, m)) + 0.5 * float(_kld_unchecked(q, m))
    return min(max(value, 0.0), 1.0)


def _jsd_rows(p: np.ndarray, others: np.ndarray) -> np.ndarray:
    """JSD of p against every row of ``others``, same evaluation as ``jsd``."""
    m = (p + others) / 2
    values = 0.5 * _kld_unchecked(np.broadcast_to(p, others.shape), m) + 0.5 * _kld_unchecked(others, m)
    return np.clip(values, 0.0, 1.0)


# ===== SIGNALS =====

def _matrix(series: Sequence[DocDistribution]) -> np.ndarray:
    dims = {d.K for d in series}
    if len(dims) > 1:
        raise DimensionError(f"mixed distribution dimensions in series: {sorted(dims)}")
    return np.vstack([d.p for d in series])


def _window_mean(P: np.ndarray, j: int, offsets: range) -> float:
    values = _jsd_rows(P[j], P[[j + d for d in offsets]])
    total = 0.0
    for v in values:
        total += float(v)
    return total / len(offsets)


def novelty(series: Sequence[DocDistribution], j: int, cfg: SignalConfig) -> Optional[float]:
    """Mean JSD of document j against the w preceding documents; None if j < w."""
    if j < cfg.w or j >= len(series):
        return None
    return _window_mean(_matrix(series), j, range(-1, -cfg.w - 1, -1))


def transience(series: Sequence[DocDistribution], j: int, cfg: SignalConfig) -> Optional[float]:
    """Mean JSD of document j against the w following documents; None near the end."""
    if j < 0 or j > len(series) - 1 - cfg.w:
        return None
    return _window_mean(_matrix(series), j, range(1, cfg.w + 1))


def resonance(series: Sequence[DocDistribution], j: int, cfg: SignalConfig) -> Optional[float]:
    n = novelty(series, j, cfg)
    t = transience(series, j, cfg)
    if n is None or t is None:
        return None
    return n - t


def split_by_source(dists: Sequence[DocDistribution], pooled: bool = False) -> Dict[str, List[DocDistribution]]:
    """
    Group a distribution stream per source, each group sorted by (date, id).

    With ``pooled=True`` every document is relabeled "pooled" and lands in one stream.
    """
    groups: Dict[str, List[DocDistribution]] = defaultdict(list)
    for d in dists:
        if pooled:
            d = replace(d, source=POOLED_SOURCE)
        groups[d.source].append(d)
    return {name: sorted(group, key=DocDistribution.sort_key) for name, group in sorted(groups.items())}


def compute_signals(series: Sequence[DocDistribution], cfg: SignalConfig, source: Optional[str] = None) -> SignalSeries:
    """
    Novelty, transience and resonance for every document of a time-sorted stream.

    Args:
        series: Distributions sorted by (date, id)
        cfg: Window configuration
        source: If given, only documents of this source are used

    Returns:
        SignalSeries with values defined exactly on indices [w, n - w - 1]

    Raises:
        SeriesTooShortError: n <= 2w
    """
    if source is not None:
        series = [d for d in series if d.source == source]

    keys = [d.sort_key() for d in series]
    if keys != sorted(keys):
        raise NidError("series must be sorted by (date, id)")

    n, w = len(series), cfg.w
    label = source or (series[0].source if series else "")
    if n <= 2 * w:
        raise SeriesTooShortError(label, n, 2 * w + 1)

    P = _matrix(series)
    past = range(-1, -w - 1, -1)
    future = range(1, w + 1)

    points = []
    for j, doc in enumerate(series):
        n_j = _window_mean(P, j, past) if j >= w else None
        t_j = _window_mean(P, j, future) if j <= n - 1 - w else None
        r_j = n_j - t_j if (n_j is not None and t_j is not None) else None
        points.append(SignalPoint(
            id=doc.id, date=doc.date, source=doc.source,
            novelty=n_j, transience=t_j, resonance=r_j,
        ))

    logger.info("Signals computed for '%s': n=%d, w=%d, defined=%d", label, n, w, n - 2 * w)
    return SignalSeries(points=points, config=cfg, valid_range=(w, n - w - 1))


def aggregate_daily(dists: Sequence[DocDistribution]) -> List[DocDistribution]:
    """One mean distribution per (source, date); the id is the ISO date."""
    groups: Dict[Tuple[str, date], List[np.ndarray]] = defaultdict(list)
    for d in dists:
        groups[(d.source, d.date)].append(d.p)

    daily = []
    for (source, day), vectors in groups.items():
        mean = np.mean(np.vstack(vectors), axis=0)
        daily.append(DocDistribution(id=day.isoformat(), date=day, source=source, p=mean / mean.sum()))
    daily.sort(key=lambda d: (d.date, d.source))
    return daily


def daily_mean_novelty(series: SignalSeries) -> Tuple[List[date], np.ndarray]:
    """Mean defined novelty per date; dates without a defined value are dropped."""
    frame = series.to_frame().dropna(subset=["novelty"])
    if frame.empty:
        return [], np.array([])
    daily = frame.groupby("date", sort=True)["novelty"].mean()
    return [date.fromisoformat(day) for day in daily.index], daily.to_numpy(dtype=float)


def document_novelty(series: SignalSeries) -> Tuple[List[date], np.ndarray]:
    """Defined per-document novelty values with their dates (per-document mode)."""
    defined = series.defined()
    return [p.date for p in defined], np.array([p.novelty for p in defined], dtype=float)


def two_sided_novelty(series: SignalSeries) -> Tuple[List[date], np.ndarray]:
    """
    min(novelty, transience) at every defined point (day-aggregated mode).

    When a window spans w days, a content shift on day d drags backward
    novelty down over [d, d + w) but forward transience drops on d itself;
    at the end of a shift the roles swap. The smaller of the two changes
    level on the shift day from either side.
    """
    defined = series.defined()
    values = [min(p.novelty, p.transience) for p in defined]
    return [p.date for p in defined], np.array(values, dtype=float)
