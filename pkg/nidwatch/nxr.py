"""
nxr.py
Novelty x resonance slopes.

Fits resonance on novelty by ordinary least squares inside pre / during /
after periods and reports the slope with a t-based confidence interval.
"""

import logging
import math
from dataclasses import dataclass
from datetime import date
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter
from scipy import stats

from nidwatch.errors import DegenerateFitError, NidError, PeriodTooSmallError
from nidwatch.infodyn import SignalSeries

logger = logging.getLogger(__name__)

PERIODS = ("pre", "nid", "post")
DEFAULT_SLOPE_ALPHA = 0.05


@dataclass(frozen=True)
class Period:
    """Label and half-open date bounds [start, end); None means unbounded."""
    label: str
    start: Optional[date] = None
    end: Optional[date] = None

    def contains(self, day: date) -> bool:
        if self.start is not None and day < self.start:
            return False
        if self.end is not None and day >= self.end:
            return False
        return True

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "start": self.start.isoformat() if self.start else None,
            "end": self.end.isoformat() if self.end else None,
        }


@dataclass(frozen=True)
class SlopeFit:
    """
    OLS fit R = beta0 + beta1 * N + e.

    Attributes:
        beta0: Intercept
        beta1: Slope
        ci_low, ci_high: (1 - alpha) confidence bounds for beta1
        n: Sample count
        se: Standard error of beta1
        alpha: CI level parameter
        period: Period the fit belongs to
    """
    beta0: float
    beta1: float
    ci_low: float
    ci_high: float
    n: int
    se: float
    alpha: float
    period: Period = Period("all")

    def to_dict(self) -> Dict:
        return {
            "period": self.period.to_dict(),
            "beta0": self.beta0,
            "beta1": self.beta1,
            "ci": [self.ci_low, self.ci_high],
            "se": self.se,
            "n": self.n,
            "alpha": self.alpha,
        }


def fit_slope(points: Sequence[Tuple[float, float]], alpha: float = DEFAULT_SLOPE_ALPHA, period: Optional[Period] = None) -> SlopeFit:
    """
    Regress resonance on novelty.

    Args:
        points: (novelty, resonance) pairs, at least 3
        alpha: CI uses the t quantile 1 - alpha/2 with n - 2 degrees of freedom

    Raises:
        NidError: fewer than 3 points or alpha outside (0, 1)
        DegenerateFitError: novelty constant in period
    """
    if not 0 < alpha < 1:
        raise NidError("alpha must lie in (0, 1)")
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    n = data.shape[0]
    if n < 3:
        raise NidError(f"slope fit needs at least 3 points, got {n}")

    x, y = data[:, 0], data[:, 1]
    x_mean, y_mean = x.mean(), y.mean()
    dx = x - x_mean
    sxx = float(np.dot(dx, dx))
    if sxx <= 0.0 or sxx <= 1e-300 * n:
        raise DegenerateFitError("novelty constant in period")

    beta1 = float(np.dot(dx, y - y_mean)) / sxx
    beta0 = float(y_mean - beta1 * x_mean)
    residuals = y - (beta0 + beta1 * x)
    sse = float(np.dot(residuals, residuals))
    se = math.sqrt(sse / (n - 2) / sxx)
    t_crit = float(stats.t.ppf(1 - alpha / 2, n - 2))
    half_width = t_crit * se

    return SlopeFit(
        beta0=beta0, beta1=beta1,
        ci_low=beta1 - half_width, ci_high=beta1 + half_width,
        n=n, se=se, alpha=alpha, period=period or Period("all"),
    )


def period_slopes(series: SignalSeries, tau1: date, tau2: date, alpha: float = DEFAULT_SLOPE_ALPHA) -> List[SlopeFit]:
    """
    Fits for pre (< tau1), nid ([tau1, tau2)) and post (>= tau2), in that order.

    Raises:
        NidError: tau1 >= tau2
        PeriodTooSmallError: a period holds fewer than 3 defined points
    """
    if not tau1 < tau2:
        raise NidError(f"period boundaries must satisfy tau1 < tau2 (got {tau1} and {tau2})")

    periods = [Period("pre", None, tau1), Period("nid", tau1, tau2), Period("post", tau2, None)]
    defined = series.defined()
    fits = []
    for period in periods:
        pairs = [(p.novelty, p.resonance) for p in defined if period.contains(p.date)]
        if len(pairs) < 3:
            raise PeriodTooSmallError(period.label, len(pairs))
        fit = fit_slope(pairs, alpha=alpha, period=period)
        logger.info(
            "N x R slope %s/%s: beta1=%.4f [%.4f, %.4f] n=%d",
            series.source, period.label, fit.beta1, fit.ci_low, fit.ci_high, fit.n,
        )
        fits.append(fit)
    return fits


# ===== REPORT SCHEMA =====

class SlopeReportEntry(BaseModel):
    """One row of the slope report, laid out like an N x R coefficient table."""
    source: str
    period: Literal["pre", "nid", "post"]
    beta1: float
    ci: Tuple[float, float]
    n: int = Field(ge=3)
    start: Optional[str] = None
    end: Optional[str] = None


class SlopeErrorEntry(BaseModel):
    source: str
    error: str
    code: str


SlopeReport = List[Union[SlopeReportEntry, SlopeErrorEntry]]


def slope_report(source: str, fits: Sequence[SlopeFit]) -> List[SlopeReportEntry]:
    entries = []
    for fit in fits:
        row = fit.to_dict()
        period = row["period"]
        entries.append(SlopeReportEntry(
            source=source,
            period=period["label"],
            beta1=row["beta1"],
            ci=tuple(row["ci"]),
            n=row["n"],
            start=period["start"],
            end=period["end"],
        ))
    return entries


def slope_error(source: str, error: NidError) -> SlopeErrorEntry:
    return SlopeErrorEntry(source=source, **error.to_dict())


def slope_report_schema() -> Dict:
    return TypeAdapter(SlopeReport).json_schema()


def validate_slope_report(rows) -> SlopeReport:
    return TypeAdapter(SlopeReport).validate_python(rows)
