"""
changepoint.py
Two-change-point Bayesian model for a novelty series.

Model:
    y[t] ~ Normal(mu_1, sigma)  for t < tau1
    y[t] ~ Normal(mu_2, sigma)  for tau1 <= t < tau2
    y[t] ~ Normal(mu_3, sigma)  for t >= tau2

    mu_i ~ Normal(0, 0.5), sigma ~ HalfCauchy(0.5),
    tau1 ~ Uniform(0, T), tau2 | tau1 ~ Uniform(tau1, T)

The posterior is sampled with adaptive Metropolis-within-Gibbs: conjugate
updates for each segment mean, a random walk on log sigma and a random walk
on each change point mixed with uniform independence proposals.
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import stats

from nidwatch.errors import ModelSpecError, NidError
from nidwatch.io_utils import PathLike, write_json

logger = logging.getLogger(__name__)

PARAM_NAMES = ("mu1", "mu2", "mu3", "sigma", "tau1", "tau2")
MIN_T = 6
MIN_DRAWS = 1000
MIN_CHAINS = 2
MIN_HDI_SAMPLES = 50
RHAT_THRESHOLD = 1.05
DEFAULT_HDI_MASS = 0.94
DEFAULT_NID_THRESHOLD = 0.97
DEFAULT_START_DATE = date(2019, 12, 1)

# Sampler tuning
ADAPT_BATCH = 50
TARGET_ACCEPT = 0.44
INDEPENDENCE_PROB = 0.1

TAU_PRIOR_READING = "tau1 ~ Uniform(0, T), tau2 | tau1 ~ Uniform(tau1, T) over the time index"
LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class CpModelSpec:
    """
    Priors and series length for the two-change-point model.

    Attributes:
        T: Series length
        mu_prior_mean: Mean of the Normal prior on each segment mean
        mu_prior_sd: Standard deviation of that prior
        sigma_prior_scale: Scale of the half-Cauchy prior on sigma (location 0)
    """
    T: int
    mu_prior_mean: float = 0.0
    mu_prior_sd: float = 0.5
    sigma_prior_scale: float = 0.5

    def __post_init__(self):
        if self.T < 1:
            raise ModelSpecError("series length T must be >= 1")
        if self.mu_prior_sd <= 0 or self.sigma_prior_scale <= 0:
            raise ModelSpecError("prior scales must be positive")

    def check_sampleable(self):
        if self.T < MIN_T:
            raise ModelSpecError(f"change-point sampling needs T >= {MIN_T}, got {self.T}")


def _finite_series(y) -> np.ndarray:
    values = np.asarray(y, dtype=float)
    if values.ndim != 1:
        raise NidError("novelty series must be one-dimensional")
    if not np.all(np.isfinite(values)):
        raise NidError("novelty series contains non-finite values")
    return values


def log_prior(theta: Sequence[float], spec: CpModelSpec) -> float:
    mu1, mu2, mu3, sigma, tau1, tau2 = (float(v) for v in theta)
    T = spec.T
    if not sigma > 0 or not (0 <= tau1 < tau2 <= T):
        return -math.inf
    lp = float(np.sum(stats.norm.logpdf([mu1, mu2, mu3], loc=spec.mu_prior_mean, scale=spec.mu_prior_sd)))
    lp += float(stats.halfcauchy.logpdf(sigma, loc=0.0, scale=spec.sigma_prior_scale))
    lp += -math.log(T) - math.log(T - tau1)
    return lp


def log_posterior(theta: Sequence[float], y, spec: CpModelSpec) -> float:
    """
    Unnormalized log posterior of (mu1, mu2, mu3, sigma, tau1, tau2).

    Returns -inf outside 0 <= tau1 < tau2 <= T or for sigma <= 0.

    Raises:
        NidError: y holds non-finite values
        ModelSpecError: len(y) differs from spec.T
    """
    values = _finite_series(y)
    if len(values) != spec.T:
        raise ModelSpecError(f"series length {len(values)} does not match spec T={spec.T}")

    lp = log_prior(theta, spec)
    if not math.isfinite(lp):
        return -math.inf

    mu1, mu2, mu3, sigma, tau1, tau2 = (float(v) for v in theta)
    t = np.arange(spec.T)
    means = np.where(t < tau1, mu1, np.where(t < tau2, mu2, mu3))
    return lp + float(np.sum(stats.norm.logpdf(values, loc=means, scale=sigma)))


def split_index(tau: float) -> int:
    """Number of observations strictly before ``tau``."""
    return int(math.ceil(tau))


def least_squares_split(y) -> Tuple[int, int]:
    """
    Best two-split segmentation by total squared error.

    Returns:
        (k1, k2) with 1 <= k1 < k2 <= T - 1, segments y[:k1], y[k1:k2], y[k2:]
    """
    values = _finite_series(y)
    T = len(values)
    if T < 3:
        raise ModelSpecError("least-squares split needs at least 3 points")

    S = np.concatenate([[0.0], np.cumsum(values)])
    best, best_pair = -math.inf, (1, 2)
    k2 = np.arange(2, T)
    for k1 in range(1, T - 1):
        cand = k2[k2 > k1]
        first = S[k1] ** 2 / k1
        middle = (S[cand] - S[k1]) ** 2 / (cand - k1)
        last = (S[T] - S[cand]) ** 2 / (T - cand)
        # total SSE = sum(y^2) - explained; maximize the explained part
        explained = first + middle + last
        idx = int(np.argmax(explained))
        if explained[idx] > best:
            best, best_pair = float(explained[idx]), (k1, int(cand[idx]))
    return best_pair


# ===== SAMPLER =====

@dataclass
class _ChainResult:
    samples: np.ndarray
    acceptance: Dict[str, float]


class _SegmentStats:
    """Prefix sums giving O(1) segment count, sum and sum of squares."""

    def __init__(self, y: np.ndarray):
        self.T = len(y)
        self.S = np.concatenate([[0.0], np.cumsum(y)])
        self.Q = np.concatenate([[0.0], np.cumsum(y * y)])

    def segments(self, k1: int, k2: int):
        bounds = ((0, k1), (k1, k2), (k2, self.T))
        return [(b - a, self.S[b] - self.S[a], self.Q[b] - self.Q[a]) for a, b in bounds]

    def sse(self, k1: int, k2: int, mu) -> float:
        total = 0.0
        for (n, s, q), m in zip(self.segments(k1, k2), mu):
            total += q - 2.0 * m * s + n * m * m
        return max(total, 0.0)


def _log_halfcauchy(sigma: float, scale: float) -> float:
    return math.log(2.0 / (math.pi * scale)) - math.log1p((sigma / scale) ** 2)


def _run_chain(args) -> _ChainResult:
    y, spec, draws, warmup, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    stats_ = _SegmentStats(y)
    T = spec.T
    prior_prec = 1.0 / spec.mu_prior_sd ** 2
    prior_term = spec.mu_prior_mean * prior_prec

    # Start near the least-squares split, jittered within +/- T/10
    k1, k2 = least_squares_split(y)
    spread = T / 10.0
    tau1 = float(np.clip(k1 - 0.5 + rng.uniform(-spread, spread), 0.0, T - 1.0))
    tau2 = float(np.clip(k2 - 0.5 + rng.uniform(-spread, spread), tau1 + 0.5, float(T)))
    k1, k2 = split_index(tau1), split_index(tau2)
    mu = [s / n if n else spec.mu_prior_mean for n, s, _ in stats_.segments(k1, k2)]
    log_sigma = 0.5 * math.log(max(stats_.sse(k1, k2, mu) / T, 1e-12))

    log_step = {"sigma": math.log(0.2), "tau1": math.log(max(1.0, T / 20.0)), "tau2": math.log(max(1.0, T / 20.0))}
    step_bounds = (math.log(1e-3), math.log(float(T)))
    batch_tries = {name: 0 for name in log_step}
    batch_hits = {name: 0 for name in log_step}
    kept_tries = {name: 0 for name in log_step}
    kept_hits = {name: 0 for name in log_step}

    n_iter = warmup + draws
    normals = rng.standard_normal((n_iter, 6))
    uniforms = rng.random((n_iter, 7))
    out = np.empty((draws, len(PARAM_NAMES)))
    batch = 0

    def tau_loglik(a: int, b: int, sigma2: float) -> float:
        return -stats_.sse(a, b, mu) / (2.0 * sigma2)

    for it in range(n_iter):
        if it == warmup:
            batch_tries = {name: 0 for name in log_step}
            batch_hits = {name: 0 for name in log_step}
        z, u = normals[it], uniforms[it]
        sigma = math.exp(log_sigma)
        sigma2 = sigma * sigma

        # Conjugate segment means
        for i, (n, s, _) in enumerate(stats_.segments(k1, k2)):
            prec = prior_prec + n / sigma2
            mean = (prior_term + s / sigma2) / prec
            mu[i] = mean + z[i] / math.sqrt(prec)

        # log sigma random walk, Jacobian term included
        sse = stats_.sse(k1, k2, mu)
        prop = log_sigma + math.exp(log_step["sigma"]) * z[3]
        s_new = math.exp(prop)

        def sigma_target(ls, s_val):
            return -T * ls - sse / (2.0 * s_val * s_val) + _log_halfcauchy(s_val, spec.sigma_prior_scale) + ls

        log_ratio = sigma_target(prop, s_new) - sigma_target(log_sigma, sigma)
        batch_tries["sigma"] += 1
        if math.log(u[0] + 1e-300) < log_ratio:
            log_sigma = prop
            batch_hits["sigma"] += 1
        sigma2 = math.exp(2 * log_sigma)

        # tau1 | rest on [0, tau2)
        rw = u[1] >= INDEPENDENCE_PROB
        cand = tau1 + math.exp(log_step["tau1"]) * z[4] if rw else u[2] * tau2
        if rw:
            batch_tries["tau1"] += 1
        if 0.0 <= cand < tau2:
            kc = split_index(cand)
            log_ratio = (tau_loglik(kc, k2, sigma2) - math.log(T - cand)) - (tau_loglik(k1, k2, sigma2) - math.log(T - tau1))
            if math.log(u[3] + 1e-300) < log_ratio:
                tau1, k1 = cand, kc
                if rw:
                    batch_hits["tau1"] += 1

        # tau2 | rest on (tau1, T]
        rw = u[4] >= INDEPENDENCE_PROB
        cand = tau2 + math.exp(log_step["tau2"]) * z[5] if rw else tau1 + (T - tau1) * (1.0 - u[5])
        if rw:
            batch_tries["tau2"] += 1
        if tau1 < cand <= T:
            kc = split_index(cand)
            log_ratio = tau_loglik(k1, kc, sigma2) - tau_loglik(k1, k2, sigma2)
            if math.log(u[6] + 1e-300) < log_ratio:
                tau2, k2 = cand, kc
                if rw:
                    batch_hits["tau2"] += 1

        if it < warmup:
            if (it + 1) % ADAPT_BATCH == 0:
                batch += 1
                delta = min(0.05, 1.0 / math.sqrt(batch))
                for name in log_step:
                    if batch_tries[name]:
                        rate = batch_hits[name] / batch_tries[name]
                        log_step[name] += delta if rate > TARGET_ACCEPT else -delta
                        log_step[name] = min(max(log_step[name], step_bounds[0]), step_bounds[1])
                    batch_tries[name] = batch_hits[name] = 0
        else:
            for name in log_step:
                kept_tries[name] += batch_tries[name]
                kept_hits[name] += batch_hits[name]
                batch_tries[name] = batch_hits[name] = 0
            out[it - warmup] = (mu[0], mu[1], mu[2], math.exp(log_sigma), tau1, tau2)

    acceptance = {name: (kept_hits[name] / kept_tries[name] if kept_tries[name] else 0.0) for name in log_step}
    acceptance.update({"mu1": 1.0, "mu2": 1.0, "mu3": 1.0})
    return _ChainResult(samples=out, acceptance=acceptance)


def split_rhat(chain_samples) -> float:
    """
    Split-R-hat for one parameter.

    Args:
        chain_samples: Array of shape (chains, draws)
    """
    x = np.asarray(chain_samples, dtype=float)
    if x.ndim != 2 or x.shape[1] < 4:
        raise NidError("split_rhat needs a (chains, draws >= 4) array")
    half = x.shape[1] // 2
    halves = np.concatenate([x[:, :half], x[:, -half:]], axis=0)
    n = halves.shape[1]
    W = float(np.mean(np.var(halves, axis=1, ddof=1)))
    B = float(n * np.var(np.mean(halves, axis=1), ddof=1))
    if W <= 0.0:
        return 1.0 if B <= 0.0 else math.inf
    var_hat = (n - 1) / n * W + B / n
    return math.sqrt(var_hat / W)


@dataclass
class ChangePointPosterior:
    """
    Retained draws of the two-change-point model.

    Attributes:
        samples: Array (chains, draws, 6) ordered as ``param_names``
        rhat: Split-R-hat per parameter
        acceptance: Mean acceptance rate per parameter across chains
        converged: All rhat <= 1.05
        T: Series length
        seed: Master seed
        dates: Optional dates for the series indices
    """
    samples: np.ndarray
    rhat: Dict[str, float]
    acceptance: Dict[str, float]
    T: int
    seed: int
    param_names: Tuple[str, ...] = PARAM_NAMES
    dates: Optional[List[date]] = None
    warmup: int = 0

    @property
    def n_chains(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def converged(self) -> bool:
        return all(v <= RHAT_THRESHOLD for v in self.rhat.values())

    def chain(self, name: str) -> np.ndarray:
        return self.samples[:, :, self.param_names.index(name)]

    def flat(self, name: str) -> np.ndarray:
        return self.chain(name).reshape(-1)

    def mean(self, name: str) -> float:
        return float(np.mean(self.flat(name)))


def sample_posterior(
    y,
    spec: Optional[CpModelSpec] = None,
    chains: int = 4,
    draws: int = 1000,
    warmup: int = 1000,
    seed: int = 0,
    n_jobs: int = 1,
) -> ChangePointPosterior:
    """
    Sample the two-change-point posterior.

    Args:
        y: Novelty series
        spec: Model spec; defaults to the standard priors with T = len(y)
        chains: Independent chains (>= 2), seeded from SeedSequence(seed).spawn
        draws: Retained draws per chain (>= 1000)
        warmup: Adaptation iterations per chain, discarded
        n_jobs: Worker processes; results do not depend on it

    Returns:
        ChangePointPosterior, flagged not converged if any rhat > 1.05
    """
    values = _finite_series(y)
    spec = spec or CpModelSpec(T=len(values))
    if len(values) != spec.T:
        raise ModelSpecError(f"series length {len(values)} does not match spec T={spec.T}")
    spec.check_sampleable()
    if draws < MIN_DRAWS:
        raise ModelSpecError(f"draws must be >= {MIN_DRAWS}, got {draws}")
    if chains < MIN_CHAINS:
        raise ModelSpecError(f"chains must be >= {MIN_CHAINS}, got {chains}")
    if warmup < 0:
        raise ModelSpecError("warmup must be >= 0")

    jobs = [(values, spec, draws, warmup, child) for child in np.random.SeedSequence(seed).spawn(chains)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, chains)) as pool:
            results = list(pool.map(_run_chain, jobs))
    else:
        results = [_run_chain(job) for job in jobs]

    samples = np.stack([r.samples for r in results])
    rhat = {name: split_rhat(samples[:, :, i]) for i, name in enumerate(PARAM_NAMES)}
    acceptance = {name: float(np.mean([r.acceptance[name] for r in results])) for name in PARAM_NAMES}
    post = ChangePointPosterior(samples=samples, rhat=rhat, acceptance=acceptance, T=spec.T, seed=seed, warmup=warmup)

    logger.info(
        "Sampled change-point posterior: T=%d chains=%d draws=%d tau=(%.1f, %.1f)",
        spec.T, chains, draws, post.mean("tau1"), post.mean("tau2"),
    )
    if not post.converged:
        worst = max(rhat, key=rhat.get)
        logger.warning("Posterior not converged: rhat[%s]=%.3f > %.2f", worst, rhat[worst], RHAT_THRESHOLD)
    return post


# ===== SUMMARIES =====

def hdi(samples, mass: float = DEFAULT_HDI_MASS) -> Tuple[float, float]:
    """
    Shortest interval over the sorted samples holding ceil(mass * n) of them.

    Raises:
        NidError: fewer than 50 samples or mass outside (0, 1]
    """
    if not 0 < mass <= 1:
        raise NidError("HDI mass must lie in (0, 1]")
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = len(x)
    if n < MIN_HDI_SAMPLES:
        raise NidError(f"HDI needs at least {MIN_HDI_SAMPLES} samples, got {n}")
    m = min(max(int(math.ceil(mass * n - 1e-9)), 1), n)
    widths = x[m - 1:] - x[:n - m + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + m - 1])


def tau_to_date(tau: float, dates: Sequence[date]) -> date:
    """Date at index floor(tau), clamped to the last date."""
    if len(dates) == 0:
        raise NidError("cannot map change point onto an empty date list")
    if not math.isfinite(tau) or tau < 0 or tau > len(dates):
        raise NidError(f"change point {tau} outside [0, {len(dates)}]")
    return dates[min(int(math.floor(tau)), len(dates) - 1)]


def index_dates(T: int, start: date = DEFAULT_START_DATE) -> List[date]:
    return [start + timedelta(days=i) for i in range(T)]


def _tau_mode(values: np.ndarray) -> int:
    counts = np.bincount(np.floor(values).astype(int))
    return int(np.argmax(counts))


def summarize(post: ChangePointPosterior, mass: float = DEFAULT_HDI_MASS) -> Dict[str, Dict[str, Any]]:
    """Posterior mean and HDI per parameter; change points also carry their modal index."""
    summary = {}
    for name in post.param_names:
        values = post.flat(name)
        entry = {"mean": float(np.mean(values)), "hdi": hdi(values, mass)}
        if name.startswith("tau"):
            entry["mode"] = _tau_mode(values)
        summary[name] = entry
    return summary


# ===== REPORT =====

class TauSummary(BaseModel):
    date: str
    hdi: Tuple[str, str]
    mean_index: float
    hdi_index: Tuple[float, float]
    mode_date: str


class SegmentSummary(BaseModel):
    mean: float
    hdi: Tuple[float, float]


class DecisionTrace(BaseModel):
    p_mu2_lt_mu1: float
    p_mu2_lt_mu3: float
    threshold: float
    tau1_mode: str
    tau2_mode: str
    converged: bool
    rule: str = "P(mu2 < mu1) > threshold and P(mu2 < mu3) > threshold"


class NidReport(BaseModel):
    """Per-source change-point report (dates, segment means and NID decision)."""
    source: str
    tau1: TauSummary
    tau2: TauSummary
    mu: List[SegmentSummary]
    sigma: SegmentSummary
    nid_supported: bool
    converged: bool
    rhat: Dict[str, Optional[float]]
    acceptance: Dict[str, float]
    seed: int
    trace: DecisionTrace
    metadata: Dict[str, Any] = {}

    def table_row(self) -> Dict[str, str]:
        return {
            "Source": self.source,
            "NID Start [HDI]": f"{self.tau1.date} [{self.tau1.hdi[0]}, {self.tau1.hdi[1]}]",
            "NID End [HDI]": f"{self.tau2.date} [{self.tau2.hdi[0]}, {self.tau2.hdi[1]}]",
            "NID": "yes" if self.nid_supported else "no",
        }

    def segment_rows(self) -> List[Dict[str, Any]]:
        labels = ("pre", "nid", "post")
        return [{"source": self.source, "segment": label, "mean": seg.mean, "hdi": list(seg.hdi)}
                for label, seg in zip(labels, self.mu)]

    def write(self, path: PathLike):
        return write_json(path, self.model_dump(mode="json"))


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def classify_nid(
    post: ChangePointPosterior,
    threshold: float = DEFAULT_NID_THRESHOLD,
    source: str = "",
    mass: float = DEFAULT_HDI_MASS,
    dates: Optional[Sequence[date]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> NidReport:
    """
    Decide NID support from joint posterior draws.

    nid_supported = P(mu2 < mu1) > threshold and P(mu2 < mu3) > threshold.
    Unconverged posteriors are classified as well and flagged in the report.
    """
    dates = list(dates or post.dates or index_dates(post.T))
    if len(dates) != post.T:
        raise NidError(f"{len(dates)} dates given for a series of length {post.T}")

    summary = summarize(post, mass)
    mu1, mu2, mu3 = post.flat("mu1"), post.flat("mu2"), post.flat("mu3")
    p21 = float(np.mean(mu2 < mu1))
    p23 = float(np.mean(mu2 < mu3))
    supported = p21 > threshold and p23 > threshold

    def tau_summary(name: str) -> TauSummary:
        entry = summary[name]
        lo, hi = entry["hdi"]
        return TauSummary(
            date=tau_to_date(entry["mean"], dates).isoformat(),
            hdi=(tau_to_date(lo, dates).isoformat(), tau_to_date(hi, dates).isoformat()),
            mean_index=entry["mean"],
            hdi_index=(lo, hi),
            mode_date=tau_to_date(entry["mode"], dates).isoformat(),
        )

    tau1, tau2 = tau_summary("tau1"), tau_summary("tau2")
    meta = {"T": post.T, "chains": post.n_chains, "draws": post.n_samples, "warmup": post.warmup,
            "hdi_mass": mass, "tau_prior": TAU_PRIOR_READING}
    meta.update(metadata or {})

    report = NidReport(
        source=source,
        tau1=tau1,
        tau2=tau2,
        mu=[SegmentSummary(mean=summary[n]["mean"], hdi=summary[n]["hdi"]) for n in ("mu1", "mu2", "mu3")],
        sigma=SegmentSummary(mean=summary["sigma"]["mean"], hdi=summary["sigma"]["hdi"]),
        nid_supported=supported,
        converged=post.converged,
        rhat={name: _finite_or_none(v) for name, v in post.rhat.items()},
        acceptance=post.acceptance,
        seed=post.seed,
        trace=DecisionTrace(
            p_mu2_lt_mu1=p21, p_mu2_lt_mu3=p23, threshold=threshold,
            tau1_mode=tau1.mode_date, tau2_mode=tau2.mode_date, converged=post.converged,
        ),
        metadata=meta,
    )
    logger.info("NID decision for '%s': %s (P21=%.3f, P23=%.3f)", source, supported, p21, p23)
    return report


@dataclass(frozen=True)
class SamplerSettings:
    chains: int = 4
    draws: int = 1000
    warmup: int = 1000
    seed: int = 0
    n_jobs: int = 1
    hdi_mass: float = DEFAULT_HDI_MASS
    nid_threshold: float = DEFAULT_NID_THRESHOLD
    series_mode: str = "daily_mean"
    metadata: Dict[str, Any] = field(default_factory=dict)


def detect_source(dates: Sequence[date], y, source: str, settings: Optional[SamplerSettings] = None) -> NidReport:
    """Spec, sample and classify one source's novelty series."""
    settings = settings or SamplerSettings()
    values = _finite_series(y)
    if len(dates) != len(values):
        raise NidError(f"{len(dates)} dates given for a series of length {len(values)}")

    post = sample_posterior(
        values, CpModelSpec(T=len(values)),
        chains=settings.chains, draws=settings.draws, warmup=settings.warmup,
        seed=settings.seed, n_jobs=settings.n_jobs,
    )
    post.dates = list(dates)
    meta = {"series_mode": settings.series_mode}
    meta.update(settings.metadata)
    return classify_nid(post, settings.nid_threshold, source=source, mass=settings.hdi_mass, metadata=meta)
