"""
Unit tests for the synthetic series and corpus generators.
"""

import json
from datetime import date

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from nidwatch.changepoint import SamplerSettings, detect_source
from nidwatch.corpus import build_vocabulary, emit, ingest, normalize_all
from nidwatch.infodyn import (
    SignalConfig, aggregate_daily, compute_signals, daily_mean_novelty, two_sided_novelty,
)
from nidwatch.nxr import period_slopes
from nidwatch.represent import tf_distributions
from nidwatch.synth import (
    SynthSeriesSpec, SynthCorpusSpec, SeriesTruth, CorpusTruth,
    gen_series, gen_corpus, gen_panel, PANEL_SOURCES,
)

POLITIKEN_MU = (0.27, 0.15, 0.26)


def series_spec(**overrides):
    values = dict(T=210, tau=(98, 133), mu=POLITIKEN_MU, sigma=0.02, seed=1)
    values.update(overrides)
    return SynthSeriesSpec(**values)


def corpus_spec(**overrides):
    values = dict(days=60, docs_per_day=4, vocab_size=200, event_window=(25, 40), event_concentration=50, seed=1)
    values.update(overrides)
    return SynthCorpusSpec(**values)


def corpus_signals(docs, w=7):
    tokenized = normalize_all(docs, set())
    dists = tf_distributions(tokenized, build_vocabulary(tokenized))
    return compute_signals(dists, SignalConfig(w=w))


def novelty_inside_minus_outside(spec):
    """Mean document novelty inside the event (past the onset window) minus outside."""
    docs, truth = gen_corpus(spec)
    frame = corpus_signals(docs).to_frame().dropna(subset=["novelty"])
    day = frame["date"].map(lambda d: (date.fromisoformat(d) - truth.start_date).days)
    start, end = truth.event_window
    inside = frame.loc[(day >= start + 2) & (day < end), "novelty"]
    outside = frame.loc[(day < start) | (day >= end + 2), "novelty"]
    return inside.mean() - outside.mean()


class TestGenSeries:
    """Test piecewise-Gaussian series."""

    def test_noiseless_limit(self):
        """Test segment means without noise."""
        y, _ = gen_series(series_spec(sigma=1e-9))
        assert abs(y[:98].mean() - 0.27) <= 1e-6
        assert abs(y[98:133].mean() - 0.15) <= 1e-6
        assert abs(y[133:].mean() - 0.26) <= 1e-6

    def test_deterministic(self):
        """Test equal seeds give equal series."""
        first, _ = gen_series(series_spec(seed=4))
        second, _ = gen_series(series_spec(seed=4))
        np.testing.assert_array_equal(first, second)
        other, _ = gen_series(series_spec(seed=5))
        assert not np.array_equal(first, other)

    def test_segment_means(self):
        """Test segment means over seeds."""
        segments = [(0, 98), (98, 133), (133, 210)]
        averaged = np.zeros(3)
        for seed in range(20):
            y, _ = gen_series(series_spec(seed=seed))
            for i, (a, b) in enumerate(segments):
                mean = y[a:b].mean()
                assert abs(mean - POLITIKEN_MU[i]) <= 4 * 0.02 / np.sqrt(b - a)
                averaged[i] += mean / 20
        np.testing.assert_allclose(averaged, POLITIKEN_MU, atol=0.005)

    def test_truth_round_trip(self):
        """Test the truth record round trip."""
        _, truth = gen_series(series_spec(seed=8))
        restored = SeriesTruth.from_dict(json.loads(json.dumps(truth.to_dict())))
        assert restored == truth
        assert truth.to_dict()["tau_days"] == [98, 133]


class TestSeriesSpec:
    """Test series spec validation."""

    def test_missing_seed(self):
        """Test a spec without a seed."""
        with pytest.raises(ValidationError, match="seed"):
            SynthSeriesSpec(T=50, tau=(10, 20), mu=POLITIKEN_MU, sigma=0.02)

    @pytest.mark.parametrize("tau", [(0, 20), (20, 20), (30, 20), (10, 50)])
    def test_bad_tau(self, tau):
        """Test change points outside 0 < t1 < t2 < T."""
        with pytest.raises(ValidationError):
            SynthSeriesSpec(T=50, tau=tau, mu=POLITIKEN_MU, sigma=0.02, seed=1)

    def test_non_positive_sigma(self):
        """Test sigma = 0."""
        with pytest.raises(ValidationError):
            SynthSeriesSpec(T=50, tau=(10, 20), mu=POLITIKEN_MU, sigma=0.0, seed=1)


class TestGenCorpus:
    """Test NID-like corpora."""

    def test_document_count(self, tmp_path):
        """Test document count and JSONL output."""
        spec = corpus_spec(days=12, docs_per_day=3, event_window=(4, 8))
        docs, truth = gen_corpus(spec)
        assert len(docs) == 36
        path = emit(docs, tmp_path / "corpus.jsonl")
        assert len(path.read_text(encoding="utf-8").splitlines()) == 36
        assert ingest(path) == docs

    def test_ids_and_dates(self):
        """Test document ids and event dates."""
        docs, truth = gen_corpus(corpus_spec(days=10, docs_per_day=2, event_window=(3, 6), source="politiken"))
        assert docs[0].id == "politiken-000-00"
        assert docs[-1].id == "politiken-009-01"
        assert docs[0].date == date(2019, 12, 1)
        assert truth.event_dates == (date(2019, 12, 4), date(2019, 12, 7))

    def test_deterministic(self):
        """Test equal seeds give equal corpora."""
        spec = corpus_spec(days=15, event_window=(5, 10))
        assert gen_corpus(spec)[0] == gen_corpus(spec)[0]

    def test_concentration_only_touches_event(self):
        """Test concentration changes only event documents."""
        null_docs, _ = gen_corpus(corpus_spec(days=15, event_window=(5, 10), event_concentration=1))
        event_docs, _ = gen_corpus(corpus_spec(days=15, event_window=(5, 10), event_concentration=50))
        day = lambda d: d.id.split("-")[1]
        outside = [(a.text, b.text) for a, b in zip(null_docs, event_docs) if not 5 <= int(day(a)) < 10]
        assert all(a == b for a, b in outside)
        inside = [(a.text, b.text) for a, b in zip(null_docs, event_docs) if 5 <= int(day(a)) < 10]
        assert any(a != b for a, b in inside)

    def test_truth_round_trip(self):
        """Test the corpus truth record round trip."""
        _, truth = gen_corpus(corpus_spec(days=15, event_window=(5, 10)))
        assert CorpusTruth.from_dict(json.loads(json.dumps(truth.to_dict()))) == truth

    @pytest.mark.parametrize("window", [(10, 5), (-1, 5), (5, 61)])
    def test_bad_window(self, window):
        """Test event windows outside the corpus."""
        with pytest.raises(ValidationError):
            corpus_spec(event_window=window)

    def test_concentration_below_one(self):
        """Test concentration below one."""
        with pytest.raises(ValidationError):
            corpus_spec(event_concentration=0.5)

    def test_null_concentration_indistinguishable(self):
        """Test concentration 1 leaves no novelty dip."""
        diffs = [novelty_inside_minus_outside(corpus_spec(event_concentration=1, seed=seed)) for seed in range(20)]
        assert stats.ttest_1samp(diffs, 0.0).pvalue > 0.01

    def test_strong_concentration_dip(self):
        """Test strong concentration lowers novelty inside the event."""
        dips = sum(novelty_inside_minus_outside(corpus_spec(seed=seed)) < 0 for seed in range(20))
        assert dips >= 19

    def test_panel(self):
        """Test the six-source panel."""
        panel = gen_panel(seed=3, days=30, docs_per_day=2, vocab_size=100, event_window=(10, 20))
        assert list(panel) == [name for name, _ in PANEL_SOURCES]
        concentrations = {name: truth.event_concentration for name, (_, truth) in panel.items()}
        assert concentrations["broadsheet-a"] == 50.0
        assert concentrations["tabloid-a"] == 1.0
        assert all(d.source == "tabloid-b" for d in panel["tabloid-b"][0])


def detection_input(dists, mode):
    """Dates and values handed to detect_source, as the CLI builds them per mode."""
    if mode == "day_aggregated":
        return two_sided_novelty(compute_signals(aggregate_daily(dists), SignalConfig(w=7)))
    return daily_mean_novelty(compute_signals(dists, SignalConfig(w=7)))


@pytest.mark.slow
class TestEndToEnd:
    """Corpus to change points and slopes."""

    @pytest.mark.parametrize("mode", ["daily_mean", "day_aggregated"])
    def test_pipeline_recovers_event(self, mode):
        """Test both detection modes recover the event and the slope dip."""
        start_errors, end_errors, supported = [], [], 0
        pre, nid, post = [], [], []
        for seed in range(20):
            spec = SynthCorpusSpec(days=210, docs_per_day=10, vocab_size=400, event_window=(98, 133),
                                   event_concentration=50, seed=seed)
            docs, truth = gen_corpus(spec)
            tokenized = normalize_all(docs, set())
            dists = tf_distributions(tokenized, build_vocabulary(tokenized))
            signals = compute_signals(dists, SignalConfig(w=7))
            dates, values = detection_input(dists, mode)
            report = detect_source(dates, list(values), spec.source, SamplerSettings(seed=seed))

            first, after = truth.event_dates
            tau1, tau2 = date.fromisoformat(report.tau1.date), date.fromisoformat(report.tau2.date)
            start_errors.append(abs((tau1 - first).days))
            end_errors.append(abs((tau2 - after).days))
            supported += report.nid_supported

            fits = period_slopes(signals, tau1, tau2)
            pre.append(fits[0].beta1)
            nid.append(fits[1].beta1)
            post.append(fits[2].beta1)

        assert np.median(start_errors) <= 3
        assert np.median(end_errors) <= 3
        assert supported >= 15
        assert np.median(nid) < np.median(pre)
        assert np.median(nid) < np.median(post)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
