"""
nidwatch

Novelty, transience and resonance signals for dated news streams, N x R
slopes and two-change-point detection of news information decoupling.
"""

from nidwatch.errors import (
    NidError,
    CorpusError, VocabularyError,
    RepresentationError, DimensionError,
    SeriesTooShortError,
    DegenerateFitError, PeriodTooSmallError,
    ModelSpecError, ConfigError,
)

from nidwatch.corpus import (
    Document, TokenizedDoc, Vocabulary, NormalizeOpts,
    ingest, emit, normalize, normalize_all, build_vocabulary,
    load_stopwords, load_lemma_map, lemmatizer_from_map,
)

from nidwatch.represent import (
    DocDistribution, LdaModel,
    tf_distribution, tf_distributions,
    lda_fit, lda_infer, lda_infer_many,
    import_distributions, emit_distributions,
)

from nidwatch.infodyn import (
    SignalConfig, SignalPoint, SignalSeries,
    kld, jsd, novelty, transience, resonance,
    compute_signals, split_by_source, aggregate_daily, daily_mean_novelty,
    document_novelty, two_sided_novelty,
)

from nidwatch.nxr import SlopeFit, fit_slope, period_slopes, slope_report

from nidwatch.changepoint import (
    CpModelSpec, ChangePointPosterior, NidReport,
    log_posterior, sample_posterior, hdi, classify_nid, tau_to_date,
    summarize, detect_source,
)

from nidwatch.synth import (
    SynthSeriesSpec, SynthCorpusSpec, SeriesTruth, CorpusTruth,
    gen_series, gen_corpus, gen_panel,
)

from nidwatch.config import RunConfig, resolve_config

__all__ = [
    # Errors
    "NidError",
    "CorpusError", "VocabularyError",
    "RepresentationError", "DimensionError",
    "SeriesTooShortError",
    "DegenerateFitError", "PeriodTooSmallError",
    "ModelSpecError", "ConfigError",

    # Corpus
    "Document", "TokenizedDoc", "Vocabulary", "NormalizeOpts",
    "ingest", "emit", "normalize", "normalize_all", "build_vocabulary",
    "load_stopwords", "load_lemma_map", "lemmatizer_from_map",

    # Representations
    "DocDistribution", "LdaModel",
    "tf_distribution", "tf_distributions",
    "lda_fit", "lda_infer", "lda_infer_many",
    "import_distributions", "emit_distributions",

    # Signals
    "SignalConfig", "SignalPoint", "SignalSeries",
    "kld", "jsd", "novelty", "transience", "resonance",
    "compute_signals", "split_by_source", "aggregate_daily", "daily_mean_novelty",
    "document_novelty", "two_sided_novelty",

    # Slopes
    "SlopeFit", "fit_slope", "period_slopes", "slope_report",

    # Change points
    "CpModelSpec", "ChangePointPosterior", "NidReport",
    "log_posterior", "sample_posterior", "hdi", "classify_nid", "tau_to_date",
    "summarize", "detect_source",

    # Synthetic data
    "SynthSeriesSpec", "SynthCorpusSpec", "SeriesTruth", "CorpusTruth",
    "gen_series", "gen_corpus", "gen_panel",

    # Configuration
    "RunConfig", "resolve_config",
]
