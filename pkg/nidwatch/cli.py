#!/usr/bin/env python
"""
nidwatch command-line interface

Usage:
    python -m nidwatch.cli ingest   --input corpus.jsonl        - Vocabulary + document distributions
    python -m nidwatch.cli signals  --input corpus.jsonl        - Novelty/transience/resonance CSV per source
    python -m nidwatch.cli detect   --input corpus.jsonl        - Change-point report per source
    python -m nidwatch.cli detect   --series series.csv         - Change-point report for a bare series
    python -m nidwatch.cli slopes   --input corpus.jsonl        - N x R slopes before/during/after
    python -m nidwatch.cli simulate --spec spec.json            - Synthetic series or corpus + truth

Every subcommand accepts --config run.json; flags override the file.
Outputs go to --output-dir (default $NIDWATCH_OUTPUT_DIR or ./nidwatch_out).
"""

import re
import sys
import json
import logging
import argparse
from concurrent.futures import ThreadPoolExecutor
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import ValidationError
from pythonjsonlogger import jsonlogger

from nidwatch import corpus, represent
from nidwatch.changepoint import NidReport, detect_source, index_dates
from nidwatch.config import RunConfig, default_log_level, load_env, resolve_config
from nidwatch.errors import ConfigError, NidError
from nidwatch.infodyn import (
    SignalSeries,
    aggregate_daily,
    compute_signals,
    daily_mean_novelty,
    document_novelty,
    split_by_source,
    two_sided_novelty,
)
from nidwatch.io_utils import atomic_write_text, write_frame_csv, write_json
from nidwatch.nxr import period_slopes, slope_error, slope_report, slope_report_schema
from nidwatch.represent import DocDistribution
from nidwatch.synth import SynthCorpusSpec, SynthSeriesSpec, gen_corpus, gen_series

logger = logging.getLogger(__name__)

_HANDLER_TAG = "_nidwatch_handler"


# ===== LOGGING SETUP =====
def setup_logging(level: str = "INFO") -> logging.Logger:
    """Configure JSON structured logging on stderr."""
    root = logging.getLogger()
    root.setLevel(level.upper())
    for handler in list(root.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            root.removeHandler(handler)

    json_handler = logging.StreamHandler(sys.stderr)
    json_handler.setFormatter(jsonlogger.JsonFormatter("%(asctime)s %(levelname)s %(name)s %(message)s"))
    setattr(json_handler, _HANDLER_TAG, True)
    root.addHandler(json_handler)
    return root


# ===== PIPELINE HELPERS =====

def _safe_name(source: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", source) or "source"


def _output_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_input(cfg: RunConfig) -> Path:
    if not cfg.input:
        raise ConfigError("an --input path is required")
    path = Path(cfg.input)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    return path


def _normalized_corpus(cfg: RunConfig):
    docs = corpus.ingest(_require_input(cfg))
    stopwords = corpus.load_stopwords(cfg.stopwords_path) if cfg.stopwords_path else set()
    lemmatizer = corpus.lemmatizer_from_map(corpus.load_lemma_map(cfg.lemma_path)) if cfg.lemma_path else None
    tokenized = corpus.normalize_all(docs, stopwords, corpus.NormalizeOpts(lemmatizer=lemmatizer))
    vocab = corpus.build_vocabulary(tokenized, min_count=cfg.min_count)
    return tokenized, vocab


def load_distributions(cfg: RunConfig) -> Tuple[List[DocDistribution], Optional[corpus.Vocabulary]]:
    """Document distributions for the configured representation."""
    if cfg.representation == "import":
        return represent.import_distributions(_require_input(cfg)), None

    tokenized, vocab = _normalized_corpus(cfg)
    if cfg.representation == "tf":
        return represent.tf_distributions(tokenized, vocab, cfg.smoothing), vocab

    # LDA is fit once on all sources so topics are shared
    model = represent.lda_fit(
        tokenized, vocab,
        K=cfg.lda_topics, alpha=cfg.lda_alpha, beta=cfg.lda_beta,
        iterations=cfg.lda_iterations, seed=cfg.seed,
    )
    return represent.lda_infer_many(model, tokenized, seed=cfg.seed), vocab


def source_signals(dists: Sequence[DocDistribution], cfg: RunConfig, day_aggregation: bool) -> Dict[str, SignalSeries]:
    groups = split_by_source(dists, pooled=cfg.pooled)

    def run(item):
        name, group = item
        series = aggregate_daily(group) if day_aggregation else group
        return name, compute_signals(series, cfg.signal_config())

    return dict(_map_sources(run, list(groups.items()), cfg.jobs))


def _map_sources(fn, items: list, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def detection_series(signals: SignalSeries, cfg: RunConfig) -> Tuple[List[date], List[float]]:
    """The novelty series fed to the change-point model for the configured mode."""
    series_fns = {
        "per_document": document_novelty,
        "day_aggregated": two_sided_novelty,
        "daily_mean": daily_mean_novelty,
    }
    dates, values = series_fns[cfg.series_mode](signals)
    return dates, list(values)


def read_series_csv(path) -> List[float]:
    """Read ``t,value`` lines (no header) as written by ``simulate``."""
    series_path = Path(path)
    if not series_path.exists():
        raise FileNotFoundError(f"series not found: {series_path}")
    frame = pd.read_csv(series_path, header=None, names=["t", "value"])
    if frame.empty:
        raise NidError(f"series file {series_path} is empty")
    return frame.sort_values("t")["value"].astype(float).tolist()


def _detect_all(cfg: RunConfig) -> Dict[str, NidReport]:
    settings = cfg.sampler_settings()
    if cfg.series:
        values = read_series_csv(cfg.series)
        source = Path(cfg.series).stem
        dates = index_dates(len(values), date.fromisoformat(cfg.start_date))
        return {source: detect_source(dates, values, source, settings)}

    dists, _ = load_distributions(cfg)
    signals = source_signals(dists, cfg, day_aggregation=cfg.day_aggregation)

    def run(item):
        name, series = item
        dates, values = detection_series(series, cfg)
        return name, detect_source(dates, values, name, settings)

    return dict(_map_sources(run, sorted(signals.items()), cfg.jobs))


def _write_reports(reports: Dict[str, NidReport], out: Path):
    for name, report in sorted(reports.items()):
        report.write(out / f"report_{_safe_name(name)}.json")


def _print_detect_tables(reports: Dict[str, NidReport]):
    print("=" * 60)
    print("Estimated change points (94% HDI)" if reports else "No sources")
    print("=" * 60)
    columns = ["Source", "NID Start [HDI]", "NID End [HDI]", "NID"]
    rows = [reports[name].table_row() for name in sorted(reports)]
    widths = {c: max([len(c)] + [len(r[c]) for r in rows]) for c in columns}
    print("  ".join(c.ljust(widths[c]) for c in columns))
    for row in rows:
        print("  ".join(row[c].ljust(widths[c]) for c in columns))
    for name in sorted(reports):
        if not reports[name].converged:
            print(f"⚠️  {name}: not converged (see rhat in report)")

    print("\nSegment novelty means (94% HDI)")
    for name in sorted(reports):
        for seg in reports[name].segment_rows():
            lo, hi = seg["hdi"]
            print(f"   • {name} {seg['segment']:<4} {seg['mean']:.3f} [{lo:.3f}, {hi:.3f}]")


# ===== COMMANDS =====

def cmd_ingest(cfg: RunConfig):
    """Normalize a corpus, build the vocabulary and emit distributions."""
    if cfg.representation == "import":
        raise ConfigError("ingest needs a corpus input (representation tf or lda)")
    out = _output_dir(cfg)
    dists, vocab = load_distributions(cfg)
    atomic_write_text(out / "vocabulary.txt", vocab.to_lines())
    represent.emit_distributions(dists, out / "distributions.jsonl")
    cfg.write_resolved(out)
    print(f"✅ Ingested {len(dists)} documents, {len(vocab)} terms, {len(corpus.sources(dists))} source(s) -> {out}")


def cmd_signals(cfg: RunConfig):
    """Write signals_<source>.csv for every source."""
    out = _output_dir(cfg)
    dists, _ = load_distributions(cfg)
    signals = source_signals(dists, cfg, day_aggregation=cfg.day_aggregation)
    for name, series in sorted(signals.items()):
        series.write_csv(out / f"signals_{_safe_name(name)}.csv")
    cfg.write_resolved(out)
    print(f"✅ Signals written for {len(signals)} source(s) (w={cfg.w}) -> {out}")


def cmd_detect(cfg: RunConfig):
    """Fit the change-point model per source and classify NID support."""
    out = _output_dir(cfg)
    reports = _detect_all(cfg)
    _write_reports(reports, out)
    cfg.write_resolved(out)
    _print_detect_tables(reports)


def stored_report(cfg: RunConfig, name: str, out: Path) -> Optional[NidReport]:
    """A report from an earlier ``detect`` run, if it was produced with the current settings."""
    path = out / f"report_{_safe_name(name)}.json"
    if not path.exists():
        return None
    try:
        report = NidReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError:
        logger.warning("Ignoring %s: not a change-point report", path)
        return None
    found = dict(report.metadata, seed=report.seed)
    stale = sorted(key for key, value in cfg.report_fingerprint().items() if found.get(key) != value)
    if stale:
        logger.warning("Ignoring %s: written with different %s", path, ", ".join(stale))
        return None
    return report


def _boundaries(cfg: RunConfig, report: Optional[NidReport]) -> Tuple[date, date]:
    if cfg.tau1 and cfg.tau2:
        return date.fromisoformat(cfg.tau1), date.fromisoformat(cfg.tau2)
    return date.fromisoformat(report.tau1.date), date.fromisoformat(report.tau2.date)


def cmd_slopes(cfg: RunConfig):
    """Regress resonance on novelty before, during and after the change points."""
    if bool(cfg.tau1) != bool(cfg.tau2):
        raise ConfigError("give both --tau1 and --tau2, or neither")
    out = _output_dir(cfg)
    dists, _ = load_distributions(cfg)
    signals = source_signals(dists, cfg, day_aggregation=cfg.slope_signals == "daily")

    reports: Dict[str, NidReport] = {}
    if not (cfg.tau1 and cfg.tau2):
        reports = {n: r for n in signals if (r := stored_report(cfg, n, out)) is not None}
        missing = sorted(n for n in signals if n not in reports)
        if missing:
            logger.info("No usable report for %s; running detection", ", ".join(missing))
            detect_signals = source_signals(dists, cfg, day_aggregation=cfg.day_aggregation)
            settings = cfg.sampler_settings()

            def run(name):
                dates, values = detection_series(detect_signals[name], cfg)
                return name, detect_source(dates, values, name, settings)

            fresh = dict(_map_sources(run, missing, cfg.jobs))
            _write_reports(fresh, out)
            reports.update(fresh)

    rows = []
    for name, series in sorted(signals.items()):
        try:
            tau1, tau2 = _boundaries(cfg, reports.get(name))
            fits = period_slopes(series, tau1, tau2, alpha=cfg.slope_alpha)
            rows.extend(entry.model_dump(mode="json") for entry in slope_report(name, fits))
        except NidError as e:
            logger.warning("Slopes failed for '%s': %s", name, e)
            rows.append(slope_error(name, e).model_dump(mode="json"))

    write_json(out / "slopes.json", rows)
    write_json(out / "slopes.schema.json", slope_report_schema())
    cfg.write_resolved(out)

    print("=" * 60)
    print(f"N x R slopes ({100 * (1 - cfg.slope_alpha):.0f}% CI)")
    print("=" * 60)
    for row in rows:
        if "error" in row:
            print(f"❌ {row['source']}: {row['error']}")
        else:
            lo, hi = row["ci"]
            print(f"   • {row['source']} {row['period']:<4} {row['beta1']:.2f} [{lo:.2f}, {hi:.2f}] n={row['n']}")


def cmd_simulate(cfg: RunConfig, spec_path: str):
    """Generate a synthetic series or corpus from a JSON spec, plus its truth record."""
    path = Path(spec_path)
    if not path.exists():
        raise FileNotFoundError(f"spec not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"spec {path}: invalid JSON ({e.msg})")
    if not isinstance(data, dict):
        raise ConfigError(f"spec {path}: expected a JSON object")
    kind = data.pop("kind", None)
    out = _output_dir(cfg)

    if kind == "series":
        y, truth = gen_series(SynthSeriesSpec(**data))
        frame = pd.DataFrame({"t": range(len(y)), "value": y})
        write_frame_csv(out / "series.csv", frame, header=False)
        summary = f"T={truth.T}, tau={truth.tau_days}, mu={truth.mu}, sigma={truth.sigma}"
    elif kind == "corpus":
        docs, truth = gen_corpus(SynthCorpusSpec(**data))
        corpus.emit(docs, out / "corpus.jsonl")
        first, after = truth.event_dates
        summary = f"{len(docs)} documents, event {first} to {after} (exclusive), concentration {truth.event_concentration}"
    else:
        raise ConfigError(f"spec field 'kind' must be 'series' or 'corpus' (got {kind!r})")

    write_json(out / "truth.json", truth.to_dict())
    cfg.write_resolved(out)
    print(f"✅ Simulated {kind}: {summary} -> {out}")


# ===== ARGUMENTS =====

FLAG_FIELDS = {
    "input": "input", "series": "series", "representation": "representation",
    "stopwords": "stopwords_path", "lemmas": "lemma_path", "min_count": "min_count",
    "smoothing": "smoothing", "lda_topics": "lda_topics", "lda_alpha": "lda_alpha",
    "lda_beta": "lda_beta", "lda_iterations": "lda_iterations", "w": "w",
    "day_aggregation": "day_aggregation", "per_document": "per_document", "pooled": "pooled",
    "slope_signals": "slope_signals", "chains": "chains", "draws": "draws", "warmup": "warmup",
    "seed": "seed", "hdi_mass": "hdi_mass", "nid_threshold": "nid_threshold",
    "slope_alpha": "slope_alpha", "tau1": "tau1", "tau2": "tau2", "start_date": "start_date",
    "output_dir": "output_dir", "jobs": "jobs", "chain_jobs": "chain_jobs",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override it")
    common.add_argument("--output-dir", dest="output_dir", help="Output directory")
    common.add_argument("--log-level", dest="log_level", help="Log level (default $NIDWATCH_LOG_LEVEL or INFO)")
    common.add_argument("--input", help="Corpus JSONL (tf/lda) or distribution file (import)")
    common.add_argument("--representation", choices=["tf", "lda", "import"])
    common.add_argument("--stopwords", help="Stopword list, one token per line")
    common.add_argument("--lemmas", help="Lemma map TSV (surface<TAB>lemma)")
    common.add_argument("--min-count", dest="min_count", type=int)
    common.add_argument("--smoothing", type=float)
    common.add_argument("--lda-topics", dest="lda_topics", type=int)
    common.add_argument("--lda-alpha", dest="lda_alpha", type=float)
    common.add_argument("--lda-beta", dest="lda_beta", type=float)
    common.add_argument("--lda-iterations", dest="lda_iterations", type=int)
    common.add_argument("--w", type=int, help="Window size (default 7)")
    common.add_argument("--day-aggregation", dest="day_aggregation", action="store_true", default=None)
    common.add_argument("--per-document", dest="per_document", action="store_true", default=None)
    common.add_argument("--pooled", action="store_true", default=None)
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="Sources processed in parallel")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--chains", type=int)
    model.add_argument("--draws", type=int)
    model.add_argument("--warmup", type=int)
    model.add_argument("--chain-jobs", dest="chain_jobs", type=int, help="Chains sampled in parallel processes")
    model.add_argument("--hdi-mass", dest="hdi_mass", type=float)
    model.add_argument("--nid-threshold", dest="nid_threshold", type=float)
    model.add_argument("--start-date", dest="start_date", help="Date of index 0 for --series input")

    parser = argparse.ArgumentParser(
        description="nidwatch: novelty, resonance and change points in news streams",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    subparsers.add_parser("ingest", parents=[common], help="Build vocabulary and distributions")
    subparsers.add_parser("signals", parents=[common], help="Compute signals per source")

    detect_parser = subparsers.add_parser("detect", parents=[common, model], help="Detect change points")
    detect_parser.add_argument("--series", help="CSV of t,value novelty values")

    slopes_parser = subparsers.add_parser("slopes", parents=[common, model], help="Fit N x R slopes")
    slopes_parser.add_argument("--tau1", help="First boundary date (YYYY-MM-DD)")
    slopes_parser.add_argument("--tau2", help="Second boundary date (YYYY-MM-DD)")
    slopes_parser.add_argument("--slope-alpha", dest="slope_alpha", type=float)
    slopes_parser.add_argument("--slope-signals", dest="slope_signals", choices=["document", "daily"])

    simulate_parser = subparsers.add_parser("simulate", parents=[common], help="Generate synthetic data")
    simulate_parser.add_argument("--spec", required=True, help="Spec JSON with kind 'series' or 'corpus'")

    return parser


def _validation_message(e: ValidationError) -> str:
    first = e.errors()[0]
    field = ".".join(str(part) for part in first["loc"]) or "spec"
    return f"invalid spec field '{field}': {first['msg']}"


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI handler."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 1

    load_env()
    setup_logging(args.log_level or default_log_level())

    overrides = {field: getattr(args, flag, None) for flag, field in FLAG_FIELDS.items()}

    # Command mapping
    commands = {
        "ingest": cmd_ingest,
        "signals": cmd_signals,
        "detect": cmd_detect,
        "slopes": cmd_slopes,
    }

    try:
        cfg = resolve_config(args.config, overrides)
        if args.command == "simulate":
            cmd_simulate(cfg, args.spec)
        else:
            commands[args.command](cfg)
    except ValidationError as e:
        print(f"error: {_validation_message(e)}", file=sys.stderr)
        return 1
    except (NidError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
