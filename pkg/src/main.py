"""
Risk Attitude - Command-Line Entry Point

Batch front end for market risk-attitude extraction:

  extract     CSV -> moments, ARA/RRA series (by date and by wealth), trend diagnostics
  portfolio   CSV -> risky-asset weights per utility family
  validate    synthetic property suites, no input files needed
  synth       write a synthetic market CSV

Every failure prints one line ``ERROR <code>: <message>`` on stderr and
exits 1 (input), 2 (numerical degeneracy) or 3 (internal).

Usage:
  riskattitude extract --input sp500.csv --scheme rolling:60 --tau 0.2
  python -m src validate --profile strict
"""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional

from . import __version__
from .core.errors import ConfigError, InsufficientData, ParseError, RiskAttitudeError, UsageError
from .core.estimation import (
    MomentSeries,
    YearMonth,
    diagnose,
    estimate_moments,
    restrict_dates,
    risk_aversion_series,
)
from .core.portfolio import DatedWeight, weight_ratio_summary, weight_series
from .core.synthetic import log_agent_market, regime_break_market
from .core.utility import Family, UtilitySpec
from .utils.config import PROFILES, AnalysisConfig, RunConfig
from .utils.data_io import (
    MarketDataset,
    apply_exclusions,
    diagnostics_table,
    emit_plot_data,
    load_market_csv,
    moments_table,
    risk_aversion_table,
    weights_table,
    write_market_csv,
    write_table,
)
from .utils.perf_monitor import PerfMonitor
from .validation import run_suites

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of printing usage and exiting 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _year_month(text: str) -> YearMonth:
    try:
        return YearMonth.parse(text)
    except ParseError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _common_parent() -> argparse.ArgumentParser:
    parent = _ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, default=None,
                        help="JSON settings file (default: ~/.config/riskattitude/settings.json)")
    parent.add_argument("--verbose", action="store_true", help="Log progress at INFO")
    parent.add_argument("--debug", action="store_true", help="Log details and stage timings at DEBUG")
    return parent


def _data_parent() -> argparse.ArgumentParser:
    parent = _ArgumentParser(add_help=False)
    parent.add_argument("--input", action="append", type=Path, default=[], metavar="PATH",
                        help="Market CSV (repeatable, one per index)")
    parent.add_argument("--label", default=None, help="Dataset label (default: file stem upper-cased)")
    parent.add_argument("--scheme", default=None, help="expanding:<min_obs> or rolling:<M>")
    parent.add_argument("--exclude", action="append", default=None, metavar="YYYY-MM..YYYY-MM",
                        help="Drop an inclusive date range before estimation (repeatable)")
    parent.add_argument("--rf-compounding", choices=("geometric", "simple"), default=None)
    parent.add_argument("--percent", action="store_true", default=None,
                        help="Returns and yields in the file are percentages")
    parent.add_argument("--start", type=_year_month, default=None, help="First emitted date (YYYY-MM)")
    parent.add_argument("--end", type=_year_month, default=None, help="Last emitted date (YYYY-MM)")
    parent.add_argument("--out", default=None, help="Output directory")
    parent.add_argument("--format", choices=("csv", "json"), default=None)
    parent.add_argument("--jobs", type=int, default=None, help="Indices processed in parallel")
    return parent


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="riskattitude",
        description="Risk Attitude - Arrow-Pratt risk measures from market data",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    common, data = _common_parent(), _data_parent()

    p = sub.add_parser("extract", parents=[common, data], help="Extract ARA/RRA series and trends")
    p.add_argument("--tau", type=float, default=None, help="Dead-band for the Constant label (default 0.2)")
    p.add_argument("--split-at", type=float, default=None, metavar="WEALTH",
                   help="Also report RRA correlations below/above this market cap")

    p = sub.add_parser("portfolio", parents=[common, data], help="Risky-asset weights per utility family")
    p.add_argument("--families", nargs="+", default=None, metavar="FAMILY",
                   help="Utility families, e.g. quadratic:b=0.2 log sqrt exp")
    p.add_argument("--clamp", default=None, metavar="LO,HI", help="Clamp emitted weights for presentation")

    p = sub.add_parser("validate", parents=[common], help="Run the synthetic property suites")
    p.add_argument("--profile", choices=tuple(PROFILES), default=None)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--suite", action="append", default=None, help="Run only this suite (repeatable)")
    p.add_argument("--search-bracket", default=None, metavar="LO,HI",
                   help="w_s interval searched by the numeric portfolio oracle (default -20,20; pass a negative LO as --search-bracket=-5,5)")

    p = sub.add_parser("synth", parents=[common], help="Write a synthetic market CSV")
    p.add_argument("--kind", choices=("log-agent", "regime-break"), default="log-agent")
    p.add_argument("--out", type=Path, required=True, metavar="PATH")
    p.add_argument("--periods", type=int, default=360, help="log-agent market length")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--cut", type=float, default=27.0, help="regime-break wealth cut")
    return parser


def _parse_pair(flag: str, text: str) -> List[float]:
    parts = text.split(",")
    try:
        lo, hi = (float(x) for x in parts)
    except ValueError:
        raise ConfigError(f"{flag} expects LO,HI, got '{text}'") from None
    return [lo, hi]


def _resolve_settings(args: argparse.Namespace) -> Dict[str, Any]:
    """DEFAULT_CONFIG < settings file < flags."""
    config = AnalysisConfig(args.config, required=args.config is not None)
    flags: Dict[str, Any] = {
        "scheme": getattr(args, "scheme", None),
        "rf_compounding": getattr(args, "rf_compounding", None),
        "tau": getattr(args, "tau", None),
        "split_at": getattr(args, "split_at", None),
        "families": getattr(args, "families", None),
        "out_dir": getattr(args, "out", None),
        "format": getattr(args, "format", None),
        "jobs": getattr(args, "jobs", None),
        "percent": getattr(args, "percent", None),
        "exclusions": getattr(args, "exclude", None),
        "profile": getattr(args, "profile", None),
    }
    for flag, key in (("--clamp", "clamp"), ("--search-bracket", "search_bracket")):
        if getattr(args, key, None) is not None:
            flags[key] = _parse_pair(flag, getattr(args, key))
    given = {k: v for k, v in flags.items() if v is not None}
    validated, errors = AnalysisConfig.validate_update(given)
    if errors:
        raise ConfigError("; ".join(errors))
    config.update(validated)
    return config.to_dict()


def _run_config(args: argparse.Namespace, settings: Dict[str, Any]) -> RunConfig:
    return RunConfig.from_settings(
        settings, tuple(args.input),
        start=args.start, end=args.end, label=args.label,
    )


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _load(path: Path, run: RunConfig, monitor: PerfMonitor) -> MarketDataset:
    with monitor.time_stage("load") as ctx:
        ds = load_market_csv(path, run.schema, run.label, run.exclusions)
        ds = apply_exclusions(ds)
        ctx.items = len(ds)
    return ds


def _moments(ds: MarketDataset, run: RunConfig, monitor: PerfMonitor) -> MomentSeries:
    with monitor.time_stage("estimate") as ctx:
        series = estimate_moments(ds.returns(), run.scheme)
        ctx.items = len(series.entries)
    return series


def _window(series: MomentSeries, run: RunConfig) -> MomentSeries:
    kept = restrict_dates(series.entries, run.start, run.end)
    if not kept:
        raise InsufficientData(f"no estimates between {run.start or 'start'} and {run.end or 'end'}")
    return MomentSeries(tuple(kept), series.scheme)


def _out_path(run: RunConfig, label: str, name: str) -> Path:
    return run.out_dir / f"{label}_{name}.{run.fmt}"


def extract_index(path: Path, run: RunConfig, monitor: PerfMonitor) -> List[str]:
    """Extraction for one index. Returns its stdout lines."""
    ds = _load(path, run, monitor)
    series = _window(_moments(ds, run, monitor), run)
    with monitor.time_stage("extract") as ctx:
        points = risk_aversion_series(series, ds.records, run.rf_compounding, run.periods_per_year)
        ctx.items = len(points)
    with monitor.time_stage("diagnose"):
        report = diagnose(points, run.tau, run.split_at)

    label = ds.index_name
    with monitor.time_stage("write"):
        ra = risk_aversion_table(points, run.schema.market_cap)
        write_table(moments_table(series), _out_path(run, label, "moments"), run.fmt)
        write_table(emit_plot_data(ra, "date"), _out_path(run, label, "risk_aversion_date"), run.fmt)
        write_table(emit_plot_data(ra, "wealth_sorted"), _out_path(run, label, "risk_aversion_wealth"), run.fmt)
        write_table(diagnostics_table(report), _out_path(run, label, "diagnostics"), run.fmt)

    if report.negative_ara:
        logger.warning("%s: %d negative ARA value(s)", label, report.negative_ara)
    return [
        f"{label} {row.series} corr={row.corr:.4f} label={row.label.value} tau={row.tau:g}"
        for row in report.rows
    ]


def _reference_family(families: List[UtilitySpec]) -> UtilitySpec:
    for u in families:
        if u.family == Family.LOG:
            return u
    return families[0]


def portfolio_index(path: Path, run: RunConfig, monitor: PerfMonitor) -> List[str]:
    """Weight series for one index. Returns its stdout lines."""
    if not run.families:
        raise ConfigError("portfolio needs at least one utility family")
    ds = _load(path, run, monitor)
    series = _window(_moments(ds, run, monitor), run)
    rf = ds.rf_per_period(run.rf_compounding, run.periods_per_year)

    with monitor.time_stage("extract"):
        by_family = {u: weight_series(u, series, rf) for u in run.families}
    rows: List[DatedWeight] = []
    for i in range(len(series.entries)):
        rows.extend(by_family[u][i] for u in run.families)

    label = ds.index_name
    if run.clamp is not None:
        clipped = sum(1 for w in rows if not run.clamp[0] <= w.w_s <= run.clamp[1])
        if clipped:
            logger.warning("%s: %d weight(s) clamped to [%g, %g]", label, clipped, *run.clamp)
    with monitor.time_stage("write"):
        write_table(weights_table(rows, run.clamp), _out_path(run, label, "weights"), run.fmt)

    lines = []
    for u in run.families:
        values = [w.w_s for w in by_family[u]]
        lines.append(f"{label} weights {u} mean={sum(values) / len(values):.4f}")
    ref = _reference_family(list(run.families))
    for u in run.families:
        if u == ref:
            continue
        s = weight_ratio_summary(by_family[u], by_family[ref])
        lines.append(f"{label} ratio {u}/{ref} mean={s.mean:.4f} min={s.min:.4f} max={s.max:.4f}")
    return lines


def _run_indices(
    worker: Callable[[Path, RunConfig, PerfMonitor], List[str]],
    run: RunConfig,
    monitor: PerfMonitor,
) -> int:
    if run.jobs > 1 and len(run.inputs) > 1:
        with ThreadPoolExecutor(max_workers=run.jobs) as pool:
            futures = [pool.submit(worker, p, run, monitor) for p in run.inputs]
            outputs = [f.result() for f in futures]
    else:
        outputs = [worker(p, run, monitor) for p in run.inputs]
    # stdout only after every index succeeded, in input order
    for lines in outputs:
        for line in lines:
            print(line)
    logger.debug("stage timings: %s", monitor.get_stats()["stages"])
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    settings = _resolve_settings(args)
    return _run_indices(extract_index, _run_config(args, settings), PerfMonitor())


def cmd_portfolio(args: argparse.Namespace) -> int:
    settings = _resolve_settings(args)
    return _run_indices(portfolio_index, _run_config(args, settings), PerfMonitor())


def cmd_validate(args: argparse.Namespace) -> int:
    settings = _resolve_settings(args)
    profile = settings["profile"]
    results = run_suites(profile, args.seed, args.suite, search_bracket=settings["search_bracket"])
    for r in results:
        print(r.line())
    failures = sum(1 for r in results if not r.passed)
    print(f"{len(results) - failures}/{len(results)} suites passed (profile {profile}, seed {args.seed})")
    return min(failures, 125)


def cmd_synth(args: argparse.Namespace) -> int:
    if args.kind == "log-agent":
        ds = log_agent_market(n=args.periods, seed=args.seed)
    else:
        ds = regime_break_market(cut=args.cut, seed=args.seed)
    out = write_market_csv(ds, args.out)
    print(f"{ds.index_name} {len(ds)} periods -> {out}")
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "extract": cmd_extract,
    "portfolio": cmd_portfolio,
    "validate": cmd_validate,
    "synth": cmd_synth,
}


def _one_line(text: str) -> str:
    return " ".join(text.split())


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point. Returns the process exit status."""
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as e:
        print(f"ERROR {e.code}: {_one_line(str(e))}", file=sys.stderr)
        return e.exit_code

    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)

    try:
        return COMMANDS[args.command](args)
    except RiskAttitudeError as e:
        print(f"ERROR {e.code}: {_one_line(str(e))}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.debug("unhandled error", exc_info=True)
        print(f"ERROR INTERNAL: {type(e).__name__}: {_one_line(str(e))}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
