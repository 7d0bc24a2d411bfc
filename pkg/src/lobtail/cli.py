"""Batch driver: per-day pipeline (ingest -> prepare -> fit -> diagnostics ->
goodness-of-fit) plus the synthetic-study entry points.

Usage:
    lobtail run --config run.json [--days 2010-01-04..2010-01-08] [--jobs N]
    lobtail simstudy {GevCompare,GpdCompare,KsCase} [--seed S] [--out DIR]

Exit codes: 0 success, 1 fatal (ingestion failure or zero successful fits),
2 configuration error.  Output trees are a pure function of (input files,
config, seed); re-runs are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import diagnostics, gof, report, simstudy
from .core import (
    EstimationError,
    Family,
    FitResult,
    GevParams,
    GpdParams,
    Method,
    SeriesKey,
    Side,
    StableParams,
)
from .gev import fit_gev_mixed, fit_gev_mle
from .gpd import fit_gpd_epm, fit_gpd_mle, fit_gpd_pickands
from .ingest import (
    EmptySeriesError,
    MarketHours,
    ThresholdError,
    TickFileError,
    block_maxima,
    parse_tick_file,
    pot_exceedances,
    subsample_last,
)
from .stable import fit_mcculloch

__all__ = ["RunConfig", "ConfigError", "run_pipeline", "run_simstudy", "main"]

ESTIMATOR_NAMES = (
    "stable_mcculloch",
    "gev_mle",
    "gev_mixed",
    "gpd_mle",
    "gpd_pickands",
    "gpd_epm",
)
_SIDES = {"bid": Side.BID, "ask": Side.ASK}


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


@dataclass(frozen=True)
class AssetConfig:
    name: str
    hours: MarketHours
    holidays: frozenset[datetime.date] = frozenset()


@dataclass
class RunConfig:
    """Pipeline configuration; JSON field names match the attributes."""

    input_dir: Path
    output_dir: Path
    assets: list[AssetConfig]
    resolutions_s: list[int] = field(default_factory=lambda: [10])
    levels: list[int] = field(default_factory=lambda: [1])
    sides: list[Side] = field(default_factory=lambda: [Side.BID, Side.ASK])
    block_len: int = 30
    pot_percentile: float = 0.8
    estimators: dict[str, bool] = field(
        default_factory=lambda: {name: True for name in ESTIMATOR_NAMES}
    )
    iqr_scale_stable: bool = False
    epm_start_percentile: float = 0.5
    seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        if not self.assets:
            raise ConfigError("config needs at least one asset")
        if not any(self.estimators.get(name, False) for name in ESTIMATOR_NAMES):
            raise ConfigError("config needs at least one enabled estimator")
        if any(r <= 0 for r in self.resolutions_s):
            raise ConfigError("resolutions must be positive")
        if not all(1 <= lev <= 5 for lev in self.levels):
            raise ConfigError("levels must lie in [1, 5]")
        if not 0.0 <= self.pot_percentile < 1.0:
            raise ConfigError("pot_percentile must lie in [0, 1)")
        if self.block_len < 1:
            raise ConfigError("block_len must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            assets = []
            for entry in raw["assets"]:
                hours = MarketHours(
                    open_s=int(entry["market_hours"]["open_s"]),
                    close_s=int(entry["market_hours"]["close_s"]),
                )
                holidays = frozenset(
                    datetime.date.fromisoformat(d) for d in entry.get("holidays", [])
                )
                assets.append(AssetConfig(name=entry["name"], hours=hours, holidays=holidays))
            estimators = {name: True for name in ESTIMATOR_NAMES}
            estimators.update(raw.get("estimators", {}))
            unknown = set(estimators) - set(ESTIMATOR_NAMES)
            if unknown:
                raise ConfigError(f"unknown estimators in config: {sorted(unknown)}")
            cfg = cls(
                input_dir=Path(raw["input_dir"]),
                output_dir=Path(raw["output_dir"]),
                assets=assets,
                resolutions_s=[int(r) for r in raw.get("resolutions_s", [10])],
                levels=[int(lv) for lv in raw.get("levels", [1])],
                sides=[_SIDES[s] for s in raw.get("sides", ["bid", "ask"])],
                block_len=int(raw.get("block_len", 30)),
                pot_percentile=float(raw.get("pot_percentile", 0.8)),
                estimators=estimators,
                iqr_scale_stable=bool(raw.get("iqr_scale_stable", False)),
                epm_start_percentile=float(raw.get("epm_start_percentile", 0.5)),
                seed=int(raw.get("seed", 0)),
                jobs=int(raw.get("jobs", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config {path}: {exc}") from exc
        cfg.validate()
        return cfg


# ---------------------------------------------------------------------------
# per-day unit of work
# ---------------------------------------------------------------------------


@dataclass
class _UnitResult:
    key: SeriesKey
    fits: list[FitResult] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def _unit_seed(cfg_seed: int, key: SeriesKey) -> int:
    # zlib.crc32 is stable across processes, unlike builtin str hashing
    digest = zlib.crc32(key.label().encode("utf-8"))
    return int(np.random.SeedSequence([cfg_seed, digest]).generate_state(1)[0])


def _fit_unit(series, cfg: RunConfig, out_dir: Path) -> _UnitResult:
    """Prepare, fit and report one (asset, day, side, level, resolution) series."""
    key = series.key
    unit = _UnitResult(key=key)
    label = f"{key.trading_day.isoformat()}_{key.side.value}_L{key.level}"
    res_dir = out_dir / key.asset / f"res{key.resolution_s}s"

    report.write_series_csv(res_dir / "series" / f"{label}.csv", series.timestamps, series.values)

    diag_dir = res_dir / "diagnostics" / label
    try:
        stats = diagnostics.descriptive(series.values)
        report.write_json(diag_dir / "descriptive.json", report.descriptive_to_dict(stats))
    except EstimationError as exc:
        unit.errors.append(f"descriptive: {exc}")
    try:
        me = diagnostics.mean_excess_curve(series.values)
        report.write_curve_csv(diag_dir / "curve_mean_excess.csv", me)
    except EstimationError as exc:
        unit.errors.append(f"mean_excess: {exc}")
    positive = series.values[series.values > 0]
    if positive.size >= 10:
        hill = diagnostics.hill_curve(positive, k_max=max(3, positive.size // 10))
        report.write_curve_csv(diag_dir / "curve_hill.csv", hill)
    qq = diagnostics.qq_exponential(series.values)
    report.write_curve_csv(diag_dir / "curve_qq_exponential.csv", qq)
    try:
        hurst, dfa_curve = diagnostics.hurst_dfa(series.values)
        report.write_curve_csv(diag_dir / "curve_dfa_loglog.csv", dfa_curve)
        report.write_json(diag_dir / "hurst.json", {"hurst": hurst, "n": len(series)})
    except EstimationError as exc:
        unit.errors.append(f"hurst_dfa: {exc}")

    prepared_dir = res_dir / "prepared"
    block_sample = pot_sample = None
    if cfg.estimators.get("gev_mle") or cfg.estimators.get("gev_mixed"):
        try:
            block_sample = block_maxima(series, cfg.block_len)
            report.write_prepared_sample(prepared_dir / f"{label}_blockmax.csv", block_sample)
        except ValueError as exc:
            unit.errors.append(f"block_maxima: {exc}")
    if cfg.estimators.get("gpd_mle") or cfg.estimators.get("gpd_pickands") \
            or cfg.estimators.get("gpd_epm"):
        try:
            pot_sample = pot_exceedances(series, cfg.pot_percentile)
            report.write_prepared_sample(prepared_dir / f"{label}_pot.csv", pot_sample)
        except (ThresholdError, EmptySeriesError) as exc:
            unit.errors.append(f"pot_exceedances: {exc}")

    def _try_fit(name, fn, data, gof_data=None):
        """Fit on data; evaluate GOF on gof_data (defaults to data).

        GPD fits carry mu = threshold, so their goodness-of-fit runs on the
        absolute exceedance values rather than the excesses.
        """
        if not cfg.estimators.get(name) or data is None:
            return
        probe = np.asarray(data if gof_data is None else gof_data, dtype=float)
        try:
            fit = fn(data)
        except EstimationError as exc:
            unit.errors.append(f"{name}: {exc}")
            return
        try:
            d, p = gof.ks_statistic(probe, gof.fit_cdf(fit))
            fit = _with_ks(fit, d, p)
        except (ValueError, ArithmeticError) as exc:
            fit = _with_note(fit, f"ks skipped: {exc}")
        unit.fits.append(fit)
        rows = gof.percentile_comparison(probe, gof.fit_cdf(fit))
        report.write_csv(
            res_dir / "gof" / f"{label}_{fit.family.value}_{fit.method.value}_percentiles.csv",
            ["p", "cdf_at_empirical_quantile"],
            rows,
        )

    _try_fit("stable_mcculloch",
             lambda d: fit_mcculloch(d, iqr_scale=cfg.iqr_scale_stable), series.values)
    if block_sample is not None:
        _try_fit("gev_mle", fit_gev_mle, block_sample.data)
        _try_fit("gev_mixed", fit_gev_mixed, block_sample.data)
    if pot_sample is not None:
        u = pot_sample.threshold
        absolute = pot_sample.data + u
        _try_fit("gpd_mle", lambda d: fit_gpd_mle(d, location=u),
                 pot_sample.data, gof_data=absolute)
        _try_fit("gpd_pickands", lambda d: fit_gpd_pickands(d, location=u),
                 pot_sample.data, gof_data=absolute)
        _try_fit(
            "gpd_epm",
            lambda d: fit_gpd_epm(
                d, start_percentile=cfg.epm_start_percentile, location=u,
                seed=_unit_seed(cfg.seed, key),
            ),
            pot_sample.data,
            gof_data=absolute,
        )

    report.write_json(
        res_dir / "fits" / f"{label}.json",
        {"series": key.label(), "fits": [report.fit_to_dict(f) for f in unit.fits],
         "errors": unit.errors},
    )
    return unit


def _with_ks(fit: FitResult, d: float, p: float) -> FitResult:
    return dataclasses.replace(fit, ks_statistic=d, ks_pvalue=p)


def _with_note(fit: FitResult, note: str) -> FitResult:
    return dataclasses.replace(fit, notes=fit.notes + (note,))


def _discover_days(cfg: RunConfig, asset: AssetConfig,
                   day_range: Optional[tuple[datetime.date, datetime.date]]) -> list[datetime.date]:
    asset_dir = cfg.input_dir / asset.name
    days = []
    for path in sorted(asset_dir.glob("*.csv")):
        try:
            day = datetime.date.fromisoformat(path.stem)
        except ValueError:
            continue
        if day in asset.holidays:
            continue
        if day_range and not day_range[0] <= day <= day_range[1]:
            continue
        days.append(day)
    return days


def run_pipeline(cfg: RunConfig,
                 day_range: Optional[tuple[datetime.date, datetime.date]] = None) -> int:
    """Run the batch pipeline; returns the process exit code."""
    cfg.validate()
    if not cfg.input_dir.is_dir():
        print(f"fatal: input directory {cfg.input_dir} does not exist", file=sys.stderr)
        return 1
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    fatal_ingest = False
    total_fits = 0
    day_summaries = []
    param_rows: dict[tuple[str, int, Family, Method], dict] = {}

    for asset in cfg.assets:
        days = _discover_days(cfg, asset, day_range)
        if not days:
            day_summaries.append({"asset": asset.name, "error": "no input days"})
            continue
        all_series: list = []

        def _process_day(day: datetime.date):
            path = cfg.input_dir / asset.name / f"{day.isoformat()}.csv"
            try:
                ticks, parse_report = parse_tick_file(path)
            except TickFileError as exc:
                return day, None, str(exc)
            units = []
            for res in cfg.resolutions_s:
                for side in cfg.sides:
                    for level in cfg.levels:
                        key = SeriesKey(asset=asset.name, trading_day=day, side=side,
                                        level=level, resolution_s=res)
                        try:
                            series = subsample_last(ticks, key, asset.hours)
                        except EmptySeriesError as exc:
                            units.append((key, None, f"subsample: {exc}"))
                            continue
                        units.append((key, series, None))
            return day, units, parse_report

        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            day_results = list(pool.map(_process_day, days))

        fitted_units: list[_UnitResult] = []
        for day, units, info in day_results:
            if units is None:
                fatal_ingest = True
                day_summaries.append({"asset": asset.name, "day": day.isoformat(),
                                      "error": info})
                continue
            day_errors = []
            for key, series, err in units:
                if series is None:
                    day_errors.append(err)
                    continue
                all_series.append(series)
                unit = _fit_unit(series, cfg, out_dir)
                fitted_units.append(unit)
                total_fits += len(unit.fits)
                day_errors.extend(f"{key.label()}: {e}" for e in unit.errors)
            day_summaries.append({
                "asset": asset.name,
                "day": day.isoformat(),
                "skipped_rows": info.skipped,
                "errors": day_errors,
            })

        # year-level parameter trajectories: one row per day, columns per
        # (parameter, side, level)
        for unit in fitted_units:
            for fit in unit.fits:
                key = unit.key
                table_key = (key.asset, key.resolution_s, fit.family, fit.method)
                table = param_rows.setdefault(table_key, {})
                row = table.setdefault(key.trading_day, {})
                for pname, val in fit.params_dict().items():
                    row[f"{pname}_{key.side.value}_L{key.level}"] = val
                row[f"ks_{key.side.value}_L{key.level}"] = fit.ks_statistic

        # hourly median heat maps per (side, level) for each resolution
        for res in cfg.resolutions_s:
            subset = [s for s in all_series if s.key.resolution_s == res]
            if not subset:
                continue
            matrices = diagnostics.hourly_median_matrix(subset)
            for (side, level), hm in sorted(
                matrices.items(), key=lambda kv: (kv[0][0].value, kv[0][1])
            ):
                report.write_heatmap_csv(
                    out_dir / asset.name / f"res{res}s"
                    / f"heatmap_{asset.name}_{side.value}_L{level}.csv",
                    hm,
                )

    for (asset_name, res, family, method), table in sorted(
        param_rows.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].value, kv[0][3].value)
    ):
        days_sorted = sorted(table)
        columns = sorted({c for row in table.values() for c in row})
        rows = [[d.isoformat()] + [table[d].get(c) for c in columns] for d in days_sorted]
        report.write_csv(
            out_dir / asset_name / f"res{res}s" / f"params_{family.value}_{method.value}.csv",
            ["day"] + columns,
            rows,
        )

    report.write_json(
        out_dir / "summary.json",
        {
            "schema_version": report.SCHEMA_VERSION,
            "seed": cfg.seed,
            "total_fits": total_fits,
            "days": day_summaries,
        },
    )
    if fatal_ingest or total_fits == 0:
        return 1
    return 0


# ---------------------------------------------------------------------------
# simulation studies
# ---------------------------------------------------------------------------

STUDY_NAMES = ("GevCompare", "GpdCompare", "KsCase")


def run_simstudy(study: str, out_dir: Path, seed: int = 0,
                 replicates: int = 20) -> int:
    """Run one named synthetic study and write its tables plus a check summary."""
    if study not in STUDY_NAMES:
        print(f"usage error: unknown study {study!r}; choose from {STUDY_NAMES}",
              file=sys.stderr)
        return 2
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    if study == "GevCompare":
        for g in (-0.3, 0.0, 0.2, 0.5):
            res = simstudy.gev_method_comparison(
                GevParams(mu=0.0, sigma=1.0, gamma=g),
                sample_sizes=(50, 10000), replicates=replicates, seed=seed,
            )
            results.append((f"gamma_{g:+.1f}", res))
    elif study == "GpdCompare":
        for g in (-0.3, 0.0, 0.2, 0.5):
            res = simstudy.gpd_method_comparison(
                GpdParams(gamma=g, sigma=1.0, mu=0.0),
                n=500, replicates=replicates,
                epm_start_percentiles=(0.0, 0.5, 0.75), seed=seed,
            )
            results.append((f"gamma_{g:+.1f}", res))
    else:
        res = simstudy.ks_case_study(
            StableParams(alpha=1.7, beta=0.5, gamma=1.0, delta=0.0),
            n_full=3888, n_sub=200, replicates=replicates, seed=seed,
        )
        results.append(("default", res))

    checks_all = {}
    for variant, res in results:
        vdir = out_dir / study / variant
        if res.estimates:
            header = list(res.estimates[0].keys())
            report.write_csv(vdir / "estimates.csv", header,
                             [[row.get(h) for h in header] for row in res.estimates])
        else:
            report.write_csv(vdir / "estimates.csv", ["empty"], [])
        if res.summary:
            header = list(res.summary[0].keys())
            report.write_csv(vdir / "summary.csv", header,
                             [[row.get(h) for h in header] for row in res.summary])
        checks_all[variant] = res.checks
    report.write_json(out_dir / study / "checks.json",
                      {"schema_version": report.SCHEMA_VERSION, "seed": seed,
                       "study": study, "checks": checks_all})
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _parse_day_range(text: str) -> tuple[datetime.date, datetime.date]:
    try:
        a, b = text.split("..")
        lo, hi = datetime.date.fromisoformat(a), datetime.date.fromisoformat(b)
    except ValueError as exc:
        raise ConfigError(f"bad --days range {text!r}; expected A..B ISO dates") from exc
    if lo > hi:
        raise ConfigError(f"--days range {text!r} is reversed")
    return lo, hi


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lobtail",
                                     description="volume-profile tail analytics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the batch pipeline")
    p_run.add_argument("--config", required=True, help="JSON run configuration")
    p_run.add_argument("--days", default=None, help="inclusive day range A..B (ISO dates)")
    p_run.add_argument("--jobs", type=int, default=None, help="worker pool size")

    p_sim = sub.add_parser("simstudy", help="run a synthetic estimator study")
    p_sim.add_argument("study", choices=STUDY_NAMES)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default="simstudy_out")
    p_sim.add_argument("--replicates", type=int, default=20)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = RunConfig.from_json(args.config)
            if args.jobs is not None:
                if args.jobs < 1:
                    raise ConfigError("--jobs must be >= 1")
                cfg.jobs = args.jobs
            day_range = _parse_day_range(args.days) if args.days else None
            return run_pipeline(cfg, day_range)
        return run_simstudy(args.study, Path(args.out), seed=args.seed,
                            replicates=args.replicates)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
