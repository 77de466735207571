"""Command-line interface: fit observed series, simulate data, forecast.

Every command writes deterministic output: identical inputs, flags and
seeds reproduce byte-identical files.  Each run emits a JSON manifest
(command, input digests, effective configuration, artifact version) next
to its outputs; the fit report additionally embeds the manifest.  The
manifest's timestamp field is populated from the SOURCE_DATE_EPOCH
environment variable when set and is the literal "unset" otherwise, so
wall-clock time never leaks into outputs.

Exit codes: 0 success, 2 input error, 3 fit failure, 4 flag validation.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    ReportConfig,
    _forecast_science_only,
    build_report,
    forecast as run_forecast,
    sample_curves,
)
from .fit import (
    FORWARD_BIN,
    FORWARD_MIDPOINT,
    MODE_INDEPENDENT,
    MODE_JOINT,
    DegenerateFit,
    FitConfig,
    FitResult,
    fit_joint,
    fit_science,
)
from .model import HypeParams, ScienceParams, TechParams
from .series import SeriesError, YearSeries, normalize_pair, parse_csv, serialize_csv
from .synth import NOISE_KINDS, DegenerateRange, NoiseSpec, generate

__all__ = ["main", "read_report_params"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_FLAGS = 4

REPORT_SCHEMA = "hypecurve-report/1"
MANIFEST_SCHEMA = "hypecurve-manifest/1"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the documented code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return "unset"
    dt = datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


def _manifest(command: str, inputs: list[Path], config: dict) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "artifact_version": __version__,
        "command": command,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "config": config,
        "timestamp": _timestamp(),
    }


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write(text)


def _write_manifest(path: Path, manifest: dict, outputs: list[Path]) -> None:
    manifest = dict(manifest)
    manifest["outputs"] = [{"path": str(p), "sha256": _sha256(p)} for p in outputs]
    _write_text(path, json.dumps(manifest, indent=2) + "\n")


def _positive(parser: _Parser, name: str, value: float) -> float:
    if not (math.isfinite(value) and value > 0):
        parser.error(f"{name} must be positive and finite, got {value}")
    return value


def _params_from_flags(parser: _Parser, args) -> HypeParams:
    return HypeParams(
        ScienceParams(
            _positive(parser, "--k", args.k),
            _positive(parser, "--r", args.r),
            args.t0,
        ),
        TechParams(_positive(parser, "--p", args.p), args.tstar),
    )


def _manifest_lines(manifest: dict) -> list[str]:
    lines = ["[manifest]"]
    lines.append(f"artifact_version = {manifest['artifact_version']}")
    lines.append(f"timestamp = {manifest['timestamp']}")
    for item in manifest["inputs"]:
        lines.append(f"input = {item['path']}")
        lines.append(f"input.sha256 = {item['sha256']}")
    for key in sorted(manifest["config"]):
        lines.append(f"config.{key} = {manifest['config'][key]}")
    return lines


def _format_report(fit: FitResult, report, manifest: dict) -> str:
    lines = [f"schema = {REPORT_SCHEMA}", f"command = {manifest['command']}", ""]
    lines.extend(_manifest_lines(manifest))
    lines.append("")

    lines.append("[params]")
    params = fit.params
    if isinstance(params, HypeParams):
        values = [("k", params.k), ("r", params.r), ("t0", params.t0),
                  ("p", params.p), ("tstar", params.tstar)]
    else:
        values = [("k", params.k), ("r", params.r), ("t0", params.t0)]
    for name, value in values:
        lines.append(f"{name} = {value:.17g}")
    lines.append("")

    lines.append("[fit]")
    lines.append(f"converged = {str(fit.converged).lower()}")
    lines.append(f"sse = {fit.sse:.12g}")
    lines.append(f"rmse = {fit.rmse:.12g}")
    lines.append(f"r_squared = {fit.r_squared:.12g}")
    lines.append(f"n_points = {fit.n_points}")
    lines.append(f"best_start_index = {fit.best_start_index}")
    lines.append("")

    lines.append("[report]")
    lines.append(f"epsilon = {report.epsilon:.12g}")
    lines.append(f"pub_peak_year = {report.pub_peak_year:.12g}")
    lines.append(f"pub_peak_rate = {report.pub_peak_rate:.12g}")
    lines.append(f"pub_trigger_year = {report.pub_trigger_year:.12g}")
    if report.pat_trigger_year is not None:
        lines.append(f"pat_trigger_year = {report.pat_trigger_year:.12g}")
        lines.append(f"delay_years = {report.delay_years:.12g}")
        lines.append(f"patent_plateau = {report.patent_plateau:.12g}")
        if report.dip is not None:
            lines.append(f"dip_year = {report.dip.year:.12g}")
            lines.append(f"dip_depth = {report.dip.depth:.12g}")
        else:
            lines.append("dip = none")
    lines.append("")

    lines.append("[forecast]")
    lines.append("year,pub_rate,pat_rate,hype,peak_ratio")
    for row in report.forecast:
        lines.append(
            f"{row.year},{row.pub_rate:.12g},{row.pat_rate:.12g},"
            f"{row.hype:.12g},{row.peak_ratio:.12g}"
        )
    lines.append("")

    lines.append("[residuals]")
    lines.append("series,year,residual")
    for label, year, resid in fit.residuals:
        lines.append(f"{label},{year},{resid:.12g}")

    all_warnings = list(fit.warnings)
    if all_warnings:
        lines.append("")
        lines.append("[warnings]")
        lines.extend(all_warnings)
    return "\n".join(lines) + "\n"


def read_report_params(path) -> HypeParams | ScienceParams:
    """Recover the fitted parameters from a report document."""
    values: dict[str, float] = {}
    in_params = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line.startswith("["):
            in_params = line == "[params]"
            continue
        if in_params and "=" in line:
            name, _, raw = line.partition("=")
            values[name.strip()] = float(raw.strip())
    if not {"k", "r", "t0"} <= set(values):
        raise ValueError(f"no parameter section found in {path}")
    science = ScienceParams(values["k"], values["r"], values["t0"])
    if "p" in values and "tstar" in values:
        return HypeParams(science, TechParams(values["p"], values["tstar"]))
    return science


def _forecast_csv(rows) -> str:
    lines = ["year,pub_rate,pat_rate,hype,peak_ratio"]
    for row in rows:
        lines.append(
            f"{row.year},{row.pub_rate:.12g},{row.pat_rate:.12g},"
            f"{row.hype:.12g},{row.peak_ratio:.12g}"
        )
    return "\n".join(lines) + "\n"


# --- commands ---------------------------------------------------------------


def _cmd_fit(parser: _Parser, args) -> int:
    pub_path = Path(args.publications)
    pat_path = Path(args.patents) if args.patents else None
    out_dir = Path(args.out_dir)

    def _load(path: Path, label: str) -> YearSeries:
        return parse_csv(path.read_text(encoding="utf-8"), label=label)

    try:
        pub = _load(pub_path, "publications")
    except (OSError, SeriesError) as exc:
        print(f"input error in {pub_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    pat = None
    if pat_path:
        try:
            pat = _load(pat_path, "patents")
        except (OSError, SeriesError) as exc:
            print(f"input error in {pat_path}: {exc}", file=sys.stderr)
            return EXIT_INPUT

    cfg = FitConfig(
        mode=args.mode,
        forward=args.forward,
        starts=args.starts,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
    )
    config_dict = {
        "mode": cfg.mode,
        "forward": cfg.forward,
        "starts": cfg.starts,
        "max_iters": cfg.max_iters,
        "tol": cfg.tol,
        "seed": cfg.seed,
        "epsilon": args.epsilon,
        "horizon_years": args.horizon,
        "objective": "least_squares",
        "source_averaging": "per-year",
    }
    inputs = [pub_path] + ([pat_path] if pat_path else [])
    manifest = _manifest("fit", inputs, config_dict)

    try:
        fit = fit_joint(pub, pat, cfg) if pat is not None else fit_science(pub, cfg)
        if not fit.converged:
            print("fit failure: optimizer did not converge", file=sys.stderr)
            return EXIT_FIT
        report = build_report(fit, ReportConfig(epsilon=args.epsilon, horizon_years=args.horizon))
    except DegenerateFit as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT

    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []

    report_path = out_dir / "report.txt"
    _write_text(report_path, _format_report(fit, report, manifest))
    outputs.append(report_path)

    t_end = max(pub.last_year, pat.last_year if pat else pub.last_year) + args.horizon
    curves = sample_curves(fit.params, float(pub.first_year), float(t_end), step=0.1)
    curves_path = out_dir / "curves.csv"
    _write_text(curves_path, curves.to_csv_text())
    outputs.append(curves_path)

    if pat is not None:
        normalized = normalize_pair(pub, pat)
        norm_pub_path = out_dir / "normalized_publications.csv"
        norm_pat_path = out_dir / "normalized_patents.csv"
        _write_text(norm_pub_path, serialize_csv(normalized.publications))
        _write_text(norm_pat_path, serialize_csv(normalized.patents))
        outputs.extend([norm_pub_path, norm_pat_path])
    else:
        scale = pub.max_count
        if scale > 0:
            scaled = YearSeries(pub.label, pub.years, tuple(c / scale for c in pub.counts))
            norm_pub_path = out_dir / "normalized_publications.csv"
            _write_text(norm_pub_path, serialize_csv(scaled))
            outputs.append(norm_pub_path)

    _write_manifest(out_dir / "fit_manifest.json", manifest, outputs)
    print(f"report written to {report_path}")
    return EXIT_OK


def _cmd_simulate(parser: _Parser, args) -> int:
    hp = _params_from_flags(parser, args)
    if not args.to > args.start + 2:
        parser.error(f"--to must exceed --from by more than 2, got {args.start}..{args.to}")
    if args.noise == "gaussian" and args.sigma < 0:
        parser.error(f"--sigma must be >= 0, got {args.sigma}")

    noise = NoiseSpec(kind=args.noise, sigma=args.sigma, seed=args.seed)
    try:
        pub, pat = generate(hp, args.start, args.to, noise)
    except DegenerateRange as exc:
        parser.error(str(exc))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pub_path = Path(args.pub_out) if args.pub_out else out_dir / "publications.csv"
    pat_path = Path(args.pat_out) if args.pat_out else out_dir / "patents.csv"
    _write_text(pub_path, serialize_csv(pub))
    _write_text(pat_path, serialize_csv(pat))

    config_dict = {
        "k": hp.k,
        "r": hp.r,
        "t0": hp.t0,
        "p": hp.p,
        "tstar": hp.tstar,
        "from": args.start,
        "to": args.to,
        "noise": args.noise,
        "sigma": args.sigma,
        "seed": args.seed,
        "rng": "numpy-pcg64",
    }
    manifest = _manifest("simulate", [], config_dict)
    _write_manifest(out_dir / "simulate_manifest.json", manifest, [pub_path, pat_path])
    manifest["outputs"] = [str(pub_path), str(pat_path)]
    print(json.dumps(manifest, indent=2))
    return EXIT_OK


def _cmd_forecast(parser: _Parser, args) -> int:
    if args.report:
        try:
            params = read_report_params(args.report)
        except OSError as exc:
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        except (ValueError, KeyError) as exc:
            print(f"input error: invalid report file: {exc}", file=sys.stderr)
            return EXIT_INPUT
        inputs = [Path(args.report)]
    else:
        missing = [n for n in ("k", "r", "t0", "p", "tstar") if getattr(args, n) is None]
        if missing:
            parser.error(
                "either --report or all of --k --r --t0 --p --tstar are required "
                f"(missing: {', '.join('--' + n for n in missing)})"
            )
        params = _params_from_flags(parser, args)
        inputs = []

    if args.horizon < 0:
        parser.error(f"--horizon must be >= 0, got {args.horizon}")

    science = params.science if isinstance(params, HypeParams) else params
    from_year = args.start if args.start is not None else int(round(science.t0))

    if isinstance(params, HypeParams):
        rows = run_forecast(params, from_year, args.horizon)
    else:
        rows = _forecast_science_only(science, from_year, args.horizon)

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_text(out_path, _forecast_csv(rows))

    config_dict = {
        "k": science.k,
        "r": science.r,
        "t0": science.t0,
        "from": from_year,
        "horizon": args.horizon,
    }
    if isinstance(params, HypeParams):
        config_dict["p"] = params.p
        config_dict["tstar"] = params.tstar
    manifest = _manifest("forecast", inputs, config_dict)
    _write_manifest(out_path.parent / "forecast_manifest.json", manifest, [out_path])

    below = next((row.year for row in rows if row.peak_ratio < 0.5), None)
    if below is not None:
        print(f"publication rate first falls below half its peak in {below}")
    else:
        print(f"publication rate stays at or above half its peak through {rows[-1].year}")
    print(f"forecast written to {out_path}")
    return EXIT_OK


# --- argument wiring --------------------------------------------------------


def _add_param_flags(sub: _Parser, required: bool) -> None:
    sub.add_argument("--k", type=float, required=required, default=None,
                     help="carrying capacity (total eventual publications)")
    sub.add_argument("--r", type=float, required=required, default=None,
                     help="growth rate (1/year)")
    sub.add_argument("--t0", type=float, required=required, default=None,
                     help="inflection year of the publication curve")
    sub.add_argument("--p", type=float, required=required, default=None,
                     help="patents per accumulated publication")
    sub.add_argument("--tstar", type=float, required=required, default=None,
                     help="technology delay in years")


def build_parser() -> _Parser:
    parser = _Parser(prog="hypecurve",
                     description="Model, fit and forecast publication/patent impact curves.")
    parser.add_argument("--version", action="version", version=f"hypecurve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="fit model parameters to observed CSV series")
    p_fit.add_argument("publications", help="publications CSV (year,count)")
    p_fit.add_argument("patents", nargs="?", default=None,
                       help="patents CSV (year,count); omit for a publications-only fit")
    p_fit.add_argument("--mode", choices=[MODE_JOINT, MODE_INDEPENDENT], default=MODE_JOINT,
                       help="share science parameters across both series, or fit in stages")
    p_fit.add_argument("--forward", choices=[FORWARD_BIN, FORWARD_MIDPOINT], default=FORWARD_BIN,
                       help="bin-integrated forward model (default) or midpoint rates")
    p_fit.add_argument("--starts", type=int, default=16, help="multi-start count")
    p_fit.add_argument("--max-iters", type=int, default=2000, help="iterations per start")
    p_fit.add_argument("--tol", type=float, default=1e-10,
                       help="relative objective convergence tolerance")
    p_fit.add_argument("--seed", type=int, default=0, help="start-jitter seed")
    p_fit.add_argument("--epsilon", type=float, default=0.05,
                       help="trigger threshold as a fraction of peak/plateau")
    p_fit.add_argument("--horizon", type=int, default=10, help="forecast years past the data")
    p_fit.add_argument("--out-dir", default=".", help="output directory")
    p_fit.set_defaults(func=_cmd_fit)

    p_sim = sub.add_parser("simulate", help="generate synthetic series from parameters")
    _add_param_flags(p_sim, required=True)
    p_sim.add_argument("--from", dest="start", type=int, required=True, help="first year")
    p_sim.add_argument("--to", type=int, required=True, help="last year (inclusive)")
    p_sim.add_argument("--noise", choices=list(NOISE_KINDS), default="none")
    p_sim.add_argument("--sigma", type=float, default=0.0,
                       help="gaussian noise fraction of each bin expectation")
    p_sim.add_argument("--seed", type=int, default=0, help="noise seed")
    p_sim.add_argument("--out-dir", default=".", help="output directory")
    p_sim.add_argument("--pub-out", default=None, help="publications CSV path")
    p_sim.add_argument("--pat-out", default=None, help="patents CSV path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_fc = sub.add_parser("forecast", help="per-year forecast from a report or parameters")
    p_fc.add_argument("--report", default=None, help="report.txt from a previous fit")
    _add_param_flags(p_fc, required=False)
    p_fc.add_argument("--from", dest="start", type=int, default=None,
                      help="first forecast year (default: the peak year)")
    p_fc.add_argument("--horizon", type=int, default=10, help="years past the first")
    p_fc.add_argument("--out", default="forecast.csv", help="output CSV path")
    p_fc.set_defaults(func=_cmd_forecast)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(parser, args)


if __name__ == "__main__":
    sys.exit(main())
