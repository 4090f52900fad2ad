"""Operator entry point: run scenarios, sweep the catalog, validate against
the published row, and calibrate the profile.

Exit codes: 0 success / validation pass, 1 tolerance or calibration failure,
2 configuration errors (profile, scenario), 3 I/O failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import calibrate as cal
from . import scenario as scen_mod
from .harness import run_scenario
from .kpi import compare
from .report import comparison_row, write_comparison_csv, write_kpi_svg, write_report_json
from .scenario import ParseError, Scenario, UnknownScenario, ValidationError
from .stochastics import ProfileError, default_profile_path, load_profile, write_profile

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3

PROFILE_ENV = "EDSIM_PROFILE"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", help=f"profile JSON (default: ${PROFILE_ENV} or packaged profile)")
    p.add_argument("--seed", type=int, default=42, help="master seed (default 42)")
    p.add_argument("--replications", type=int, default=10, help="independent runs (default 10)")
    p.add_argument("--days", type=int, default=30, help="simulated days per run (default 30)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--out", default="edsim-out", help="output directory (default ./edsim-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write logs + report")
    _add_common(p_run)
    p_run.add_argument("--scenario", default="baseline",
                       help='catalog name, "baseline", tuple literal, or scenario JSON file')
    p_run.add_argument("--svg", action="store_true", help="also write a KPI bar chart")

    p_sweep = sub.add_parser("sweep", help="baseline + scenarios with common random numbers")
    _add_common(p_sweep)
    p_sweep.add_argument("--scenarios", nargs="*", default=None,
                         help="catalog names (default: whole catalog)")
    p_sweep.add_argument("--svg", action="store_true", help="also write a LoS chart")

    p_val = sub.add_parser("validate", help="check the calibration targets")
    _add_common(p_val)

    p_cal = sub.add_parser("calibrate", help="fit free profile parameters to the targets")
    _add_common(p_cal)
    p_cal.add_argument("--budget", type=int, default=120, help="max objective evaluations")
    p_cal.add_argument("--probe-replications", type=int, default=3)
    p_cal.add_argument("--probe-days", type=int, default=30)
    return parser


def _resolve_profile(args) -> str:
    path = args.profile or os.environ.get(PROFILE_ENV) or default_profile_path()
    if not Path(path).exists():
        raise ProfileError(f"profile file not found: {path}")
    return path


def _resolve_scenario(text: str) -> tuple[str, Scenario]:
    if text.endswith(".json") and Path(text).exists():
        return Path(text).stem, scen_mod.load_json(text)
    name = text if not text.lstrip().startswith("(") else "custom"
    return name, scen_mod.parse(text)


def cmd_run(args) -> int:
    profile = load_profile(_resolve_profile(args))
    name, scenario = _resolve_scenario(args.scenario)
    agg, _, logs = run_scenario(profile, scenario, args.seed, args.replications,
                                args.days, jobs=args.jobs, keep_logs=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for log in logs:
        log.write_csv(out / f"rep_{log.rep_id:02d}.csv")
    meta = {
        "scenario": scenario.render(),
        "scenario_name": name,
        "seed": args.seed,
        "replications": args.replications,
        "days": args.days,
        "profile_version": profile.version,
        "low_sample": bool(args.replications < 2 or args.days < 2),
    }
    write_report_json(out / "report.json", agg, meta)
    if args.svg:
        write_kpi_svg(out / "kpis.svg", agg, f"KPIs: {name}")
    print(f"run {name}: In={agg.in_per_day:.2f} WT1st={agg.wt_first:.2f} "
          f"WTlast={agg.wt_last:.2f} LoS={agg.los:.2f}"
          + (" [low-sample]" if meta["low_sample"] else ""))
    print(f"wrote {args.replications} event logs + report.json to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    profile = load_profile(_resolve_profile(args))
    catalog = scen_mod.catalog()
    names = args.scenarios if args.scenarios else list(catalog)
    unknown = [n for n in names if n not in catalog]
    if unknown:
        print(f"error: unknown scenario name(s): {', '.join(unknown)}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    base_agg, _, _ = run_scenario(profile, Scenario(), args.seed, args.replications,
                                  args.days, jobs=args.jobs)
    write_report_json(out / "reports" / "baseline.json", base_agg,
                      {"scenario": "(-,-,-,-,-,-,-,-)", "scenario_name": "baseline",
                       "seed": args.seed, "replications": args.replications, "days": args.days})
    rows = [comparison_row("baseline", base_agg, None)]
    for name in names:
        agg, _, _ = run_scenario(profile, catalog[name], args.seed, args.replications,
                                 args.days, jobs=args.jobs)
        # significance needs at least two replications per side
        cmp_ = compare(base_agg, agg) if args.replications >= 2 else None
        rows.append(comparison_row(name, agg, cmp_))
        write_report_json(out / "reports" / f"{name}.json", agg,
                          {"scenario": catalog[name].render(), "scenario_name": name,
                           "seed": args.seed, "replications": args.replications, "days": args.days})
        print(f"{name}: LoS {agg.los:.2f} (baseline {base_agg.los:.2f})")
    write_comparison_csv(out / "comparison.csv", rows)
    if args.svg:
        from .report import svg_bar_chart
        labels = [r[0] for r in rows]
        values = [float(r[4]) for r in rows]
        (out / "los.svg").write_text(svg_bar_chart("LoS by scenario", labels, values,
                                                   width=max(640, 26 * len(rows))) + "\n")
    print(f"wrote {len(rows)}-row comparison.csv to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    profile = load_profile(_resolve_profile(args))
    target = cal.CalibrationTarget()
    agg, _, _ = run_scenario(profile, Scenario(), args.seed, args.replications,
                             args.days, jobs=args.jobs)
    errs = cal.band_errors(agg, target)
    ok = True
    print(f"{'kpi':<12}{'simulated':>12}{'target':>10}{'delta':>9}{'band':>7}  verdict")
    for kpi, band in cal.BANDS.items():
        passed = abs(errs[kpi]) <= band
        ok = ok and passed
        print(f"{kpi:<12}{agg.value(kpi):>12.2f}{getattr(target, kpi):>10.2f}"
              f"{100 * errs[kpi]:>+8.1f}%{100 * band:>6.0f}%  {'pass' if passed else 'FAIL'}")
    print(f"outliers: green {agg.outlier_pct.get('GREEN', float('nan')):.2f}% "
          f"(ref {target.outlier_green}), white {agg.outlier_pct.get('WHITE', float('nan')):.2f}% "
          f"(ref {target.outlier_white})")
    print("validation", "PASSED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_calibrate(args) -> int:
    profile = load_profile(_resolve_profile(args))
    result = cal.calibrate(profile.raw, budget=args.budget, seed=args.seed,
                           replications=args.probe_replications, days=args.probe_days,
                           jobs=args.jobs, final_replications=args.replications,
                           final_days=args.days)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_profile(result.profile_raw, out / "fitted_profile.json")
    with open(out / "calibration_trace.json", "w") as fh:
        json.dump(result.trace_dict(), fh, indent=1)
        fh.write("\n")
    print(f"calibration: {result.message}")
    if result.report is not None:
        a = result.report
        print(f"full-scale check: In={a.in_per_day:.2f} WT1st={a.wt_first:.2f} "
              f"WTlast={a.wt_last:.2f} LoS={a.los:.2f}")
    print(f"wrote fitted_profile.json + calibration_trace.json to {out}")
    return EXIT_OK if result.converged else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep,
               "validate": cmd_validate, "calibrate": cmd_calibrate}[args.command]
    try:
        return handler(args)
    except ProfileError as exc:
        print(f"profile error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnknownScenario as exc:
        print(f"unknown scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
