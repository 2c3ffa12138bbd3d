"""Command line interface: detect, calibrate, benchmark.

Exit codes: 0 success, 2 input or flag error, 3 calibration exhaustion.
The environment variable GLRCHART_THREADS sets the default worker count
for calibration and benchmarks (detection is strictly sequential).

``detect`` reads one observation per line (UTF-8 decimal text, blank lines
skipped) and writes one JSON object per detection, preceded by a comment
line embedding the run manifest.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

from . import __version__, bayes, harness, monitor, thresholds
from .errors import CalibrationExhaustedError, DomainError, GLRChartError, InputError


def _manifest(subcommand: str, args: argparse.Namespace, extra: dict | None = None) -> dict:
    skip = {"func"}
    m = {
        "tool": f"glrchart {__version__}",
        "subcommand": subcommand,
        "flags": {k: v for k, v in vars(args).items() if k not in skip},
    }
    if extra:
        m.update(extra)
    return m


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8")


def _iter_numbers(path: str):
    """Yield (line_number, value) from a text file of one number per line."""
    fh = sys.stdin if path == "-" else open(path, "r", encoding="utf-8")
    try:
        for i, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                yield i, float(text)
            except ValueError:
                raise InputError(f"line {i}: cannot parse {text!r} as a number") from None
    finally:
        if fh is not sys.stdin:
            fh.close()


def _threshold_source(args) -> object:
    if args.threshold_file:
        table = thresholds.ThresholdTable.load(args.threshold_file)
        family, stat = thresholds.kind_pair(table.statistic_kind)
        if family != args.family or stat != args.statistic:
            raise InputError(
                f"threshold file is for {table.statistic_kind}, not "
                f"{thresholds.statistic_kind(args.family, args.statistic)}"
            )
        return table
    if args.arl0 is None:
        raise InputError("one of --arl0 or --threshold-file is required")
    kind = thresholds.statistic_kind(args.family, args.statistic)
    return thresholds.shipped_table(kind, args.arl0)


def cmd_detect(args) -> int:
    source = _threshold_source(args)
    config = monitor.DetectorConfig(
        family=args.family,
        threshold_source=source,
        statistic=args.statistic,
        window=args.window,
        multi_change=args.multi,
    )
    out = _open_out(args.output)
    try:
        out.write("# manifest=" + json.dumps(_manifest("detect", args)) + "\n")
        numbers = _iter_numbers(args.input)

        def values():
            for lineno, x in numbers:
                if args.family == "exponential" and x <= 0.0:
                    raise InputError(
                        f"line {lineno}: Exponential data must be positive, got {x:g}"
                    )
                yield x

        for report in monitor.iter_reports(values(), config):
            out.write(
                json.dumps(
                    {
                        "detection_time": report.detection_time,
                        "tau_hat": report.tau_hat,
                        "statistic": report.statistic_value,
                        "threshold": report.threshold,
                    }
                )
                + "\n"
            )
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_calibrate(args) -> int:
    if args.reps <= 0:
        raise InputError("--reps must be positive")
    kind = thresholds.statistic_kind(args.family, args.statistic)
    plan = thresholds.CalibrationPlan(
        replications=args.reps,
        t_max=args.tmax,
        gamma=1.0 / args.arl0,
        seed=args.seed,
    )
    table = thresholds.calibrate(plan, kind, progress=args.verbose)
    out = _open_out(args.output)
    try:
        out.write("# manifest=" + json.dumps(_manifest("calibrate", args)) + "\n")
        out.write(table.to_csv())
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


_BAYES_PRIORS = {
    "Gamma(1,1)": bayes.GammaRatePrior(1.0, 1.0),
    "Gamma(0.1,0.1)": bayes.GammaRatePrior(0.1, 0.1),
    "Gamma(0.01,0.01)": bayes.GammaRatePrior(0.01, 0.01),
    "Gamma(22.5,3)": bayes.GammaRatePrior(22.5, 3.0),
}


def cmd_benchmark(args) -> int:
    if args.reps <= 0:
        raise InputError("--reps must be positive")
    rows: list[dict]
    if args.table in ("mean", "var", "exp"):
        if args.table == "mean":
            scenarios = harness.mean_change_scenarios()
            family, uncorrected = "gaussian", "hz"
        elif args.table == "var":
            scenarios = harness.variance_change_scenarios()
            family, uncorrected = "gaussian", "hz"
        else:
            scenarios = harness.rate_change_scenarios()
            family, uncorrected = "exponential", "raw"
        tables = {
            "corrected": thresholds.shipped_table(
                thresholds.statistic_kind(family, "corrected"), 500
            ),
            uncorrected: thresholds.shipped_table(
                thresholds.statistic_kind(family, uncorrected), 500
            ),
        }
        rows = harness.delay_table(scenarios, tables, args.reps, args.seed)
    elif args.table == "bayes":
        seg = bayes.SegmentLengthPrior(200.0, 200.0)
        scenario = bayes.ExponentialChangeScenario(tau=50, rate_pre=1.0, rate_post=3.0)
        rows = harness.bayes_comparison(
            scenario,
            seg,
            _BAYES_PRIORS,
            [0.2, 0.4, 0.6, 0.8],
            args.reps,
            args.seed,
        )
    else:  # prior-sampled
        seg = bayes.SegmentLengthPrior(200.0, 200.0)
        informative = bayes.GammaRatePrior(22.5, 3.0)
        scenario = bayes.ExponentialChangeScenario(
            tau=50, rate_pre=None, rate_post=None, sample_prior=informative
        )
        rows = harness.bayes_comparison(
            scenario,
            seg,
            {"Gamma(22.5,3)": informative},
            [0.2, 0.4, 0.6, 0.8],
            args.reps,
            args.seed,
        )

    fieldnames = list(rows[0].keys())
    out = _open_out(args.output)
    try:
        out.write("# manifest=" + json.dumps(_manifest("benchmark", args)) + "\n")
        writer = csv.DictWriter(out, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.output != "-":
        summary = _manifest("benchmark", args, {"rows": rows})
        with open(args.output + ".json", "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, default=_json_default)
            f.write("\n")
    return 0


def _json_default(obj):
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not JSON serialisable: {obj!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glrchart", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="sequentially monitor a stream of numbers")
    d.add_argument("--family", choices=("gaussian", "exponential"), required=True)
    d.add_argument("--statistic", choices=("corrected", "hz", "raw"), default="corrected")
    d.add_argument("--arl0", type=float, default=None, help="use the shipped table for this arl0")
    d.add_argument("--threshold-file", default=None, help="threshold CSV from `calibrate`")
    d.add_argument("--window", type=int, default=None, help="retain only the last W splits")
    d.add_argument("--multi", action="store_true", help="keep monitoring after each detection")
    d.add_argument("--input", default="-", help="path of one-number-per-line input, or -")
    d.add_argument("--output", default="-", help="output path for JSON lines, or -")
    d.set_defaults(func=cmd_detect)

    c = sub.add_parser("calibrate", help="Monte Carlo calibration of a threshold table")
    c.add_argument("--family", choices=("gaussian", "exponential"), required=True)
    c.add_argument("--statistic", choices=("corrected", "hz", "raw"), default="corrected")
    c.add_argument("--arl0", type=float, required=True)
    c.add_argument("--reps", type=int, required=True)
    c.add_argument("--tmax", type=int, default=800)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", default="-")
    c.add_argument("--verbose", action="store_true")
    c.set_defaults(func=cmd_calibrate)

    b = sub.add_parser("benchmark", help="reproduce an evaluation grid")
    b.add_argument("--table", choices=("mean", "var", "exp", "bayes", "prior-sampled"), required=True)
    b.add_argument("--reps", type=int, required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--output", default="-", help="CSV path (a .json summary is written next to it)")
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CalibrationExhaustedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (InputError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except GLRChartError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
