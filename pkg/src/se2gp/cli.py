"""Command-line front end.

One config file drives one run; flags only select the subcommand, the
output path, the format, and an optional seed override.  Artifacts written
to --out (or stdout) are byte-deterministic for identical inputs; the
human-facing summary, which includes the wall-clock runtime, goes to
stderr.  Exit codes: 0 success and all checks green, 1 a check failed,
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from .config import ConfigError, RunConfig, load_run_config
from .experiments import (StructuralCheckError, SweepSpec, converge_sweep,
                          equivariance_suite, rows_to_csv, rows_to_dicts)
from .fields import mode_field_to_record
from .kernel import (analytic_activation_kernel, diagonal_kernel_to_record,
                     empirical_kernel, gp_sample, input_kernel,
                     kernel_to_record)
from .scnn import (build_coord_filter, check_kernel_constraint,
                   eval_coord_filter)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="se2gp",
        description="Steerable-network kernels in angular-mode space")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("kernel", "emit analytic and/or Monte Carlo kernels"),
            ("converge", "width sweep against the wide-width limit"),
            ("check", "run the equivariance suite"),
            ("sample-gp", "draw fields from the limiting Gaussian process"),
            ("filter-check", "verify the steerable-filter constraint")]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="run config JSON file")
        cmd.add_argument("--out", default=None, help="artifact path (default stdout)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        cmd.add_argument("--format", choices=("csv", "json"), default="json",
                         help="artifact format")
    return parser


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_artifact(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, allow_nan=False) + "\n"


def _stderr_summary(suite: str, passed: bool, max_dev: float,
                    runtime: float) -> None:
    summary = {"suite": suite, "pass": passed, "max_dev": max_dev,
               "runtime_seconds": runtime}
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)


def _require_section(section, name: str):
    if section is None:
        raise ConfigError(f"config: missing '{name}' section for this subcommand")
    return section


def _run_kernel(run: RunConfig, args) -> int:
    start = time.perf_counter()
    section = _require_section(run.kernel, "kernel")
    analytic = empirical = None
    if section.emit in ("analytic", "both"):
        analytic = analytic_activation_kernel(run.network,
                                              input_kernel(run.input_field),
                                              section.layer)
    if section.emit in ("empirical", "both"):
        empirical = empirical_kernel(run.network, run.input_field,
                                     section.layer, section.draws)
    if args.format == "json":
        payload = {
            "kind": "kernel_run",
            "layer": section.layer,
            "analytic": None if analytic is None
            else diagonal_kernel_to_record(analytic),
            "empirical": None if empirical is None
            else kernel_to_record(empirical),
        }
        _emit(args, _json_artifact(payload))
    else:
        lines = ["mode,radial_bin,p,analytic,empirical,std_err"]
        grid = run.network.grid
        if empirical is not None:
            for mode in empirical.modes:
                codiag = empirical.codiagonal(mode)
                err = empirical.codiagonal_std_err(mode)
                for a in range(grid.count):
                    ana = (analytic.values[a]
                           if analytic is not None and mode == analytic.mode
                           else float("nan"))
                    lines.append(f"{mode},{a},{grid.values[a]!r},{float(ana)!r},"
                                 f"{float(codiag[a])!r},{float(err[a])!r}")
        else:
            for a in range(grid.count):
                lines.append(f"{analytic.mode},{a},{grid.values[a]!r},"
                             f"{float(analytic.values[a])!r},nan,nan")
        _emit(args, "\n".join(lines) + "\n")
    _stderr_summary("kernel", True, 0.0, time.perf_counter() - start)
    return 0


def _run_converge(run: RunConfig, args) -> int:
    start = time.perf_counter()
    section = _require_section(run.converge, "converge")
    spec = SweepSpec(run.network, run.input_field, section.widths,
                     section.draws, section.seeds, section.layer,
                     section.sigma_mult)
    rows = converge_sweep(spec, workers=section.workers)
    finite = [r.rel_err for r in rows if not math.isnan(r.rel_err)]
    max_rel = max(finite) if finite else 0.0
    if args.format == "csv":
        _emit(args, rows_to_csv(rows))
    else:
        payload = {"rows": rows_to_dicts(rows),
                   "summary": {"suite": "converge", "pass": True,
                               "max_dev": max_rel}}
        _emit(args, _json_artifact(payload))
    _stderr_summary("converge", True, max_rel, time.perf_counter() - start)
    return 0


def _run_check(run: RunConfig, args) -> int:
    # tolerances always come from the config file, never from flags
    section = _require_section(run.check, "check")
    report = equivariance_suite(run.network, run.network.seed,
                                settings=section)
    if args.format == "json":
        _emit(args, _json_artifact(report.to_dict()))
    else:
        lines = ["name,max_dev,tolerance,pass"]
        for item in report.items:
            lines.append(f"{item.name},{item.max_dev!r},{item.tolerance!r},"
                         f"{str(item.passed).lower()}")
        _emit(args, "\n".join(lines) + "\n")
    _stderr_summary("check", report.passed, report.max_dev,
                    report.runtime_seconds)
    return 0 if report.passed else 1


def _run_sample_gp(run: RunConfig, args) -> int:
    start = time.perf_counter()
    section = _require_section(run.sample_gp, "sample_gp")
    limit_layer = run.network.depth + (1 if run.network.final_linear else 0)
    limit = analytic_activation_kernel(run.network,
                                       input_kernel(run.input_field),
                                       limit_layer)
    rep = run.input_field.rep_index + sum(run.network.filter_modes)
    fields = [gp_sample(limit, rep, section.channels, run.network.seed, draw=i)
              for i in range(section.count)]
    if args.format == "json":
        payload = {"kind": "gp_samples",
                   "fields": [mode_field_to_record(f) for f in fields]}
        _emit(args, _json_artifact(payload))
    else:
        lines = ["sample,channel,mode,radial_bin,re,im"]
        for i, f in enumerate(fields):
            for c in range(f.channels):
                for a in range(f.grid.count):
                    z = f.data[c, 0, a]
                    lines.append(f"{i},{c},{f.mode_lo},{a},{z.real!r},{z.imag!r}")
        _emit(args, "\n".join(lines) + "\n")
    _stderr_summary("sample-gp", True, 0.0, time.perf_counter() - start)
    return 0


def _run_filter_check(run: RunConfig, args) -> int:
    start = time.perf_counter()
    section = _require_section(run.filter_check, "filter_check")
    base = build_coord_filter(section.profile, section.rho_out, section.rho_in)
    if section.two_frequency:
        # deliberately broken: superpose a second angular frequency
        other = build_coord_filter(section.profile, section.rho_out + 1,
                                   section.rho_in)
        fl = lambda rv: eval_coord_filter(base, rv) + eval_coord_filter(other, rv)
    else:
        fl = base
    dev = check_kernel_constraint(fl, section.rho_in, section.rho_out,
                                  section.trials, run.network.seed)
    passed = dev <= section.tolerance
    payload = {"suite": "filter-check", "pass": passed, "max_dev": dev,
               "trials": section.trials, "tolerance": section.tolerance}
    if args.format == "json":
        _emit(args, _json_artifact(payload))
    else:
        _emit(args, "suite,pass,max_dev,trials,tolerance\n"
              f"filter-check,{str(passed).lower()},{dev!r},{section.trials},"
              f"{section.tolerance!r}\n")
    _stderr_summary("filter-check", passed, dev, time.perf_counter() - start)
    return 0 if passed else 1


_RUNNERS = {
    "kernel": _run_kernel,
    "converge": _run_converge,
    "check": _run_check,
    "sample-gp": _run_sample_gp,
    "filter-check": _run_filter_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        run = load_run_config(args.config, seed_override=args.seed)
        return _RUNNERS[args.command](run, args)
    except ConfigError as exc:
        print(f"se2gp: config error: {exc}", file=sys.stderr)
        return 2
    except StructuralCheckError as exc:
        print(f"se2gp: check failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"se2gp: invalid run: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
