"""Reproducible experiment drivers.

Two kinds of runs: width sweeps that measure how fast the Monte Carlo
covariance approaches its wide-width limit, and an equivariance suite that
exercises every exactness property (rotation commutation, translation
phases, mode/polar oracle agreement, the filter constraint, and the complex
Gaussian moments) in one report.  Identical specs give byte-identical
outputs; parallelism only reorders work, never results.
"""

from __future__ import annotations

import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import SUITE_STREAM, derived_rng
from .config import CheckSection
from .fields import (ModeField, RadialProfile, angular_reconstruct,
                     random_mode_field, rotate_mode_field,
                     translate_polar_field)
from .kernel import (analytic_closed, diagonality_check, empirical_kernel,
                     input_kernel, moment_oracle, single_mode_check)
from .scnn import (NetworkConfig, build_coord_filter, check_kernel_constraint,
                   decompose_output, forward, polar_grid_forward,
                   required_angular_count, sample_filters)


class StructuralCheckError(RuntimeError):
    """A sweep's diagonality or single-mode assertion failed."""


# ---------------------------------------------------------------------------
# width-convergence sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One convergence study: replicate widths x seeds at fixed input."""

    config: NetworkConfig
    input_field: ModeField
    widths: tuple[int, ...]
    draws: int
    seeds: tuple[int, ...]
    layer: int
    sigma_mult: float = 5.0

    def __post_init__(self):
        if not self.widths or not self.seeds:
            raise ValueError("widths and seeds must be non-empty")
        if not 1 <= self.layer <= self.config.depth:
            raise ValueError(f"layer must be in 1..{self.config.depth}")
        if self.draws < 1:
            raise ValueError("draws must be >= 1")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class ResultRow:
    depth: int
    width: int
    draws: int
    mode: int
    radial_bin: int
    analytic: float
    empirical: float
    std_err: float
    rel_err: float
    seed: int


CSV_HEADER = "L,width,draws,mode,radial_bin,analytic,empirical,std_err,rel_err,seed"


def _width_config(config: NetworkConfig, width: int) -> NetworkConfig:
    # replicate the hidden multiplicities; the input width is set by the data
    widths = (config.widths[0],) + (width,) * (len(config.widths) - 1)
    return NetworkConfig(config.depth, widths, config.filter_modes,
                         config.sigma_w_sq, config.grid, config.seed,
                         config.input_window, config.final_linear)


def _limit_worker_blas():
    # one BLAS thread per worker; the cells are small-matmul bound and
    # oversubscribing the cores roughly doubles the wall time
    import threadpoolctl
    threadpoolctl.threadpool_limits(1)


def _sweep_cell(payload):
    config, input_field, layer, draws, seed = payload
    return empirical_kernel(config, input_field, layer, draws, seed=seed)


def converge_sweep(spec: SweepSpec, workers: int | None = None) -> list[ResultRow]:
    """Run every (width, seed) cell and tabulate against the limit kernel.

    Cells are independent and may run in parallel processes; rows come back
    in (width, seed, radial bin) order regardless of scheduling.  Each
    cell's kernel must pass the diagonality and single-mode checks and must
    locate the analytically expected mode, otherwise the sweep aborts.
    """
    k0 = input_kernel(spec.input_field)
    analytic = analytic_closed(k0, spec.layer,
                               spec.config.filter_modes[:spec.layer],
                               spec.config.sigma_w_sq)
    cells = [(width, seed) for width in spec.widths for seed in spec.seeds]
    payloads = [(_width_config(spec.config, width), spec.input_field,
                 spec.layer, spec.draws, seed) for width, seed in cells]
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(int(workers), len(payloads)))
    if workers == 1:
        kernels = [_sweep_cell(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers,
                                 initializer=_limit_worker_blas) as pool:
            kernels = list(pool.map(_sweep_cell, payloads))
    rows: list[ResultRow] = []
    for (width, seed), kern in zip(cells, kernels):
        diag = diagonality_check(kern, spec.sigma_mult)
        if not diag.passed:
            raise StructuralCheckError(
                f"width {width} seed {seed}: off-diagonal mass at "
                f"{diag.max_ratio:.2f} standard errors")
        single = single_mode_check(kern, spec.sigma_mult)
        if not single.passed or single.mode != analytic.mode:
            raise StructuralCheckError(
                f"width {width} seed {seed}: nonzero modes "
                f"{single.nonzero_modes}, expected ({analytic.mode},)")
        emp = kern.codiagonal(analytic.mode)
        err = kern.codiagonal_std_err(analytic.mode)
        for a in range(kern.grid.count):
            ref = float(analytic.values[a])
            rel = abs(float(emp[a]) - ref) / abs(ref) if ref != 0.0 else float("nan")
            rows.append(ResultRow(spec.config.depth, width, spec.draws,
                                  analytic.mode, a, ref, float(emp[a]),
                                  float(err[a]), rel, seed))
    return rows


def median_rel_err_by_width(rows: list[ResultRow]) -> dict[int, float]:
    by_width: dict[int, list[float]] = {}
    for row in rows:
        by_width.setdefault(row.width, []).append(row.rel_err)
    return {w: statistics.median(v) for w, v in sorted(by_width.items())}


def rows_to_csv(rows: list[ResultRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.depth), str(r.width), str(r.draws), str(r.mode),
            str(r.radial_bin), repr(r.analytic), repr(r.empirical),
            repr(r.std_err), repr(r.rel_err), str(r.seed)]))
    return "\n".join(lines) + "\n"


def rows_to_dicts(rows: list[ResultRow]) -> list[dict]:
    return [{"L": r.depth, "width": r.width, "draws": r.draws, "mode": r.mode,
             "radial_bin": r.radial_bin, "analytic": r.analytic,
             "empirical": r.empirical, "std_err": r.std_err,
             "rel_err": None if np.isnan(r.rel_err) else r.rel_err,
             "seed": r.seed} for r in rows]


# ---------------------------------------------------------------------------
# equivariance suite
# ---------------------------------------------------------------------------

DEFAULT_CHECKS = CheckSection(
    rotation_trials=6,
    rotation_tol=1e-10,
    translation=(0.4, -0.3),
    translation_tol=1e-10,
    oracle_tol=1e-10,
    constraint_trials=100,
    constraint_tol=1e-12,
    moment_draws=200_000,
    moment_sigma_mult=5.0,
)


@dataclass(frozen=True)
class SuiteItem:
    name: str
    max_dev: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class SuiteReport:
    items: tuple[SuiteItem, ...]
    runtime_seconds: float

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    @property
    def max_dev(self) -> float:
        """Worst deviation across items, in units of each item's tolerance."""
        return max(item.max_dev / item.tolerance for item in self.items)

    def to_dict(self) -> dict:
        return {
            "suite": "check",
            "pass": self.passed,
            "max_dev": self.max_dev,
            "items": [{"name": i.name, "max_dev": i.max_dev,
                       "tolerance": i.tolerance, "pass": i.passed}
                      for i in self.items],
        }


def _relative_deviation(got: ModeField, want: ModeField) -> float:
    scale = max(want.norm(), 1e-300)
    return float(np.linalg.norm(got.data - want.data)) / scale


def equivariance_suite(config: NetworkConfig, seed: int,
                       settings: CheckSection | None = None,
                       constraint_filter=None) -> SuiteReport:
    """Run the exactness battery on one network configuration.

    A random bandlimited input and one filter draw are derived from `seed`.
    `constraint_filter` overrides the coordinate filter fed to the
    constraint item, which lets callers inject a deliberately broken filter
    and watch exactly that item fail.
    """
    settings = settings or DEFAULT_CHECKS
    start = time.perf_counter()
    rng = derived_rng(seed, SUITE_STREAM)
    x = random_mode_field(config.grid, config.input_window, config.widths[0],
                          rng, rep_index=0)
    filters = sample_filters(config, seed=seed)
    items = []

    # rotation: running the network commutes with the mode-space rotation
    base = forward(config, filters, x)
    base_stages = list(base.pre_activations) + list(base.activations)
    worst = 0.0
    for _ in range(settings.rotation_trials):
        theta = float(rng.uniform(0.0, 2.0 * np.pi))
        rotated = forward(config, filters, rotate_mode_field(x, theta))
        stages = list(rotated.pre_activations) + list(rotated.activations)
        for got, ref in zip(stages, base_stages):
            worst = max(worst, _relative_deviation(got, rotate_mode_field(ref, theta)))
    items.append(SuiteItem("rotation_forward", worst, settings.rotation_tol,
                           worst <= settings.rotation_tol))

    # translation: pointwise phases pass through the polar route untouched
    a = required_angular_count(config)
    xp = angular_reconstruct(x, a)
    out_then_shift = translate_polar_field(
        polar_grid_forward(config, filters, xp), settings.translation)
    shift_then_out = polar_grid_forward(
        config, filters, translate_polar_field(xp, settings.translation))
    scale = max(float(np.linalg.norm(out_then_shift.data)), 1e-300)
    dev = float(np.linalg.norm(shift_then_out.data - out_then_shift.data)) / scale
    items.append(SuiteItem("translation_polar", dev, settings.translation_tol,
                           dev <= settings.translation_tol))

    # oracle agreement: mode-space forward against the polar-grid route
    polar_modes = decompose_output(config,
                                   polar_grid_forward(config, filters, xp),
                                   input_rep=x.rep_index)
    dev = _relative_deviation(polar_modes, base.output)
    items.append(SuiteItem("oracle_agreement", dev, settings.oracle_tol,
                           dev <= settings.oracle_tol))

    # constraint: single-mode coordinate filter is an exact intertwiner
    fl = constraint_filter if constraint_filter is not None else \
        build_coord_filter(RadialProfile.gaussian(1.0, 1.0, 0.6), 1, 0)
    dev = check_kernel_constraint(fl, 0, 1, settings.constraint_trials, seed)
    items.append(SuiteItem("kernel_constraint", dev, settings.constraint_tol,
                           dev <= settings.constraint_tol))

    # moments: the 3! factor behind the kernel recursion
    est = moment_oracle(1.0, 3, settings.moment_draws, seed)
    dev = abs(est.estimate - est.reference) / est.std_err
    items.append(SuiteItem("cubic_moment", dev, settings.moment_sigma_mult,
                           dev <= settings.moment_sigma_mult))

    return SuiteReport(tuple(items), time.perf_counter() - start)
