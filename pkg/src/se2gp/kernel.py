"""Activation covariances: Monte Carlo estimates and the wide-width limit.

The uncentered covariance of a layer's activations,

    K_{n,n'}(p, p') = (1/C) sum_i Y_{i,n}(p) conj(Y_{i,n'}(p')),

is estimated by averaging over random filter draws.  In the infinite-
multiplicity limit a diagonal single-mode input covariance stays diagonal
and single-mode, and each (linear, cubic) block maps its radial profile
through

    K -> 6 (sigma_w_sq / 2)^3 K^3

with the mode shifted by the layer's filter mode.  The factor 6 = 3! is the
third moment E|Z|^6 = 3! gamma^3 of a circularly symmetric complex Gaussian,
which :func:`moment_oracle` verifies by direct sampling.  Iterating the step
L times gives the closed form

    K^L = (6 (sigma_w_sq / 2)^3)^((3^L - 1)/2) * (K^0)^(3^L),

checked here against both the iterated step and the Monte Carlo estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import GP_STREAM, MOMENT_STREAM, complex_normal, derived_rng
from .fields import ModeField, RadialGrid
from .scnn import NetworkConfig, _filter_scratch, _sample_filters, forward


# ---------------------------------------------------------------------------
# kernel containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense covariance over (mode, mode', bin, bin') with standard errors.

    ``std_err`` holds per-entry Monte Carlo standard errors (all zero for
    analytic kernels; ``draws`` is 0 then).  Entries are Hermitian under
    (n, p) <-> (n', p') exchange and real non-negative on the co-diagonal.
    """

    grid: RadialGrid
    mode_lo: int
    mode_hi: int
    entries: np.ndarray
    std_err: np.ndarray
    draws: int = 0
    seed: int = 0
    config_digest: str = ""

    def __post_init__(self):
        w = self.mode_hi - self.mode_lo + 1
        p = self.grid.count
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        std_err = np.ascontiguousarray(self.std_err, dtype=np.float64)
        if entries.shape != (w, w, p, p) or std_err.shape != (w, w, p, p):
            raise ValueError(f"kernel arrays must have shape ({w}, {w}, {p}, {p})")
        if not np.all(np.isfinite(entries.view(np.float64))):
            raise ValueError("kernel entries must be finite")
        if np.any(std_err < 0.0):
            raise ValueError("standard errors must be non-negative")
        entries.flags.writeable = False
        std_err.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "std_err", std_err)
        object.__setattr__(self, "mode_lo", int(self.mode_lo))
        object.__setattr__(self, "mode_hi", int(self.mode_hi))

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.mode_lo, self.mode_hi + 1)

    @property
    def is_analytic(self) -> bool:
        return self.draws == 0

    def codiagonal(self, mode: int) -> np.ndarray:
        """Real values K_{mode,mode}(p, p) across radial bins."""
        i = mode - self.mode_lo
        if not 0 <= i <= self.mode_hi - self.mode_lo:
            raise ValueError(f"mode {mode} outside window")
        return np.ascontiguousarray(np.diagonal(self.entries[i, i]).real)

    def codiagonal_std_err(self, mode: int) -> np.ndarray:
        i = mode - self.mode_lo
        return np.ascontiguousarray(np.diagonal(self.std_err[i, i]))


@dataclass(frozen=True, eq=False)
class DiagonalKernel:
    """Single-mode diagonal kernel: values K(p) at one angular mode."""

    grid: RadialGrid
    mode: int
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.count,):
            raise ValueError("values must match the radial grid")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise ValueError("kernel values must be finite and non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mode", int(self.mode))

    def to_matrix(self) -> KernelMatrix:
        p = self.grid.count
        entries = np.zeros((1, 1, p, p), dtype=np.complex128)
        entries[0, 0][np.diag_indices(p)] = self.values
        return KernelMatrix(self.grid, self.mode, self.mode, entries,
                            np.zeros((1, 1, p, p)))


@dataclass(frozen=True, eq=False)
class LayerGaussianCov:
    """Per-channel pre-activation variance gamma = (sigma_w_sq/2) K."""

    grid: RadialGrid
    mode: int
    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.ascontiguousarray(self.gamma, dtype=np.float64)
        if gamma.shape != (self.grid.count,):
            raise ValueError("gamma must match the radial grid")
        if np.any(gamma < 0.0) or not np.all(np.isfinite(gamma)):
            raise ValueError("gamma must be finite and non-negative")
        gamma.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "mode", int(self.mode))

    @classmethod
    def from_kernel(cls, kernel: DiagonalKernel, sigma_w_sq: float,
                    q: int) -> "LayerGaussianCov":
        return cls(kernel.grid, kernel.mode - q,
                   0.5 * float(sigma_w_sq) * kernel.values)


# ---------------------------------------------------------------------------
# empirical estimation
# ---------------------------------------------------------------------------

def input_kernel(x: ModeField) -> DiagonalKernel:
    """Channel-averaged covariance of a deterministic single-mode input."""
    power = np.mean(np.abs(x.data) ** 2, axis=0)  # (modes, bins)
    nonzero = [int(m) for i, m in enumerate(x.modes) if power[i].any()]
    if len(nonzero) != 1:
        raise ValueError(
            f"input must populate exactly one mode, found {nonzero or 'none'}")
    mode = nonzero[0]
    return DiagonalKernel(x.grid, mode, power[mode - x.mode_lo])


def empirical_kernel(config: NetworkConfig, x: ModeField, layer: int,
                     draws: int, seed: int | None = None) -> KernelMatrix:
    """Monte Carlo estimate of the layer's activation covariance.

    Averages the channel-mean outer product over `draws` independent filter
    draws; the per-entry standard error comes from the across-draw sample
    variance (channels within a draw are correlated through shared earlier
    layers, so they do not enter the error estimate).  Draw d of the run is
    seeded from (seed, d), making the estimate schedule-independent.

    ``layer`` selects the activation Y^layer for 0 <= layer <= depth; with
    ``final_linear``, layer = depth + 1 selects the trailing pre-activation.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    max_layer = config.depth + (1 if config.final_linear else 0)
    if not 0 <= layer <= max_layer:
        raise ValueError(f"layer must be in 0..{max_layer}")
    seed = config.seed if seed is None else int(seed)
    scratch = _filter_scratch(config)
    s1 = s2 = None
    for d in range(int(draws)):
        stack = _sample_filters(config, seed, d, scratch)
        record = forward(config, stack, x)
        if layer == config.depth + 1:
            y = record.pre_activations[-1]
        else:
            y = record.activation(layer)
        k_draw = np.einsum("imp,inq->mnpq", y.data, y.data.conj()) / y.channels
        if s1 is None:
            s1 = np.zeros_like(k_draw)
            s2 = np.zeros(k_draw.shape, dtype=np.float64)
            window = y.window
        s1 += k_draw
        s2 += (k_draw.real ** 2 + k_draw.imag ** 2)
    m = int(draws)
    mean = s1 / m
    if m > 1:
        var = (s2 - m * (mean.real ** 2 + mean.imag ** 2)) / (m - 1)
        std_err = np.sqrt(np.maximum(var, 0.0) / m)
    else:
        std_err = np.zeros(mean.shape)
    return KernelMatrix(x.grid, window[0], window[1], mean, std_err,
                        draws=m, seed=seed, config_digest=config.digest())


# ---------------------------------------------------------------------------
# analytic recursion and closed form
# ---------------------------------------------------------------------------

def analytic_step(k_prev: DiagonalKernel, sigma_w_sq: float,
                  q: int) -> DiagonalKernel:
    """One (linear, cubic) block in the wide-width limit.

    The pre-activation at mode s - q is complex Gaussian with variance
    gamma = (sigma_w_sq/2) K(p); the cubic's output second moment is
    E|Z|^6 = 6 gamma^3.
    """
    if sigma_w_sq <= 0.0:
        raise ValueError("sigma_w_sq must be positive")
    gamma = 0.5 * float(sigma_w_sq) * k_prev.values
    return DiagonalKernel(k_prev.grid, k_prev.mode - int(q), 6.0 * gamma ** 3)


def analytic_closed(k0: DiagonalKernel, depth: int, q_list: Sequence[int],
                    sigma_w_sq: float,
                    final_linear: bool = False) -> DiagonalKernel:
    """Closed form for `depth` blocks (plus an optional trailing linear).

    Equals the composition of `depth` analytic steps: prefactor
    (6 (sigma_w_sq/2)^3) to the power (3^depth - 1)/2 on (K^0)^(3^depth),
    with the mode shifted by the accumulated filter modes.  The trailing
    linear layer contributes one more factor sigma_w_sq/2 and mode shift.
    """
    depth = int(depth)
    if depth < 0:
        raise ValueError("depth must be non-negative")
    expected = depth + (1 if final_linear else 0)
    if len(q_list) != expected:
        raise ValueError(f"q_list must have {expected} entries, got {len(q_list)}")
    if sigma_w_sq <= 0.0:
        raise ValueError("sigma_w_sq must be positive")
    c = 6.0 * (0.5 * float(sigma_w_sq)) ** 3
    power = 3 ** depth
    values = c ** ((power - 1) // 2) * k0.values ** power
    mode = k0.mode - sum(int(q) for q in q_list[:depth])
    if final_linear:
        values = 0.5 * float(sigma_w_sq) * values
        mode -= int(q_list[depth])
    return DiagonalKernel(k0.grid, mode, values)


def analytic_activation_kernel(config: NetworkConfig, k0: DiagonalKernel,
                               layer: int) -> DiagonalKernel:
    """Limit kernel of Y^layer (or of the trailing output at depth + 1)."""
    max_layer = config.depth + (1 if config.final_linear else 0)
    if not 0 <= layer <= max_layer:
        raise ValueError(f"layer must be in 0..{max_layer}")
    if layer <= config.depth:
        return analytic_closed(k0, layer, config.filter_modes[:layer],
                               config.sigma_w_sq)
    return analytic_closed(k0, config.depth, config.filter_modes,
                           config.sigma_w_sq, final_linear=True)


# ---------------------------------------------------------------------------
# structural checkers
# ---------------------------------------------------------------------------

ANALYTIC_TOL = 1e-12


@dataclass(frozen=True)
class DiagonalityReport:
    passed: bool
    max_off_magnitude: float
    max_ratio: float
    threshold: float
    analytic: bool


def _rounding_floor(kernel: KernelMatrix) -> float:
    # FFT arithmetic leaves O(eps * scale) residue in structurally zero
    # entries whose tiny standard errors would otherwise flag them
    return ANALYTIC_TOL * float(np.abs(kernel.entries).max(initial=0.0))


def diagonality_check(kernel: KernelMatrix,
                      sigma_mult: float = 5.0) -> DiagonalityReport:
    """Check that all mass sits at n = n', p = p'.

    Empirical kernels pass when every off-diagonal magnitude is within
    sigma_mult standard errors (or below rounding scale); analytic kernels
    when it is below ``ANALYTIC_TOL``.  A single-draw estimate carries no
    standard errors, so the statistical test is vacuous there and passes.
    """
    w = kernel.mode_hi - kernel.mode_lo + 1
    p = kernel.grid.count
    same_mode = np.eye(w, dtype=bool)[:, :, None, None]
    same_bin = np.eye(p, dtype=bool)[None, None, :, :]
    off = ~(same_mode & same_bin)
    mags = np.abs(kernel.entries)[off]
    if kernel.is_analytic:
        worst = float(mags.max(initial=0.0))
        return DiagonalityReport(worst <= ANALYTIC_TOL, worst, 0.0,
                                 ANALYTIC_TOL, True)
    if kernel.draws < 2:
        return DiagonalityReport(True, float(mags.max(initial=0.0)), 0.0,
                                 float(sigma_mult), False)
    allowed = np.maximum(sigma_mult * kernel.std_err[off],
                         _rounding_floor(kernel))
    passed = bool(np.all(mags <= allowed))
    errs = kernel.std_err[off]
    live = mags > _rounding_floor(kernel)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(errs > 0.0, mags / errs,
                          np.where(mags > 0.0, np.inf, 0.0))
    ratios = np.where(live, ratios, 0.0)
    return DiagonalityReport(passed, float(mags.max(initial=0.0)),
                             float(ratios.max(initial=0.0)),
                             float(sigma_mult), False)


@dataclass(frozen=True)
class SingleModeReport:
    passed: bool
    mode: int | None
    nonzero_modes: tuple[int, ...]


def single_mode_check(kernel: KernelMatrix,
                      sigma_mult: float = 5.0) -> SingleModeReport:
    """Locate the unique angular mode carrying co-diagonal mass.

    The populated mode is the one with dominant total mass; the check
    passes when no other mode is statistically nonzero, i.e. when every
    competing co-diagonal entry stays within sigma_mult standard errors
    (``ANALYTIC_TOL`` for analytic kernels).  Kernels with no mass above
    rounding scale fail, as do kernels where a second mode is significant;
    the report lists the offenders.
    """
    floor = max(_rounding_floor(kernel),
                ANALYTIC_TOL if kernel.is_analytic else 0.0)
    masses = {int(m): float(np.abs(kernel.codiagonal(m)).max())
              for m in kernel.modes}
    dominant = max(masses, key=masses.get)
    if masses[dominant] <= floor:
        return SingleModeReport(False, None, ())
    significant = []
    for mode in kernel.modes:
        vals = np.abs(kernel.codiagonal(mode))
        if kernel.is_analytic:
            hit = np.any(vals > ANALYTIC_TOL)
        else:
            errs = kernel.codiagonal_std_err(mode)
            hit = np.any(vals > np.maximum(sigma_mult * errs, floor))
        if hit:
            significant.append(int(mode))
    offenders = [m for m in significant if m != dominant]
    if offenders:
        return SingleModeReport(False, None, tuple(sorted(set(significant)
                                                          | {dominant})))
    return SingleModeReport(True, dominant, (dominant,))


# ---------------------------------------------------------------------------
# Gaussian moment oracle and GP sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    std_err: float
    reference: float


def moment_oracle(gamma: float, k: int, draws: int, seed: int) -> MomentEstimate:
    """Monte Carlo E|Z|^(2k) for Z complex Gaussian with E|Z|^2 = gamma.

    The closed-form reference is k! gamma^k; k = 3 gives the factor 6 the
    kernel recursion is built on.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be non-negative")
    if k < 1:
        raise ValueError("k must be a positive integer")
    rng = derived_rng(seed, MOMENT_STREAM)
    z = complex_normal(rng, (int(draws),), variance=float(gamma))
    samples = (z.real ** 2 + z.imag ** 2) ** int(k)
    estimate = float(samples.mean())
    std_err = float(samples.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    reference = float(math.factorial(int(k)) * gamma ** int(k))
    return MomentEstimate(estimate, std_err, reference)


def gp_sample(kernel: DiagonalKernel, rep_index: int, channels: int,
              seed: int, draw: int = 0) -> ModeField:
    """Draw a field from the limiting Gaussian process.

    Every (channel, radial bin) at the kernel's mode is an independent
    circularly symmetric complex Gaussian with E|.|^2 = K(p); all other
    modes vanish.
    """
    if channels < 1:
        raise ValueError("channels must be >= 1")
    rng = derived_rng(seed, GP_STREAM, draw)
    unit = complex_normal(rng, (int(channels), 1, kernel.grid.count))
    data = unit * np.sqrt(kernel.values)[None, None, :]
    return ModeField(int(rep_index), kernel.grid, kernel.mode, kernel.mode, data)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def kernel_to_record(kernel: KernelMatrix) -> dict:
    flat = kernel.entries.reshape(-1)
    return {
        "kind": "kernel_matrix",
        "grid": [float(v) for v in kernel.grid.values],
        "mode_lo": kernel.mode_lo,
        "mode_hi": kernel.mode_hi,
        "entries": [[float(z.real), float(z.imag)] for z in flat],
        "std_err": [float(v) for v in kernel.std_err.reshape(-1)],
        "provenance": {"draws": kernel.draws, "seed": kernel.seed,
                       "config_digest": kernel.config_digest},
    }


def kernel_from_record(record: dict) -> KernelMatrix:
    if record.get("kind") != "kernel_matrix":
        raise ValueError("record is not a kernel_matrix")
    grid = RadialGrid(np.array(record["grid"], dtype=np.float64))
    lo, hi = int(record["mode_lo"]), int(record["mode_hi"])
    w, p = hi - lo + 1, grid.count
    pairs = np.asarray(record["entries"], dtype=np.float64)
    entries = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(w, w, p, p)
    std_err = np.asarray(record["std_err"], dtype=np.float64).reshape(w, w, p, p)
    prov = record.get("provenance", {})
    return KernelMatrix(grid, lo, hi, entries, std_err,
                        draws=int(prov.get("draws", 0)),
                        seed=int(prov.get("seed", 0)),
                        config_digest=str(prov.get("config_digest", "")))


def diagonal_kernel_to_record(kernel: DiagonalKernel) -> dict:
    return {
        "kind": "diagonal_kernel",
        "grid": [float(v) for v in kernel.grid.values],
        "mode": kernel.mode,
        "values": [float(v) for v in kernel.values],
    }


def diagonal_kernel_from_record(record: dict) -> DiagonalKernel:
    if record.get("kind") != "diagonal_kernel":
        raise ValueError("record is not a diagonal_kernel")
    grid = RadialGrid(np.array(record["grid"], dtype=np.float64))
    return DiagonalKernel(grid, int(record["mode"]),
                          np.asarray(record["values"], dtype=np.float64))


def save_kernel(kernel, path) -> None:
    record = (kernel_to_record(kernel) if isinstance(kernel, KernelMatrix)
              else diagonal_kernel_to_record(kernel))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, allow_nan=False)
        fh.write("\n")


def load_kernel(path):
    with open(path, "r", encoding="utf-8") as fh:
        record = json.load(fh)
    if record.get("kind") == "kernel_matrix":
        return kernel_from_record(record)
    return diagonal_kernel_from_record(record)
