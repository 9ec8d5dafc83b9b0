"""Finite-multiplicity steerable network in angular-mode space.

A network is a stack of blocks, each a linear map against a single-mode
complex filter followed by a cubic nonlinearity.  The linear map acts
pointwise in the radial variable p and shifts the mode window:

    Z_{i,n}(p) = sum_j conj(Omega_{ij}(p)) Y_{j, n+q}(p)

with one angular mode q per layer; keeping a single filter mode is exactly
what makes the layer an intertwiner of the rotation actions.  The cubic
nonlinearity is the mode-space form of the pointwise map conj(Z) Z Z:

    Y_m = sum_{n,k} conj(Z_k) Z_n Z_{m+k-n}

which triples the mode support.  Mode windows grow accordingly; nothing is
silently truncated.  The same network can be run pointwise on a polar grid
(:func:`polar_grid_forward`), where both steps are plain multiplications;
the two routes agree exactly for angularly bandlimited inputs and serve as
mutual oracles.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft

from ._rng import CONSTRAINT_STREAM, FILTER_STREAM, derived_rng
from .fields import (BandlimitError, ModeField, PolarGridField, RadialGrid,
                     RadialProfile, angular_decompose)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NetworkConfig:
    """Shape, prior and grid of one network.

    ``depth`` counts (linear, cubic) blocks.  ``widths`` lists the channel
    multiplicities per layer and ``filter_modes`` the single angular mode of
    each linear map.  With ``final_linear`` a trailing linear layer (no
    nonlinearity) follows the last block; ``widths`` and ``filter_modes``
    then each carry one extra entry.
    """

    depth: int
    widths: tuple[int, ...]
    filter_modes: tuple[int, ...]
    sigma_w_sq: float
    grid: RadialGrid
    seed: int
    input_window: tuple[int, int]
    final_linear: bool = False

    def __post_init__(self):
        object.__setattr__(self, "depth", int(self.depth))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "filter_modes",
                           tuple(int(q) for q in self.filter_modes))
        object.__setattr__(self, "sigma_w_sq", float(self.sigma_w_sq))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "input_window",
                           (int(self.input_window[0]), int(self.input_window[1])))
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        n_linear = self.depth + (1 if self.final_linear else 0)
        if len(self.widths) != n_linear + 1:
            raise ValueError(
                f"widths must have {n_linear + 1} entries, got {len(self.widths)}")
        if len(self.filter_modes) != n_linear:
            raise ValueError(
                f"filter_modes must have {n_linear} entries, "
                f"got {len(self.filter_modes)}")
        if any(w < 1 for w in self.widths):
            raise ValueError("widths must be positive")
        if self.sigma_w_sq <= 0.0:
            raise ValueError("sigma_w_sq must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.input_window[0] > self.input_window[1]:
            raise ValueError("input_window must satisfy lo <= hi")

    @property
    def n_linear(self) -> int:
        return self.depth + (1 if self.final_linear else 0)

    def canonical_dict(self) -> dict:
        return {
            "depth": self.depth,
            "widths": list(self.widths),
            "filter_modes": list(self.filter_modes),
            "sigma_w_sq": self.sigma_w_sq,
            "grid": [float(v) for v in self.grid.values],
            "seed": self.seed,
            "input_window": list(self.input_window),
            "final_linear": self.final_linear,
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cubic_window(mode_lo: int, mode_hi: int) -> tuple[int, int]:
    """Support of the cubic map applied to a window: tripled about itself."""
    return 2 * mode_lo - mode_hi, 2 * mode_hi - mode_lo


def window_evolution(config: NetworkConfig) -> list[tuple[int, int]]:
    """Mode windows after each stage: input, then linear/cubic per block."""
    win = config.input_window
    stages = [win]
    for l in range(config.depth):
        q = config.filter_modes[l]
        win = (win[0] - q, win[1] - q)
        stages.append(win)
        win = cubic_window(*win)
        stages.append(win)
    if config.final_linear:
        q = config.filter_modes[config.depth]
        win = (win[0] - q, win[1] - q)
        stages.append(win)
    return stages


def required_angular_count(config: NetworkConfig) -> int:
    """Smallest A that keeps every stage of the polar route alias-free."""
    return max(2 * max(abs(lo), abs(hi)) + 2 for lo, hi in window_evolution(config))


# ---------------------------------------------------------------------------
# filters and their prior
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LayerFilters:
    """Single-mode filter bank of one linear layer.

    Entries Omega_{ij}(p_a) = scale * raw[a, i, j]; ``raw`` keeps the
    radial-first layout the layer map consumes, ``values`` materializes the
    conventional (out, in, radial) view.
    """

    mode: int
    raw: np.ndarray  # (radial bins, n_out, n_in) complex
    scale: float

    def __post_init__(self):
        raw = np.ascontiguousarray(self.raw, dtype=np.complex128)
        if raw.ndim != 3:
            raise ValueError("filter values must be a 3D array")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "mode", int(self.mode))
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def from_values(cls, mode: int, values: np.ndarray) -> "LayerFilters":
        """Build from Omega indexed (out channel, in channel, radial bin)."""
        values = np.asarray(values, dtype=np.complex128)
        if values.ndim != 3:
            raise ValueError("values must be (n_out, n_in, radial bins)")
        if not np.all(np.isfinite(values.view(np.float64))):
            raise ValueError("filter values must be finite")
        return cls(mode, np.ascontiguousarray(values.transpose(2, 0, 1)), 1.0)

    @property
    def n_out(self) -> int:
        return self.raw.shape[1]

    @property
    def n_in(self) -> int:
        return self.raw.shape[2]

    @property
    def radial_count(self) -> int:
        return self.raw.shape[0]

    @property
    def values(self) -> np.ndarray:
        return self.raw.transpose(1, 2, 0) * self.scale


@dataclass(frozen=True)
class FilterStack:
    layers: tuple[LayerFilters, ...]


def sample_filters(config: NetworkConfig, seed: int | None = None,
                   draw: int = 0) -> FilterStack:
    """Draw one network's filters from the Gaussian prior.

    Each entry is an independent circularly symmetric complex Gaussian with
    E|Omega|^2 = sigma_w_sq / (2 n_in), i.e. real and imaginary parts of
    variance sigma_w_sq / (4 n_in).  The stream for layer l of draw d is
    derived from (seed, d, l), so repeated or parallel sampling is
    reproducible entry by entry.
    """
    return _sample_filters(config, seed, draw, None)


def _sample_filters(config: NetworkConfig, seed: int | None, draw: int,
                    scratch: list[np.ndarray] | None) -> FilterStack:
    seed = config.seed if seed is None else int(seed)
    layers = []
    p = config.grid.count
    for l in range(config.n_linear):
        n_out, n_in = config.widths[l + 1], config.widths[l]
        rng = derived_rng(seed, FILTER_STREAM, draw, l)
        if scratch is None:
            raw = rng.standard_normal(size=(p, n_out, n_in, 2))
        else:
            raw = scratch[l]
            rng.standard_normal(out=raw)
        # unit-variance components; E|Omega|^2 = sigma_w_sq/(2 n_in) via scale
        scale = math.sqrt(config.sigma_w_sq / (4.0 * n_in))
        layers.append(LayerFilters(config.filter_modes[l],
                                   raw.view(np.complex128)[..., 0], scale))
    return FilterStack(tuple(layers))


def _filter_scratch(config: NetworkConfig) -> list[np.ndarray]:
    p = config.grid.count
    return [np.empty((p, config.widths[l + 1], config.widths[l], 2))
            for l in range(config.n_linear)]


# ---------------------------------------------------------------------------
# layer maps
# ---------------------------------------------------------------------------

def apply_linear(filters: LayerFilters, y: ModeField) -> ModeField:
    """One linear layer: conjugated filter times the q-shifted modes.

    The output window is the input window shifted by -q and the induced
    action index advances by q (validated against the polar-grid oracle).
    """
    if y.channels != filters.n_in:
        raise ValueError(
            f"field has {y.channels} channels, filters expect {filters.n_in}")
    if y.grid.count != filters.radial_count:
        raise ValueError("field and filters disagree on radial bin count")
    q = filters.mode
    # conj(Omega) @ y == conj(Omega_raw @ conj(y)) * scale, batched over p
    yt = np.ascontiguousarray(y.data.conj().transpose(2, 0, 1))
    z = np.matmul(filters.raw, yt).conj().transpose(1, 2, 0) * filters.scale
    return ModeField(y.rep_index + q, y.grid, y.mode_lo - q, y.mode_hi - q, z)


def apply_cubic(z: ModeField, method: str = "fft") -> ModeField:
    """Cubic nonlinearity in mode space; output window is exactly tripled.

    ``method`` selects the direct triple sum ("naive") or the FFT-based
    double convolution ("fft"); the two agree to rounding and serve as
    mutual checks.
    """
    if method not in ("naive", "fft"):
        raise ValueError("method must be 'naive' or 'fft'")
    lo, hi = z.mode_lo, z.mode_hi
    if z.n_modes == 1:
        # single mode: both routes reduce to |Z|^2 Z at the same mode
        data = (z.data.conj() * z.data) * z.data
    elif method == "naive":
        data = _cubic_naive(z.data, lo, hi)
    else:
        data = _cubic_fft(z.data)
    out_lo, out_hi = cubic_window(lo, hi)
    return ModeField(z.rep_index, z.grid, out_lo, out_hi, data)


def _cubic_naive(data: np.ndarray, lo: int, hi: int) -> np.ndarray:
    c, w, p = data.shape
    out = np.zeros((c, 3 * w - 2, p), dtype=np.complex128)
    conj = data.conj()
    out_lo = 2 * lo - hi
    for im in range(3 * w - 2):
        m = out_lo + im
        acc = out[:, im, :]
        for ik in range(w):
            k = lo + ik
            n_min = max(lo, m + k - hi)
            n_max = min(hi, m + k - lo)
            if n_min > n_max:
                continue
            idx_n = np.arange(n_min - lo, n_max - lo + 1)
            idx_t = (m + k - 2 * lo) - idx_n  # index of the m+k-n factor
            acc += conj[:, ik, :] * np.sum(data[:, idx_n, :] * data[:, idx_t, :],
                                           axis=1)
    return out


def _cubic_fft(data: np.ndarray) -> np.ndarray:
    w = data.shape[1]
    n_out = 3 * w - 2
    size = scipy.fft.next_fast_len(n_out)
    fz = np.fft.fft(data, n=size, axis=1)
    frev = np.fft.fft(data.conj()[:, ::-1, :], n=size, axis=1)
    y = np.fft.ifft(fz * fz * frev, axis=1)[:, :n_out, :]
    return np.ascontiguousarray(y)


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForwardRecord:
    """All intermediates of one forward pass."""

    input: ModeField
    pre_activations: tuple[ModeField, ...]
    activations: tuple[ModeField, ...]
    has_final_linear: bool = False

    def activation(self, layer: int) -> ModeField:
        """Y^layer: the input for layer 0, else the post-cubic field."""
        if layer == 0:
            return self.input
        if 1 <= layer <= len(self.activations):
            return self.activations[layer - 1]
        raise IndexError(f"no activation for layer {layer}")

    def preactivation(self, layer: int) -> ModeField:
        return self.pre_activations[layer]

    @property
    def output(self) -> ModeField:
        if self.has_final_linear:
            return self.pre_activations[-1]
        return self.activation(len(self.activations))


def _check_stack(config: NetworkConfig, filters: FilterStack) -> None:
    if len(filters.layers) != config.n_linear:
        raise ValueError(
            f"filter stack has {len(filters.layers)} layers, "
            f"config expects {config.n_linear}")
    for l, layer in enumerate(filters.layers):
        if (layer.n_out, layer.n_in) != (config.widths[l + 1], config.widths[l]):
            raise ValueError(f"layer {l} filters shaped "
                             f"({layer.n_out}, {layer.n_in}), config expects "
                             f"({config.widths[l + 1]}, {config.widths[l]})")
        if layer.mode != config.filter_modes[l]:
            raise ValueError(f"layer {l} filter mode {layer.mode} != "
                             f"config mode {config.filter_modes[l]}")
        if layer.radial_count != config.grid.count:
            raise ValueError(f"layer {l} radial count mismatch")


def forward(config: NetworkConfig, filters: FilterStack,
            x: ModeField) -> ForwardRecord:
    """Run the network: alternate linear and cubic, depth times."""
    _check_stack(config, filters)
    if x.channels != config.widths[0]:
        raise ValueError(
            f"input has {x.channels} channels, config expects {config.widths[0]}")
    if x.grid != config.grid:
        raise ValueError("input grid differs from config grid")
    y = x
    zs: list[ModeField] = []
    ys: list[ModeField] = []
    for l in range(config.depth):
        z = apply_linear(filters.layers[l], y)
        zs.append(z)
        y = apply_cubic(z)
        ys.append(y)
    if config.final_linear:
        zs.append(apply_linear(filters.layers[config.depth], y))
    return ForwardRecord(x, tuple(zs), tuple(ys), config.final_linear)


@dataclass(frozen=True)
class PolarForwardRecord:
    input: PolarGridField
    pre_activations: tuple[PolarGridField, ...]
    activations: tuple[PolarGridField, ...]
    has_final_linear: bool = False

    @property
    def output(self) -> PolarGridField:
        if self.has_final_linear:
            return self.pre_activations[-1]
        return self.activations[-1] if self.activations else self.input


def polar_grid_forward(config: NetworkConfig, filters: FilterStack,
                       x: PolarGridField,
                       return_record: bool = False):
    """Run the network pointwise on a polar grid.

    Per grid point the linear step multiplies by the conjugated filter
    synthesized at its single mode, conj(Omega(p)) exp(+i q psi), and the
    nonlinearity is conj(Z) Z Z.  Exact (up to rounding) whenever the angle
    count resolves every mode window the network reaches, so this is the
    cross-validation oracle for :func:`forward`.
    """
    _check_stack(config, filters)
    if x.channels != config.widths[0]:
        raise ValueError(
            f"input has {x.channels} channels, config expects {config.widths[0]}")
    if x.grid != config.grid:
        raise ValueError("input grid differs from config grid")
    needed = required_angular_count(config)
    if x.angular_count < needed:
        raise BandlimitError(
            f"A={x.angular_count} angles alias this network's mode content; "
            f"need A >= {needed}")
    angles = x.angles

    def linear(layer: LayerFilters, y: PolarGridField) -> PolarGridField:
        yt = np.ascontiguousarray(y.data.conj().transpose(1, 0, 2))
        z = np.matmul(layer.raw, yt).conj().transpose(1, 0, 2) * layer.scale
        z = z * np.exp(1j * layer.mode * angles)[None, None, :]
        return PolarGridField(x.grid, z)

    y = x
    zs: list[PolarGridField] = []
    ys: list[PolarGridField] = []
    for l in range(config.depth):
        z = linear(filters.layers[l], y)
        zs.append(z)
        y = PolarGridField(x.grid, (z.data.conj() * z.data) * z.data)
        ys.append(y)
    if config.final_linear:
        zs.append(linear(filters.layers[config.depth], y))
    record = PolarForwardRecord(x, tuple(zs), tuple(ys), config.final_linear)
    return record if return_record else record.output


def decompose_output(config: NetworkConfig, field: PolarGridField,
                     input_rep: int = 0) -> ModeField:
    """Project a polar-route output onto the window the mode route reaches."""
    lo, hi = window_evolution(config)[-1]
    k = input_rep + sum(config.filter_modes)
    return angular_decompose(field, lo, hi, rep_index=k)


# ---------------------------------------------------------------------------
# coordinate-space steerable filters and the intertwiner constraint
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoordFilter:
    """Rotation-block filter R(r) * rot(freq * phi) on the plane."""

    profile: RadialProfile
    freq: int


def build_coord_filter(profile: RadialProfile, m: int, n: int) -> CoordFilter:
    """Filter mapping a frequency-n input field to a frequency-m output."""
    if not profile.is_real():
        raise ValueError("coordinate filters need a real radial profile")
    return CoordFilter(profile, int(m) - int(n))


def rotation_block(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def eval_coord_filter(fl: CoordFilter, r_vec: Sequence[float]) -> np.ndarray:
    """The 2x2 filter value at a point (rotation block scaled by R(r))."""
    x, y = float(r_vec[0]), float(r_vec[1])
    r = math.hypot(x, y)
    phi = math.atan2(y, x)  # 0 at the origin, where the block degenerates to I
    radial = complex(fl.profile.evaluate(np.array([r]))[0])
    return radial.real * rotation_block(fl.freq * phi)


def check_kernel_constraint(filter_like, rho_in_freq: int, rho_out_freq: int,
                            trials: int, seed: int) -> float:
    """Worst violation of the intertwiner constraint over random probes.

    Checks omega(g r) = rho_out(g) omega(r) rho_in(g^-1) for `trials` random
    rotations g and points r, with rho the 2D rotation representation of the
    given frequency.  Returns the max Frobenius deviation; a single-mode
    filter with freq = rho_out_freq - rho_in_freq satisfies it identically.
    """
    if isinstance(filter_like, CoordFilter):
        evaluate: Callable = lambda rv: eval_coord_filter(filter_like, rv)
    elif callable(filter_like):
        evaluate = filter_like
    else:
        raise TypeError("filter_like must be a CoordFilter or a callable")
    rng = derived_rng(seed, CONSTRAINT_STREAM)
    worst = 0.0
    for _ in range(int(trials)):
        theta = rng.uniform(0.0, 2.0 * np.pi)
        radius = rng.uniform(0.05, 3.0)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        rv = np.array([radius * np.cos(angle), radius * np.sin(angle)])
        lhs = np.asarray(evaluate(rotation_block(theta) @ rv))
        rhs = (rotation_block(rho_out_freq * theta)
               @ np.asarray(evaluate(rv))
               @ rotation_block(-rho_in_freq * theta))
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst
