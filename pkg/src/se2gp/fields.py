"""Feature fields on the plane in Fourier angular-mode form.

A field F(p) on 2D Fourier space is expanded over polar angles as

    F(p, psi) = sum_m F_m(p) exp(-i m psi)

and stored as the complex coefficients F_m sampled on a finite radial grid
(:class:`ModeField`).  The same field sampled directly on a (radial x angle)
polar grid is a :class:`PolarGridField`; conversions between the two are
exact for angularly bandlimited data.  Rigid motions of the plane act on
mode fields through phases only, which is what makes equivariance checks
exact in this representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


class BandlimitError(ValueError):
    """Angular resolution too small for the requested mode content."""


# ---------------------------------------------------------------------------
# grids and field containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing positive radial sample points (inverse length)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("radial grid must be a non-empty 1D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("radial grid values must be finite")
        if vals[0] <= 0.0 or np.any(np.diff(vals) <= 0.0):
            raise ValueError("radial grid must be positive and strictly increasing")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def linear(cls, count: int, p_max: float) -> "RadialGrid":
        """Uniform grid p_max/count, 2*p_max/count, ..., p_max."""
        if count < 1:
            raise ValueError("count must be >= 1")
        if p_max <= 0.0:
            raise ValueError("p_max must be positive")
        return cls(np.linspace(p_max / count, p_max, count))

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def p_max(self) -> float:
        return float(self.values[-1])

    def __eq__(self, other):
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Rotation angle plus translation vector of a planar rigid motion."""

    theta: float = 0.0
    t: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        two_pi = 2.0 * np.pi
        theta = float(self.theta) % two_pi
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "t", (float(self.t[0]), float(self.t[1])))


@dataclass(frozen=True, eq=False)
class ModeField:
    """Complex angular-mode coefficients on a radial grid.

    ``data[i, m - mode_lo, a]`` is the coefficient of exp(-i m psi) for
    channel i at radial bin a.  Modes outside [mode_lo, mode_hi] are zero by
    convention.  ``rep_index`` is the index of the induced group action on
    this field: a rotation by theta multiplies mode m by
    exp(i (rep_index + m) theta).
    """

    rep_index: int
    grid: RadialGrid
    mode_lo: int
    mode_hi: int
    data: np.ndarray

    def __post_init__(self):
        if self.mode_lo > self.mode_hi:
            raise ValueError("mode_lo must not exceed mode_hi")
        data = np.ascontiguousarray(self.data, dtype=np.complex128)
        expect = (data.shape[0], self.mode_hi - self.mode_lo + 1, self.grid.count)
        if data.ndim != 3 or data.shape != expect or data.shape[0] < 1:
            raise ValueError(
                f"data shape {data.shape} does not match "
                f"(channels, {expect[1]} modes, {expect[2]} radial bins)")
        if not np.all(np.isfinite(data.view(np.float64))):
            raise ValueError("field values must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "mode_lo", int(self.mode_lo))
        object.__setattr__(self, "mode_hi", int(self.mode_hi))
        object.__setattr__(self, "rep_index", int(self.rep_index))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_modes(self) -> int:
        return self.data.shape[1]

    @property
    def window(self) -> tuple[int, int]:
        return (self.mode_lo, self.mode_hi)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.mode_lo, self.mode_hi + 1)

    def mode_values(self, m: int) -> np.ndarray:
        """Values of mode m, shape (channels, radial bins); zero off-window."""
        if self.mode_lo <= m <= self.mode_hi:
            return self.data[:, m - self.mode_lo, :]
        return np.zeros((self.channels, self.grid.count), dtype=np.complex128)

    def with_window(self, mode_lo: int, mode_hi: int) -> "ModeField":
        """Re-embed into another window; nonzero content must be covered."""
        lo, hi = int(mode_lo), int(mode_hi)
        out = np.zeros((self.channels, hi - lo + 1, self.grid.count),
                       dtype=np.complex128)
        src_lo = max(self.mode_lo, lo)
        src_hi = min(self.mode_hi, hi)
        if src_lo <= src_hi:
            out[:, src_lo - lo:src_hi - lo + 1, :] = \
                self.data[:, src_lo - self.mode_lo:src_hi - self.mode_lo + 1, :]
        dropped = 0.0
        if src_lo > self.mode_lo:
            dropped += np.abs(self.data[:, :src_lo - self.mode_lo, :]).max(initial=0.0)
        if src_hi < self.mode_hi:
            dropped += np.abs(self.data[:, src_hi - self.mode_lo + 1:, :]).max(initial=0.0)
        if dropped > 0.0:
            raise ValueError("window change would drop nonzero modes")
        return ModeField(self.rep_index, self.grid, lo, hi, out)

    def norm(self) -> float:
        """L2 norm over channels, modes and radial bins."""
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True, eq=False)
class PolarGridField:
    """Field sampled on a polar grid: uniform angles psi_b = 2 pi b / A."""

    grid: RadialGrid
    data: np.ndarray  # (channels, radial bins, angle bins)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if data.ndim != 3 or data.shape[1] != self.grid.count or data.shape[2] < 2:
            raise ValueError("data must have shape (channels, radial bins, A >= 2)")
        if not np.all(np.isfinite(data.view(np.float64))):
            raise ValueError("field values must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def angular_count(self) -> int:
        return self.data.shape[2]

    @property
    def angles(self) -> np.ndarray:
        a = self.angular_count
        return 2.0 * np.pi * np.arange(a) / a


# ---------------------------------------------------------------------------
# angular analysis / synthesis
# ---------------------------------------------------------------------------

def angular_decompose(f: PolarGridField, mode_lo: int, mode_hi: int,
                      rep_index: int = 0) -> ModeField:
    """Project a polar-grid field onto modes in [mode_lo, mode_hi].

    F_m(p_a) = (1/A) sum_b f(p_a, psi_b) exp(+i m psi_b), the discrete
    analysis weight conjugate to the exp(-i m psi) synthesis convention.
    Exact when f is angularly bandlimited inside the requested window.
    """
    if mode_lo > mode_hi:
        raise ValueError("mode_lo must not exceed mode_hi")
    a = f.angular_count
    width = mode_hi - mode_lo + 1
    if width > a:
        raise BandlimitError(
            f"window of {width} modes needs at least {width} angles, got {a}")
    modes = np.arange(mode_lo, mode_hi + 1)
    weights = np.exp(1j * np.outer(f.angles, modes))  # (A, W)
    coeff = np.einsum("cab,bm->cma", f.data, weights) / a
    return ModeField(rep_index, f.grid, mode_lo, mode_hi, coeff)


def angular_reconstruct(f: ModeField, angular_count: int) -> PolarGridField:
    """Synthesize f on `angular_count` uniform angles.

    Requires A >= 2 * max(|mode_lo|, |mode_hi|) + 2 so the result still
    resolves every represented mode without aliasing.
    """
    a = int(angular_count)
    needed = 2 * max(abs(f.mode_lo), abs(f.mode_hi)) + 2
    if a < needed:
        raise BandlimitError(
            f"A={a} angles cannot hold modes in [{f.mode_lo}, {f.mode_hi}]; "
            f"need A >= {needed}")
    angles = 2.0 * np.pi * np.arange(a) / a
    phases = np.exp(-1j * np.outer(f.modes, angles))  # (W, A)
    values = np.einsum("cma,mb->cab", f.data, phases)
    return PolarGridField(f.grid, values)


# ---------------------------------------------------------------------------
# group actions
# ---------------------------------------------------------------------------

def rotate_mode_field(f: ModeField, theta: float) -> ModeField:
    """Rotate by theta: mode m picks up exp(i (rep_index + m) theta)."""
    phases = np.exp(1j * (f.rep_index + f.modes) * float(theta))
    return ModeField(f.rep_index, f.grid, f.mode_lo, f.mode_hi,
                     f.data * phases[None, :, None])


def rotate_polar_field(f: PolarGridField, bin_shift: int,
                       rep_index: int = 0) -> PolarGridField:
    """Exact rotation by theta = 2 pi bin_shift / A on the polar grid."""
    theta = 2.0 * np.pi * bin_shift / f.angular_count
    rolled = np.roll(f.data, bin_shift, axis=2)
    return PolarGridField(f.grid, np.exp(1j * rep_index * theta) * rolled)


def translate_polar_field(f: PolarGridField, t: Sequence[float]) -> PolarGridField:
    """Pointwise translation phase exp(-i t.p) on the polar grid."""
    tx, ty = float(t[0]), float(t[1])
    p = f.grid.values
    psi = f.angles
    dot = np.outer(p, np.cos(psi)) * tx + np.outer(p, np.sin(psi)) * ty
    return PolarGridField(f.grid, f.data * np.exp(-1j * dot)[None, :, :])


class TranslationResult(NamedTuple):
    field: ModeField
    truncation_residual: float


def translate_mode_field(f: ModeField, t: Sequence[float],
                         mode_margin: int) -> TranslationResult:
    """Translate by t, widening the mode window by `mode_margin`.

    The translation phase exp(-i t.p) spreads each mode over its neighbours
    with Bessel-function weights J_m(p |t|), so the result is only
    approximately bandlimited.  The computation runs on a polar grid wide
    enough that aliasing is negligible, keeps [mode_lo - margin,
    mode_hi + margin], and reports the L2 mass it had to discard just
    outside the kept window as `truncation_residual`.
    """
    if mode_margin < 0:
        raise ValueError("mode_margin must be non-negative")
    tx, ty = float(t[0]), float(t[1])
    if tx == 0.0 and ty == 0.0:
        return TranslationResult(f, 0.0)
    margin = int(mode_margin)
    buffer = max(8, margin)
    work_lo = f.mode_lo - margin - buffer
    work_hi = f.mode_hi + margin + buffer
    a = 2 * max(abs(work_lo), abs(work_hi)) + 2
    polar = angular_reconstruct(f.with_window(work_lo, work_hi), a)
    shifted = translate_polar_field(polar, (tx, ty))
    wide = angular_decompose(shifted, work_lo, work_hi, rep_index=f.rep_index)
    keep_lo = f.mode_lo - margin
    keep_hi = f.mode_hi + margin
    sl = slice(keep_lo - work_lo, keep_hi - work_lo + 1)
    kept = ModeField(f.rep_index, f.grid, keep_lo, keep_hi, wide.data[:, sl, :])
    residual = np.sqrt(float(np.sum(np.abs(wide.data[:, :sl.start, :]) ** 2))
                       + float(np.sum(np.abs(wide.data[:, sl.stop:, :]) ** 2)))
    return TranslationResult(kept, residual)


# ---------------------------------------------------------------------------
# deterministic field synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Named radial shape, evaluable at any radius >= 0."""

    kind: str
    params: tuple

    @classmethod
    def constant(cls, value) -> "RadialProfile":
        return cls("constant", (complex(value),))

    @classmethod
    def gaussian(cls, amplitude, center: float, width: float) -> "RadialProfile":
        if width <= 0.0:
            raise ValueError("width must be positive")
        return cls("gaussian", (complex(amplitude), float(center), float(width)))

    @classmethod
    def polydecay(cls, amplitude, power: float) -> "RadialProfile":
        """amplitude * (1 + r^2)^(-power/2): smooth, decays like r^-power."""
        if power < 0.0:
            raise ValueError("power must be non-negative")
        return cls("polydecay", (complex(amplitude), float(power)))

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "constant":
            (value,) = self.params
            return np.full(r.shape, value, dtype=np.complex128)
        if self.kind == "gaussian":
            amplitude, center, width = self.params
            return amplitude * np.exp(-(((r - center) / width) ** 2)) + 0j
        if self.kind == "polydecay":
            amplitude, power = self.params
            return amplitude * (1.0 + r ** 2) ** (-power / 2.0) + 0j
        raise ValueError(f"unknown profile kind '{self.kind}'")

    def is_real(self) -> bool:
        return all(np.imag(p) == 0.0 for p in self.params if isinstance(p, complex))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": _real_param(self.params[0])}
        if self.kind == "gaussian":
            return {"kind": "gaussian", "amplitude": _real_param(self.params[0]),
                    "center": self.params[1], "width": self.params[2]}
        return {"kind": "polydecay", "amplitude": _real_param(self.params[0]),
                "power": self.params[1]}

    @classmethod
    def from_dict(cls, spec: dict, where: str = "profile") -> "RadialProfile":
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError(f"{where}: expected a mapping with a 'kind' key")
        kind = spec["kind"]
        fields = {"constant": {"value"},
                  "gaussian": {"amplitude", "center", "width"},
                  "polydecay": {"amplitude", "power"}}
        if kind not in fields:
            raise ValueError(f"{where}.kind: unknown profile kind '{kind}'")
        extra = set(spec) - fields[kind] - {"kind"}
        if extra:
            raise ValueError(f"{where}: unknown key '{sorted(extra)[0]}'")
        missing = fields[kind] - set(spec)
        if missing:
            raise ValueError(f"{where}: missing key '{sorted(missing)[0]}'")
        if kind == "constant":
            return cls.constant(spec["value"])
        if kind == "gaussian":
            return cls.gaussian(spec["amplitude"], spec["center"], spec["width"])
        return cls.polydecay(spec["amplitude"], spec["power"])


def _real_param(value: complex):
    return value.real if value.imag == 0.0 else [value.real, value.imag]


def synth_field(entries: Sequence[tuple[int, int, RadialProfile]],
                grid: RadialGrid, rep_index: int = 0,
                window: tuple[int, int] | None = None,
                channels: int | None = None) -> ModeField:
    """Build a field with the listed (channel, mode, profile) contributions.

    Contributions on the same (channel, mode) add.  The declared window
    defaults to the span of the listed modes; listing a mode outside an
    explicit window is an error.
    """
    if window is None:
        if entries:
            window = (min(m for _, m, _ in entries), max(m for _, m, _ in entries))
        else:
            window = (0, 0)
    lo, hi = int(window[0]), int(window[1])
    if channels is None:
        channels = max((c for c, _, _ in entries), default=0) + 1
    data = np.zeros((channels, hi - lo + 1, grid.count), dtype=np.complex128)
    for channel, mode, profile in entries:
        if not 0 <= channel < channels:
            raise ValueError(f"channel {channel} outside 0..{channels - 1}")
        if not lo <= mode <= hi:
            raise ValueError(f"mode {mode} outside declared window [{lo}, {hi}]")
        data[channel, mode - lo, :] += profile.evaluate(grid.values)
    return ModeField(rep_index, grid, lo, hi, data)


def random_mode_field(grid: RadialGrid, window: tuple[int, int], channels: int,
                      rng: np.random.Generator, scale: float = 1.0,
                      rep_index: int = 0) -> ModeField:
    """Dense random complex field, for tests and the equivariance suite."""
    lo, hi = window
    shape = (channels, hi - lo + 1, grid.count)
    data = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return ModeField(rep_index, grid, lo, hi, data)


# ---------------------------------------------------------------------------
# serialization (bit-exact round trip)
# ---------------------------------------------------------------------------

def mode_field_to_record(f: ModeField) -> dict:
    flat = f.data.reshape(-1)  # row-major: channel, mode, radial
    return {
        "kind": "mode_field",
        "rep_index": f.rep_index,
        "grid": [float(v) for v in f.grid.values],
        "channels": f.channels,
        "mode_lo": f.mode_lo,
        "mode_hi": f.mode_hi,
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def mode_field_from_record(record: dict) -> ModeField:
    if record.get("kind") != "mode_field":
        raise ValueError("record is not a mode_field")
    grid = RadialGrid(np.array(record["grid"], dtype=np.float64))
    channels = int(record["channels"])
    lo, hi = int(record["mode_lo"]), int(record["mode_hi"])
    pairs = np.asarray(record["data"], dtype=np.float64)
    if pairs.shape != (channels * (hi - lo + 1) * grid.count, 2):
        raise ValueError("data length does not match declared shape")
    data = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(channels, hi - lo + 1,
                                                    grid.count)
    return ModeField(int(record["rep_index"]), grid, lo, hi, data)


def save_mode_field(f: ModeField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mode_field_to_record(f), fh, allow_nan=False)
        fh.write("\n")


def load_mode_field(path) -> ModeField:
    with open(path, "r", encoding="utf-8") as fh:
        return mode_field_from_record(json.load(fh))
