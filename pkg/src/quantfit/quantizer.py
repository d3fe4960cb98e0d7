"""Quantizer models: threshold sets, simulated ADC front ends, INL, servo
measurement of transition voltages, and level-file I/O.

A quantizer with ``K`` output codes is fully described by its ``K - 1``
transition voltages ``T_1 < T_2 < ... < T_{K-1}`` together with the nominal
input range ``(v_lo, v_hi)``.  Code ``c`` is produced for inputs in
``[T_c, T_{c+1})``; inputs below ``T_1`` give code 0 and inputs at or above
``T_{K-1}`` give code ``K - 1`` (saturation at both ends).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GenerationError, SearchRangeError

__all__ = [
    "QuantizerModel",
    "InlTable",
    "make_uniform",
    "make_resistor_ladder",
    "perturb_levels",
    "quantize",
    "reconstruction_value",
    "compute_inl",
    "servo_loop_measure",
    "write_levels",
    "read_levels",
]

# Retry budget for rejection sampling in the randomized constructors.
_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class QuantizerModel:
    """Transition voltages of a quantizer plus its nominal input range.

    Attributes
    ----------
    levels : np.ndarray
        Transition voltages ``T_1 .. T_{K-1}``, strictly increasing, all
        inside the open interval ``(v_lo, v_hi)``.
    v_lo, v_hi : float
        Nominal full-scale range.  The nominal code width is
        ``delta = (v_hi - v_lo) / K``.
    """

    levels: np.ndarray
    v_lo: float
    v_hi: float

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        if levels.ndim != 1 or levels.size < 1:
            raise ValueError("levels must be a 1-D array with at least one entry")
        if not np.all(np.isfinite(levels)):
            raise ValueError("levels must be finite")
        if not self.v_lo < self.v_hi:
            raise ValueError("v_lo must be strictly below v_hi")
        if not np.all(np.diff(levels) > 0):
            raise ValueError("levels must be strictly increasing")
        if levels[0] <= self.v_lo or levels[-1] >= self.v_hi:
            raise ValueError("levels must lie strictly inside (v_lo, v_hi)")

    @property
    def n_codes(self) -> int:
        return self.levels.size + 1

    @property
    def delta(self) -> float:
        """Nominal code width (full-scale span over code count)."""
        return (self.v_hi - self.v_lo) / self.n_codes

    @cached_property
    def _recon_table(self) -> np.ndarray:
        # Midpoints between adjacent transitions for interior codes; the
        # two saturated codes extend half a nominal step beyond the end
        # transitions.
        t = self.levels
        table = np.empty(self.n_codes)
        table[0] = t[0] - 0.5 * self.delta
        table[-1] = t[-1] + 0.5 * self.delta
        if self.n_codes > 2:
            table[1:-1] = 0.5 * (t[:-1] + t[1:])
        return table


@dataclass(frozen=True)
class InlTable:
    """Integral nonlinearity of a threshold set.

    ``values[i]`` is the deviation of transition ``T_{i+1}`` from the
    least-squares line through all transitions, expressed in nominal code
    widths.  ``gain`` (volts per code) and ``offset`` (volts) describe that
    line: ``fit(c) = offset + gain * c`` for code index ``c = 1 .. K-1``.
    """

    values: np.ndarray
    gain: float
    offset: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def make_uniform(bits: int, v_lo: float, v_hi: float) -> QuantizerModel:
    """Ideal quantizer with ``2**bits`` codes on an even grid."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if not v_lo < v_hi:
        raise ValueError("v_lo must be strictly below v_hi")
    k = 2**bits
    delta = (v_hi - v_lo) / k
    levels = v_lo + delta * np.arange(1, k)
    return QuantizerModel(levels=levels, v_lo=v_lo, v_hi=v_hi)


def make_resistor_ladder(
    bits: int,
    v_lo: float,
    v_hi: float,
    resistance_sigma_rel: float,
    target_max_inl: float | None = None,
    seed=None,
) -> QuantizerModel:
    """Quantizer whose transitions are taps of a resistor string.

    Each of the ``2**bits`` resistors is drawn i.i.d. from a normal
    distribution with unit mean and relative standard deviation
    ``resistance_sigma_rel`` (non-positive draws are rejected and redrawn).
    Transition ``c`` sits at the voltage divider tap after the first ``c``
    resistors.

    When ``target_max_inl`` is given, the deviations from the ideal grid
    are rescaled by a single factor so the worst-case INL magnitude equals
    exactly that many code widths.  Rescaling preserves the INL shape; the
    least-squares line fit is linear in the data, so the scaled set attains
    the target exactly.  A :class:`GenerationError` is raised if the draw
    has zero INL (nothing to scale) or if scaling breaks monotonicity.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if not v_lo < v_hi:
        raise ValueError("v_lo must be strictly below v_hi")
    if resistance_sigma_rel < 0:
        raise ValueError("resistance_sigma_rel must be >= 0")
    if target_max_inl is not None and target_max_inl <= 0:
        raise ValueError("target_max_inl must be > 0 when given")

    k = 2**bits
    rng = np.random.default_rng(seed)
    r = rng.normal(1.0, resistance_sigma_rel, size=k)
    for _ in range(_MAX_REDRAWS):
        bad = r <= 0
        if not bad.any():
            break
        r[bad] = rng.normal(1.0, resistance_sigma_rel, size=int(bad.sum()))
    else:
        raise GenerationError("could not draw positive resistances")

    span = v_hi - v_lo
    levels = v_lo + span * (np.cumsum(r)[:-1] / np.sum(r))

    if target_max_inl is not None:
        nominal = v_lo + (span / k) * np.arange(1, k)
        worst = _inl_of_levels(levels, span / k).max_abs
        if worst <= 1e-9:
            # at rounding-noise level the "deviations" are not a real shape;
            # scaling them up would manufacture a quantizer out of ulps
            raise GenerationError(
                "ladder draw is numerically linear; cannot scale to an INL target"
            )
        levels = nominal + (target_max_inl / worst) * (levels - nominal)
        if not np.all(np.diff(levels) > 0):
            raise GenerationError(
                "scaling to the requested INL target breaks monotonicity"
            )
        if levels[0] <= v_lo or levels[-1] >= v_hi:
            raise GenerationError(
                "scaling to the requested INL target pushes levels out of range"
            )

    return QuantizerModel(levels=levels, v_lo=v_lo, v_hi=v_hi)


def perturb_levels(model: QuantizerModel, amplitude: float, seed=None) -> QuantizerModel:
    """Add independent uniform offsets in ``(-amplitude, +amplitude)`` code
    widths to every transition.

    ``amplitude`` must stay below half a code width; beyond that adjacent
    transitions of an ideal quantizer could swap order no matter what.
    Draws that still break monotonicity (or leave the valid range) are
    redrawn level-by-level: only the offending entries are resampled, so
    the accepted entries keep their original offsets.
    """
    if not 0 <= amplitude < 0.5:
        raise ValueError("amplitude must lie in [0, 0.5) code widths")
    rng = np.random.default_rng(seed)
    base = model.levels
    width = amplitude * model.delta
    new = base + rng.uniform(-width, width, size=base.size)
    for _ in range(_MAX_REDRAWS):
        ok = np.ones(base.size, dtype=bool)
        ok[1:] &= np.diff(new) > 0
        ok[:-1] &= np.diff(new) > 0
        ok[0] &= new[0] > model.v_lo
        ok[-1] &= new[-1] < model.v_hi
        if ok.all():
            return QuantizerModel(levels=new, v_lo=model.v_lo, v_hi=model.v_hi)
        bad = ~ok
        new[bad] = base[bad] + rng.uniform(-width, width, size=int(bad.sum()))
    raise GenerationError("could not perturb levels into a monotone set")


def quantize(model: QuantizerModel, x):
    """Map input voltages to output codes.

    Accepts a scalar or array; returns ``int`` or an int64 array of the
    same shape.  Uses the half-open convention ``[T_c, T_{c+1})`` and
    saturates at codes ``0`` and ``K - 1``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("inputs to quantize must be finite")
    codes = np.searchsorted(model.levels, arr, side="right")
    if arr.ndim == 0:
        return int(codes)
    return codes.astype(np.int64)


def reconstruction_value(model: QuantizerModel, code):
    """Representative input voltage for each output code.

    Interior codes map to the midpoint of their decision interval; the two
    saturated codes map half a nominal step beyond the end transitions.
    """
    c = np.asarray(code)
    if not np.issubdtype(c.dtype, np.integer):
        raise ValueError("codes must be integers")
    if c.size and (c.min() < 0 or c.max() >= model.n_codes):
        raise ValueError(f"codes must lie in [0, {model.n_codes - 1}]")
    out = model._recon_table[c]
    if c.ndim == 0:
        return float(out)
    return out


def _inl_of_levels(levels: np.ndarray, delta: float) -> InlTable:
    c = np.arange(1, levels.size + 1, dtype=float)
    gain, offset = np.polyfit(c, levels, 1)
    values = (levels - (offset + gain * c)) / delta
    return InlTable(values=values, gain=float(gain), offset=float(offset))


def compute_inl(model: QuantizerModel) -> InlTable:
    """Integral nonlinearity relative to the least-squares line through the
    transition voltages, in nominal code widths."""
    if model.n_codes < 4:
        raise ValueError("INL needs at least 4 codes (3 transitions)")
    return _inl_of_levels(model.levels, model.delta)


def servo_loop_measure(
    adc,
    noise_sigma: float,
    target_code: int,
    samples_per_step: int,
    tolerance: float,
    search_lo: float,
    search_hi: float,
    seed=None,
) -> float:
    """Locate the transition voltage of ``target_code`` on a black-box ADC.

    ``adc`` is a callable mapping an array of DC input voltages to output
    codes.  At each probe voltage ``v`` the servo applies
    ``samples_per_step`` inputs ``v + eta`` with ``eta ~ N(0, noise_sigma)``
    (fresh draws every step; ``noise_sigma = 0`` probes ``v`` directly) and
    measures the fraction of conversions at or above ``target_code``.  The
    transition is the voltage where that fraction crosses one half, found by
    bisection on ``[search_lo, search_hi]`` until the bracket is narrower
    than ``tolerance``.

    Raises :class:`SearchRangeError` when the crossing does not lie inside
    the initial bracket.
    """
    if samples_per_step < 1:
        raise ValueError("samples_per_step must be >= 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if not search_lo < search_hi:
        raise ValueError("search_lo must be strictly below search_hi")
    rng = np.random.default_rng(seed)

    def frac_at_or_above(v: float) -> float:
        probes = np.full(samples_per_step, v)
        if noise_sigma > 0:
            probes = probes + rng.normal(0.0, noise_sigma, size=samples_per_step)
        codes = np.asarray(adc(probes))
        return float(np.mean(codes >= target_code))

    lo, hi = float(search_lo), float(search_hi)
    if not (frac_at_or_above(lo) < 0.5 <= frac_at_or_above(hi)):
        raise SearchRangeError(
            f"transition of code {target_code} is not bracketed by "
            f"[{search_lo}, {search_hi}]"
        )
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if frac_at_or_above(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def write_levels(model: QuantizerModel, path) -> None:
    """Write a threshold set as text: a header line ``K v_lo v_hi`` followed
    by one transition voltage per line, 17 significant digits (enough to
    reproduce the binary values exactly on read)."""
    lines = [f"{model.n_codes} {model.v_lo:.17g} {model.v_hi:.17g}"]
    lines.extend(f"{t:.17g}" for t in model.levels)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_levels(path) -> QuantizerModel:
    """Read a threshold set written by :func:`write_levels`."""
    with open(path) as fh:
        raw = [line.strip() for line in fh]
    rows = [line for line in raw if line and not line.startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty level file")
    head = rows[0].split()
    if len(head) != 3:
        raise ValueError(f"{path}: header must be 'K v_lo v_hi'")
    k = int(head[0])
    v_lo, v_hi = float(head[1]), float(head[2])
    levels = np.array([float(line) for line in rows[1:]])
    if levels.size != k - 1:
        raise ValueError(
            f"{path}: header promises {k - 1} levels, found {levels.size}"
        )
    return QuantizerModel(levels=levels, v_lo=v_lo, v_hi=v_hi)
