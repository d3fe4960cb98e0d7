"""Periodic test signals, their basis expansions, and simulated acquisition.

Signals are linear combinations of periodic basis functions evaluated at
the fractional phase ``frac(n * lam)`` of each sample index ``n``, where
``lam`` is the signal frequency as a fraction of the sampling rate.  The
sample at index ``n`` is ``S[n]' theta`` with ``S[n]`` the basis vector at
that phase.
"""

from __future__ import annotations

import configparser
import csv
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quantizer import QuantizerModel, quantize, read_levels, write_levels

__all__ = [
    "frac",
    "phase_fraction",
    "BasisSet",
    "sine_basis",
    "example_basis",
    "get_basis",
    "ParamVector",
    "eval_sample_vector",
    "synth",
    "AcquisitionRecord",
    "acquire",
    "write_record",
    "read_record",
]


def frac(u):
    """Fractional part with floor convention: ``u - floor(u)``, in [0, 1).

    Works on scalars and arrays; negative inputs wrap upward, e.g.
    ``frac(-0.25) == 0.75``.
    """
    arr = np.asarray(u, dtype=float)
    out = arr - np.floor(arr)
    # floor(u) == u gives 0 exactly, so out < 1 always holds for finite u.
    if arr.ndim == 0:
        return float(out)
    return out


def phase_fraction(n, lam: float):
    """Fractional phase ``frac(n * lam)`` computed in extended precision.

    For sample indices up to ~1e6 the product ``n * lam`` loses enough
    trailing bits in float64 that phases drift by ~1e-11 — enough to move
    samples across narrow phase-bin edges.  Accumulating in long double
    keeps the error below ~1e-13 over that range.

    When ``n * lam`` is mathematically an exact integer but ``lam`` carries
    float64 representation error, the computed phase lands a few ulps below
    1.0 instead of at 0.0 — the wrong side of the phase circle's seam.
    Phases closer to 1.0 than the input's own rounding uncertainty
    (``|n * lam| * 2**-50``) are therefore snapped to 0.
    """
    prod = np.asarray(n, dtype=np.longdouble) * np.longdouble(lam)
    u = prod - np.floor(prod)
    tol = np.maximum(np.abs(prod), 1.0) * np.longdouble(2.0**-50)
    u = np.where(1.0 - u < tol, np.longdouble(0.0), u)
    out = np.asarray(u, dtype=np.float64)
    # Rounding on the way back to float64 can also land exactly on 1.0,
    # which is the same phase as 0.0.
    out = np.where(out >= 1.0, out - 1.0, out)
    if np.ndim(n) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BasisSet:
    """Named collection of periodic basis functions of the phase in [0, 1)."""

    name: str
    funcs: tuple[Callable, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.funcs) != len(self.labels) or not self.funcs:
            raise ValueError("funcs and labels must be non-empty and match")

    @property
    def size(self) -> int:
        return len(self.funcs)


def sine_basis() -> BasisSet:
    """Sine, cosine, and constant: the three-parameter sinusoid model."""
    return BasisSet(
        name="sine",
        funcs=(
            lambda u: np.sin(2.0 * np.pi * u),
            lambda u: np.cos(2.0 * np.pi * u),
            lambda u: np.ones_like(np.asarray(u, dtype=float)),
        ),
        labels=("sin", "cos", "dc"),
    )


def example_basis() -> BasisSet:
    """A deliberately non-sinusoidal pair: a triangle-like arccos(cos) term
    and a double-frequency sine."""
    return BasisSet(
        name="example",
        funcs=(
            lambda u: np.arccos(np.cos(2.0 * np.pi * u)),
            lambda u: np.sin(4.0 * np.pi * u),
        ),
        labels=("arccos_cos", "sin2"),
    )


_BASES = {"sine": sine_basis, "example": example_basis}


def get_basis(name: str) -> BasisSet:
    try:
        return _BASES[name]()
    except KeyError:
        raise ValueError(f"unknown basis {name!r}; choose from {sorted(_BASES)}")


@dataclass(frozen=True)
class ParamVector:
    """Signal coefficients plus the noise standard deviation (if known).

    ``sigma = 0`` is allowed so degenerate noiseless scenarios can be
    synthesized and studied; estimation paths that need a positive scale
    enforce that themselves.
    """

    theta: np.ndarray
    sigma: float | None = None

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta must be a 1-D vector")
        if self.sigma is not None and not self.sigma >= 0:
            raise ValueError("sigma must be >= 0 when given")


def eval_sample_vector(basis: BasisSet, n, lam: float):
    """Basis vector(s) at sample index ``n``.

    Returns shape ``(size,)`` for a scalar index and ``(len(n), size)`` for
    an index array.
    """
    u = phase_fraction(n, lam)
    cols = [f(u) for f in basis.funcs]
    if np.ndim(n) == 0:
        return np.array(cols, dtype=float)
    return np.column_stack(cols)


def synth(params: ParamVector, basis: BasisSet, n, lam: float):
    """Noise-free signal value(s) ``S[n]' theta``."""
    if params.theta.size != basis.size:
        raise ValueError(
            f"theta has {params.theta.size} entries but basis {basis.name!r} "
            f"has {basis.size} functions"
        )
    s = eval_sample_vector(basis, n, lam)
    return s @ params.theta


@dataclass(frozen=True)
class AcquisitionRecord:
    """Output codes of one simulated (or imported) acquisition run."""

    codes: np.ndarray
    lam: float
    seed: int | None
    quantizer: QuantizerModel
    basis_name: str = "sine"
    noise: str = "gaussian"

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if not np.issubdtype(codes.dtype, np.integer):
            raise ValueError("codes must be integers")
        codes = codes.astype(np.int64)
        object.__setattr__(self, "codes", codes)
        if codes.ndim != 1 or codes.size < 1:
            raise ValueError("codes must be a non-empty 1-D array")
        k = self.quantizer.n_codes
        if codes.min() < 0 or codes.max() >= k:
            raise ValueError(f"codes must lie in [0, {k - 1}]")

    @property
    def n_samples(self) -> int:
        return self.codes.size


def acquire(
    params: ParamVector,
    basis: BasisSet,
    lam: float,
    n_samples: int,
    model: QuantizerModel,
    seed=None,
    noise: str = "gaussian",
) -> AcquisitionRecord:
    """Simulate one acquisition: synthesize, add i.i.d. noise, quantize.

    ``noise`` selects the distribution shape: ``"gaussian"`` or
    ``"uniform"`` (zero-mean, matched standard deviation).  The run is
    fully determined by ``seed``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if params.sigma is None:
        raise ValueError("params.sigma is required to synthesize noise")
    if noise not in ("gaussian", "uniform"):
        raise ValueError("noise must be 'gaussian' or 'uniform'")
    rng = np.random.default_rng(seed)
    n = np.arange(n_samples)
    x = synth(params, basis, n, lam)
    if noise == "gaussian":
        eta = rng.normal(0.0, params.sigma, size=n_samples)
    else:
        half = np.sqrt(3.0) * params.sigma
        eta = rng.uniform(-half, half, size=n_samples)
    codes = quantize(model, x + eta)
    return AcquisitionRecord(
        codes=codes,
        lam=lam,
        seed=None if seed is None else int(seed),
        quantizer=model,
        basis_name=basis.name,
        noise=noise,
    )


def _meta_path_for(csv_path) -> str:
    base, _ = os.path.splitext(os.fspath(csv_path))
    return base + ".meta"


def write_record(rec: AcquisitionRecord, csv_path, levels_path) -> None:
    """Write codes as CSV (columns ``n,code``), the generating quantizer as
    a level file, and a sidecar ``.meta`` config tying them together."""
    csv_path = os.fspath(csv_path)
    levels_path = os.fspath(levels_path)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "code"])
        for i, c in enumerate(rec.codes):
            w.writerow([i, int(c)])
    write_levels(rec.quantizer, levels_path)

    meta = configparser.ConfigParser()
    meta["record"] = {
        "lambda": repr(float(rec.lam)),
        "seed": "" if rec.seed is None else str(rec.seed),
        "n_samples": str(rec.n_samples),
        "basis": rec.basis_name,
        "noise": rec.noise,
        "levels_file": os.path.relpath(levels_path, os.path.dirname(csv_path) or "."),
    }
    with open(_meta_path_for(csv_path), "w") as fh:
        meta.write(fh)


def read_record(csv_path, meta_path=None) -> AcquisitionRecord:
    """Read an acquisition written by :func:`write_record`."""
    csv_path = os.fspath(csv_path)
    if meta_path is None:
        meta_path = _meta_path_for(csv_path)
    meta = configparser.ConfigParser()
    if not meta.read(meta_path):
        raise ValueError(f"missing record sidecar {meta_path}")
    sec = meta["record"]
    levels_file = sec["levels_file"]
    if not os.path.isabs(levels_file):
        levels_file = os.path.join(os.path.dirname(csv_path) or ".", levels_file)
    model = read_levels(levels_file)

    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["n", "code"]:
            raise ValueError(f"{csv_path}: expected header 'n,code'")
        codes = [int(row[1]) for row in reader if row]

    seed_text = sec.get("seed", "")
    return AcquisitionRecord(
        codes=np.array(codes, dtype=np.int64),
        lam=float(sec["lambda"]),
        seed=int(seed_text) if seed_text else None,
        quantizer=model,
        basis_name=sec.get("basis", "sine"),
        noise=sec.get("noise", "gaussian"),
    )
