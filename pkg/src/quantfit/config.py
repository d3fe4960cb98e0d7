"""Scenario configuration for the experiment runner.

Scenarios are described by sectioned key=value text files (INI syntax):

    [quantizer]
    kind = ladder
    bits = 8
    v_lo = -1.0
    v_hi = 1.0
    ...

Voltage-dimensioned quantities (amplitudes, noise levels, perturbations)
are given in units of the nominal code width delta = (v_hi - v_lo) / 2**bits
and carry a ``_delta`` suffix in their key names; the loader converts them
to volts using the quantizer section's range.  See the README for the full
key reference.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from .errors import ConfigError

_QUANTIZER_KINDS = ("uniform", "ladder", "perturbed")
_NOISE_KINDS = ("gaussian", "uniform")
_LSE_RECONSTRUCTIONS = ("nominal", "calibrated")


def derive_seed(master_seed: int, *parts) -> int:
    """Deterministic child seed from a master seed and a role path.

    Hashes the master seed together with the identifying parts (strings,
    ints, floats) so that every (grid point, trial, role) combination gets
    an independent, reproducible stream.  Floats are keyed by repr, which
    round-trips exactly.  Extending a sweep or adding trials never changes
    the seeds of existing points.
    """
    token = repr(int(master_seed))
    for part in parts:
        if isinstance(part, float):
            token += "|" + repr(part)
        else:
            token += "|" + str(part)
    digest = hashlib.sha256(token.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class QuantizerSpec:
    kind: str = "uniform"
    bits: int = 8
    v_lo: float = -1.0
    v_hi: float = 1.0
    resistance_sigma_rel: float = 0.02  # ladder only
    target_max_inl: float | None = None  # ladder only, delta units
    perturbation: float = 0.0  # perturbed only, delta units
    seed: int | None = None  # None -> derived from the master seed

    @property
    def delta(self) -> float:
        return (self.v_hi - self.v_lo) / 2**self.bits


@dataclass(frozen=True)
class SignalSpec:
    basis: str = "sine"
    theta: tuple[float, ...] = (50.0, 0.0, 0.0)  # delta units
    lam: float = 0.1155545
    sigma_list: tuple[float, ...] = (0.2, 0.5, 1.0)  # delta units
    n_list: tuple[int, ...] = (30000,)
    noise: str = "gaussian"


@dataclass(frozen=True)
class EstimatorSpec:
    epsilon: float = 0.0011
    guard_lo: float = 0.05
    guard_hi: float = 0.95
    sigma_known: bool = False
    freq_known: bool = True
    gamma: float = 1e-9
    lse: bool = True
    lse_reconstruction: str = "nominal"
    threshold_uncertainty: float = 0.0  # delta units, corrupts QBE's levels


@dataclass(frozen=True)
class MotivateSpec:
    perturbation: float = 0.45  # delta units
    amp_start: float = 64.525  # delta units; 2**(bits-2) + 0.5 for 8 bits
    amp_step: float = 0.05
    amp_count: int = 20
    sigma: float = 0.3  # delta units
    n_samples: int = 10000


@dataclass(frozen=True)
class CalibrateSpec:
    noise_sigma: float = 0.1  # dither level, delta units
    samples_per_step: int = 2000
    tolerance: float = 0.01  # bisection stop width, delta units


@dataclass(frozen=True)
class CdfSpec:
    amp_min: float = 1.042  # delta units
    amp_max: float = 64.803
    amp_count: int = 10
    cdf_amplitude: float = 20.0  # dataset used for the CDF/PDF tables
    dc: float = 0.3  # delta units
    sigma: float = 0.8  # delta units
    n_samples: int = 150000


@dataclass(frozen=True)
class ScenarioConfig:
    quantizer: QuantizerSpec = field(default_factory=QuantizerSpec)
    signal: SignalSpec = field(default_factory=SignalSpec)
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    trials: int = 20
    master_seed: int = 0
    out_dir: str = "."
    motivate: MotivateSpec | None = None
    cdf: CdfSpec | None = None
    calibrate: CalibrateSpec = field(default_factory=CalibrateSpec)


def _get(parser, section, key, conv, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] is missing required key '{key}'")
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _floats(raw: str) -> tuple[float, ...]:
    vals = tuple(float(tok) for tok in raw.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _ints(raw: str) -> tuple[int, ...]:
    vals = tuple(int(tok) for tok in raw.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _choice(options):
    def conv(raw: str) -> str:
        val = raw.strip().lower()
        if val not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return val

    return conv


def load_config(path: str) -> ScenarioConfig:
    """Parse and validate a scenario file, raising ConfigError on problems."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not read:
        raise ConfigError(f"config file not found: {path}")

    q = _parse_quantizer(parser)
    s = _parse_signal(parser)
    e = _parse_estimator(parser)

    trials = _get(parser, "run", "trials", int, default=20)
    master_seed = _get(parser, "run", "master_seed", int, default=0)
    out_dir = _get(parser, "run", "out_dir", str, default=".")
    if trials < 1:
        raise ConfigError("[run] trials must be >= 1")

    motivate = _parse_motivate(parser) if parser.has_section("motivate") else None
    cdf = _parse_cdf(parser) if parser.has_section("cdf") else None
    calibrate = (
        _parse_calibrate(parser)
        if parser.has_section("calibrate")
        else CalibrateSpec()
    )

    return ScenarioConfig(
        quantizer=q,
        signal=s,
        estimator=e,
        trials=trials,
        master_seed=master_seed,
        out_dir=out_dir,
        motivate=motivate,
        cdf=cdf,
        calibrate=calibrate,
    )


def _parse_quantizer(parser) -> QuantizerSpec:
    sec = "quantizer"
    if not parser.has_section(sec):
        return QuantizerSpec()
    kind = _get(parser, sec, "kind", _choice(_QUANTIZER_KINDS), default="uniform")
    bits = _get(parser, sec, "bits", int, default=8)
    v_lo = _get(parser, sec, "v_lo", float, default=-1.0)
    v_hi = _get(parser, sec, "v_hi", float, default=1.0)
    if bits < 1:
        raise ConfigError("[quantizer] bits must be >= 1")
    if not v_lo < v_hi:
        raise ConfigError("[quantizer] requires v_lo < v_hi")
    spec = QuantizerSpec(
        kind=kind,
        bits=bits,
        v_lo=v_lo,
        v_hi=v_hi,
        resistance_sigma_rel=_get(
            parser, sec, "resistance_sigma_rel", float, default=0.02
        ),
        target_max_inl=_get(parser, sec, "target_max_inl_delta", float),
        perturbation=_get(parser, sec, "perturbation_delta", float, default=0.0),
        seed=_get(parser, sec, "seed", int),
    )
    if spec.kind == "ladder" and spec.resistance_sigma_rel <= 0:
        raise ConfigError("[quantizer] resistance_sigma_rel must be > 0")
    if spec.kind == "perturbed" and not 0 <= spec.perturbation < 0.5:
        raise ConfigError("[quantizer] perturbation_delta must be in [0, 0.5)")
    return spec


def _parse_signal(parser) -> SignalSpec:
    sec = "signal"
    if not parser.has_section(sec):
        return SignalSpec()
    spec = SignalSpec(
        basis=_get(parser, sec, "basis", str, default="sine"),
        theta=_get(parser, sec, "theta_delta", _floats, default=(50.0, 0.0, 0.0)),
        lam=_get(parser, sec, "lambda", float, default=0.1155545),
        sigma_list=_get(
            parser, sec, "sigma_delta", _floats, default=(0.2, 0.5, 1.0)
        ),
        n_list=_get(parser, sec, "n_samples", _ints, default=(30000,)),
        noise=_get(parser, sec, "noise", _choice(_NOISE_KINDS), default="gaussian"),
    )
    if any(n < 2 for n in spec.n_list):
        raise ConfigError("[signal] n_samples entries must be >= 2")
    if any(s < 0 for s in spec.sigma_list):
        raise ConfigError("[signal] sigma_delta entries must be >= 0")
    if not 0 < spec.lam < 1:
        raise ConfigError("[signal] lambda must be in (0, 1)")
    return spec


def _parse_estimator(parser) -> EstimatorSpec:
    sec = "estimator"
    if not parser.has_section(sec):
        return EstimatorSpec()
    spec = EstimatorSpec(
        epsilon=_get(parser, sec, "epsilon", float, default=0.0011),
        guard_lo=_get(parser, sec, "guard_lo", float, default=0.05),
        guard_hi=_get(parser, sec, "guard_hi", float, default=0.95),
        sigma_known=_get(parser, sec, "sigma_known", _bool, default=False),
        freq_known=_get(parser, sec, "freq_known", _bool, default=True),
        gamma=_get(parser, sec, "gamma", float, default=1e-9),
        lse=_get(parser, sec, "lse", _bool, default=True),
        lse_reconstruction=_get(
            parser,
            sec,
            "lse_reconstruction",
            _choice(_LSE_RECONSTRUCTIONS),
            default="nominal",
        ),
        threshold_uncertainty=_get(
            parser, sec, "threshold_uncertainty_delta", float, default=0.0
        ),
    )
    if not 0 < spec.epsilon <= 0.5:
        raise ConfigError("[estimator] epsilon must be in (0, 0.5]")
    if not 0.0 <= spec.guard_lo < spec.guard_hi <= 1.0:
        raise ConfigError("[estimator] guards must satisfy 0 <= lo < hi <= 1")
    if spec.gamma <= 0:
        raise ConfigError("[estimator] gamma must be > 0")
    if spec.threshold_uncertainty < 0:
        raise ConfigError("[estimator] threshold_uncertainty_delta must be >= 0")
    return spec


def _parse_motivate(parser) -> MotivateSpec:
    sec = "motivate"
    spec = MotivateSpec(
        perturbation=_get(parser, sec, "perturbation_delta", float, default=0.45),
        amp_start=_get(parser, sec, "amp_start_delta", float, default=64.525),
        amp_step=_get(parser, sec, "amp_step_delta", float, default=0.05),
        amp_count=_get(parser, sec, "amp_count", int, default=20),
        sigma=_get(parser, sec, "sigma_delta", float, default=0.3),
        n_samples=_get(parser, sec, "n_samples", int, default=10000),
    )
    if not 0 <= spec.perturbation < 0.5:
        raise ConfigError("[motivate] perturbation_delta must be in [0, 0.5)")
    if spec.amp_count < 1:
        raise ConfigError("[motivate] amp_count must be >= 1")
    if spec.sigma <= 0:
        raise ConfigError("[motivate] sigma_delta must be > 0")
    if spec.n_samples < 100:
        raise ConfigError("[motivate] n_samples must be >= 100")
    return spec


def _parse_calibrate(parser) -> CalibrateSpec:
    sec = "calibrate"
    spec = CalibrateSpec(
        noise_sigma=_get(parser, sec, "noise_sigma_delta", float, default=0.1),
        samples_per_step=_get(parser, sec, "samples_per_step", int, default=2000),
        tolerance=_get(parser, sec, "tolerance_delta", float, default=0.01),
    )
    if spec.noise_sigma <= 0:
        raise ConfigError("[calibrate] noise_sigma_delta must be > 0")
    if spec.samples_per_step < 1:
        raise ConfigError("[calibrate] samples_per_step must be >= 1")
    if spec.tolerance <= 0:
        raise ConfigError("[calibrate] tolerance_delta must be > 0")
    return spec


def _parse_cdf(parser) -> CdfSpec:
    sec = "cdf"
    spec = CdfSpec(
        amp_min=_get(parser, sec, "amp_min_delta", float, default=1.042),
        amp_max=_get(parser, sec, "amp_max_delta", float, default=64.803),
        amp_count=_get(parser, sec, "amp_count", int, default=10),
        cdf_amplitude=_get(parser, sec, "cdf_amplitude_delta", float, default=20.0),
        dc=_get(parser, sec, "dc_delta", float, default=0.3),
        sigma=_get(parser, sec, "sigma_delta", float, default=0.8),
        n_samples=_get(parser, sec, "n_samples", int, default=150000),
    )
    if spec.amp_count < 1:
        raise ConfigError("[cdf] amp_count must be >= 1")
    if not spec.amp_min <= spec.amp_max:
        raise ConfigError("[cdf] requires amp_min_delta <= amp_max_delta")
    if spec.sigma <= 0:
        raise ConfigError("[cdf] sigma_delta must be > 0")
    return spec
