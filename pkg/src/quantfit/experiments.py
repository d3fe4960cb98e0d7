"""Monte Carlo experiment runner.

Turns a ScenarioConfig into seeded trial batteries and aggregates them
into the CSV tables the CLI ships: estimator comparison sweeps, the
uniform-vs-nonuniform amplitude-error study, and the noise-CDF recovery
experiment.  Every random draw is seeded through ``derive_seed`` so a
scenario re-run with the same master seed is bit-identical, and extending
the trial count never changes the trials that already ran.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .baseline import dft_frequency_guess, sinefit3, sinefit4
from .config import QuantizerSpec, ScenarioConfig, derive_seed
from .errors import ConfigError, InsufficientDataError, QuantfitError
from .estimator import gauss_cdf, estimate_noise_pdf, qbe_fit
from .quantizer import (
    QuantizerModel,
    make_resistor_ladder,
    make_uniform,
    perturb_levels,
    quantize,
    reconstruction_value,
    servo_loop_measure,
)
from .search import qbe_fit_unknown_freq
from .signals import ParamVector, acquire, get_basis, phase_fraction
from . import report


@dataclass(frozen=True)
class TrialOutcome:
    """One estimator's result on one simulated record.

    Errors are in volts.  ``e_ac`` compares AC amplitudes
    sqrt(theta_0^2 + theta_1^2); ``e_dc`` compares the constant terms.
    Failed trials carry the exception text in ``error`` and NaN metrics.
    """

    estimator: str
    sigma: float  # true noise level, delta units (grid coordinate)
    n_samples: int
    e_dc: float
    e_ac: float
    sigma_hat: float
    lam_hat: float
    wall_time: float
    ok: bool
    error: str = ""

    @property
    def metric(self) -> float:
        return math.sqrt(self.e_dc**2 + 0.5 * self.e_ac**2)


def rmse(outcomes) -> float:
    """Root mean square of the per-trial error metric, successes only.

    Each trial contributes sqrt(e_dc^2 + e_ac^2 / 2); the aggregate is the
    root of the mean of those squared metrics.
    """
    metrics = [o.metric for o in outcomes if o.ok]
    if not metrics:
        raise InsufficientDataError("no successful trials to aggregate")
    return float(np.sqrt(np.mean(np.square(metrics))))


def build_quantizer(spec: QuantizerSpec, master_seed: int) -> QuantizerModel:
    """Realize the quantizer a scenario runs against.

    The device seed comes from the config when pinned there, otherwise it
    is derived from the master seed, so the same scenario always tests the
    same device.
    """
    seed = spec.seed
    if seed is None:
        seed = derive_seed(master_seed, "quantizer")
    if spec.kind == "uniform":
        return make_uniform(spec.bits, spec.v_lo, spec.v_hi)
    if spec.kind == "ladder":
        return make_resistor_ladder(
            spec.bits,
            spec.v_lo,
            spec.v_hi,
            spec.resistance_sigma_rel,
            target_max_inl=spec.target_max_inl,
            seed=seed,
        )
    if spec.kind == "perturbed":
        base = make_uniform(spec.bits, spec.v_lo, spec.v_hi)
        return perturb_levels(base, spec.perturbation, seed=seed)
    raise ConfigError(f"unknown quantizer kind: {spec.kind!r}")


def corrupt_levels(
    model: QuantizerModel, amplitude: float, seed
) -> QuantizerModel:
    """Threshold knowledge with i.i.d. Uniform(-amplitude, +amplitude)
    code-width errors, modeling imperfect calibration on the estimator's
    side (the device itself is untouched)."""
    if amplitude == 0.0:
        return model
    rng = np.random.default_rng(seed)
    shifts = rng.uniform(-amplitude, amplitude, size=model.levels.size)
    return QuantizerModel(
        levels=model.levels + shifts * model.delta,
        v_lo=model.v_lo,
        v_hi=model.v_hi,
    )


def _amp_dc_errors(theta_hat, theta_true):
    amp_hat = math.hypot(float(theta_hat[0]), float(theta_hat[1]))
    amp_true = math.hypot(float(theta_true[0]), float(theta_true[1]))
    return abs(float(theta_hat[2]) - float(theta_true[2])), abs(amp_hat - amp_true)


def run_trials(cfg: ScenarioConfig, sigma: float, n_samples: int):
    """All trials of one (sigma, N) grid point; returns TrialOutcome list.

    Trial i draws its record from seed(master, "record", N, sigma, i), so
    outcomes are independent of the surrounding grid and of the total
    trial count.
    """
    basis = get_basis(cfg.signal.basis)
    if basis.size != 3:
        raise ConfigError(
            "sweep scenarios need a 3-component basis (AC pair + constant); "
            f"basis {basis.name!r} has {basis.size}"
        )
    quant = cfg.quantizer
    est = cfg.estimator
    delta = quant.delta
    adc = build_quantizer(quant, cfg.master_seed)
    nominal = make_uniform(quant.bits, quant.v_lo, quant.v_hi)
    lse_model = nominal if est.lse_reconstruction == "nominal" else adc
    theta_true = np.asarray(cfg.signal.theta, dtype=float) * delta
    params = ParamVector(theta=theta_true, sigma=sigma * delta)
    guards = (est.guard_lo, est.guard_hi)

    outcomes = []
    for i in range(cfg.trials):
        rec = acquire(
            params,
            basis,
            cfg.signal.lam,
            n_samples,
            adc,
            seed=derive_seed(cfg.master_seed, "record", n_samples, sigma, i),
            noise=cfg.signal.noise,
        )

        start = time.perf_counter()
        try:
            knowledge = corrupt_levels(
                adc,
                est.threshold_uncertainty,
                derive_seed(cfg.master_seed, "corrupt", n_samples, sigma, i),
            )
            sigma_arg = sigma * delta if est.sigma_known else None
            if est.freq_known:
                fit = qbe_fit(
                    rec,
                    basis,
                    cfg.signal.lam,
                    knowledge,
                    epsilon=est.epsilon,
                    guards=guards,
                    sigma=sigma_arg,
                )
            else:
                fit = qbe_fit_unknown_freq(
                    rec,
                    basis,
                    knowledge,
                    gamma=est.gamma,
                    epsilon=est.epsilon,
                    guards=guards,
                    sigma=sigma_arg,
                )
            e_dc, e_ac = _amp_dc_errors(fit.theta_hat, theta_true)
            outcomes.append(
                TrialOutcome(
                    estimator="qbe",
                    sigma=sigma,
                    n_samples=n_samples,
                    e_dc=e_dc,
                    e_ac=e_ac,
                    sigma_hat=fit.sigma_hat,
                    lam_hat=fit.lam,
                    wall_time=time.perf_counter() - start,
                    ok=True,
                )
            )
        except (QuantfitError, ValueError) as exc:
            outcomes.append(
                _failed("qbe", sigma, n_samples, time.perf_counter() - start, exc)
            )

        if not est.lse:
            continue
        start = time.perf_counter()
        try:
            samples = reconstruction_value(lse_model, rec.codes)
            if est.freq_known:
                sf = sinefit3(samples, cfg.signal.lam)
            else:
                sf = sinefit4(samples, dft_frequency_guess(samples), est.gamma)
            e_dc, e_ac = _amp_dc_errors(sf.theta_hat, theta_true)
            outcomes.append(
                TrialOutcome(
                    estimator="lse",
                    sigma=sigma,
                    n_samples=n_samples,
                    e_dc=e_dc,
                    e_ac=e_ac,
                    sigma_hat=float("nan"),
                    lam_hat=sf.lam,
                    wall_time=time.perf_counter() - start,
                    ok=True,
                )
            )
        except (QuantfitError, ValueError) as exc:
            outcomes.append(
                _failed("lse", sigma, n_samples, time.perf_counter() - start, exc)
            )
    return outcomes


def _failed(name, sigma, n_samples, elapsed, exc) -> TrialOutcome:
    nan = float("nan")
    return TrialOutcome(
        estimator=name,
        sigma=sigma,
        n_samples=n_samples,
        e_dc=nan,
        e_ac=nan,
        sigma_hat=nan,
        lam_hat=nan,
        wall_time=elapsed,
        ok=False,
        error=f"{type(exc).__name__}: {exc}",
    )


def run_scenario(cfg: ScenarioConfig, out_dir=None):
    """Monte Carlo sweep over the (sigma, N) grid.

    Returns sweep rows (one per grid point per estimator) with RMSE in
    code widths; a grid point whose trials all failed reports NaN.  When
    ``out_dir`` is given, writes ``sweep.csv`` and renders the comparison
    figure there.
    """
    delta = cfg.quantizer.delta
    estimators = ["qbe"] + (["lse"] if cfg.estimator.lse else [])
    rows = []
    for n_samples in cfg.signal.n_list:
        for sigma in cfg.signal.sigma_list:
            outcomes = run_trials(cfg, sigma, n_samples)
            for name in estimators:
                batch = [o for o in outcomes if o.estimator == name]
                failures = sum(not o.ok for o in batch)
                assert failures + sum(o.ok for o in batch) == cfg.trials
                try:
                    value = rmse(batch) / delta
                except InsufficientDataError:
                    value = float("nan")
                rows.append(
                    {
                        "sigma": sigma,
                        "N": n_samples,
                        "estimator": name,
                        "rmse": value,
                        "failures": failures,
                    }
                )
    if out_dir is not None:
        report.write_table(rows, report.SWEEP_COLUMNS, out_dir, "sweep.csv")
        report.render_sweep(rows, out_dir)
    return rows


def run_motivating_example(cfg: ScenarioConfig, out_dir=None):
    """Amplitude-error comparison of one sine-fit chain on an ideal
    quantizer versus the same chain on a perturbed one.

    Each record's noisy waveform goes through both quantizers, so the
    error ratio isolates the effect of the transition-level deviations.
    The fitted quantity is the cosine amplitude (frequency 10/N cycles
    per sample, DC-free signal), estimated by projection; both chains
    reconstruct through the ideal quantizer's nominal levels, mirroring a
    fitter that is unaware of the device's nonlinearity.
    """
    mot = cfg.motivate
    if mot is None:
        raise ConfigError("scenario has no [motivate] section")
    quant = cfg.quantizer
    delta = quant.delta
    uniform = make_uniform(quant.bits, quant.v_lo, quant.v_hi)
    perturbed = perturb_levels(
        uniform,
        mot.perturbation,
        seed=derive_seed(cfg.master_seed, "motivate-quantizer"),
    )

    n_samples = mot.n_samples
    lam = 10.0 / n_samples
    cosine = np.cos(2 * np.pi * phase_fraction(np.arange(n_samples), lam))
    gram = float(cosine @ cosine)
    sigma_v = mot.sigma * delta

    rows = []
    for j in range(mot.amp_count):
        amp = (mot.amp_start + j * mot.amp_step) * delta
        err_u = np.empty(cfg.trials)
        err_n = np.empty(cfg.trials)
        for i in range(cfg.trials):
            rng = np.random.default_rng(
                derive_seed(cfg.master_seed, "motivate", j, i)
            )
            x = amp * cosine + rng.normal(0.0, sigma_v, n_samples)
            amp_u = (
                float(reconstruction_value(uniform, quantize(uniform, x)) @ cosine)
                / gram
            )
            amp_n = (
                float(reconstruction_value(uniform, quantize(perturbed, x)) @ cosine)
                / gram
            )
            err_u[i] = abs(amp_u - amp) / amp
            err_n[i] = abs(amp_n - amp) / amp
        mean_u = float(np.mean(err_u))
        mean_n = float(np.mean(err_n))
        rows.append(
            {
                "amplitude": amp / delta,
                "err_uniform": mean_u,
                "err_nonuniform": mean_n,
                "ratio": mean_n / mean_u,
            }
        )
    if out_dir is not None:
        report.write_table(rows, report.MOTIVATE_COLUMNS, out_dir, "motivate.csv")
        report.render_motivate(rows, out_dir)
    return rows


def run_cdf_experiment(cfg: ScenarioConfig, out_dir=None):
    """Pointwise noise-CDF recovery plus a sigma-stability sweep.

    Fits one record per amplitude on the configured grid and tabulates the
    estimated noise level for each; a separate record at the designated
    amplitude supplies the CDF/PDF point clouds, tabulated next to the
    standard normal CDF sampled on the same abscissas.
    """
    cdf_spec = cfg.cdf
    if cdf_spec is None:
        raise ConfigError("scenario has no [cdf] section")
    quant = cfg.quantizer
    est = cfg.estimator
    delta = quant.delta
    adc = build_quantizer(quant, cfg.master_seed)
    basis = get_basis(cfg.signal.basis)
    guards = (est.guard_lo, est.guard_hi)
    lam = cfg.signal.lam
    sigma_v = cdf_spec.sigma * delta

    def fit_one(amp_delta: float, role) -> tuple:
        theta = np.array([amp_delta * delta, 0.0, cdf_spec.dc * delta])
        rec = acquire(
            ParamVector(theta=theta, sigma=sigma_v),
            basis,
            lam,
            cdf_spec.n_samples,
            adc,
            seed=derive_seed(cfg.master_seed, "cdf", role),
            noise=cfg.signal.noise,
        )
        return qbe_fit(
            rec, basis, lam, adc, epsilon=est.epsilon, guards=guards
        )

    amps = np.linspace(cdf_spec.amp_min, cdf_spec.amp_max, cdf_spec.amp_count)
    sigma_rows = []
    for j, amp in enumerate(amps):
        fit = fit_one(float(amp), j)
        sigma_rows.append(
            {"amplitude": float(amp), "sigma_hat": fit.sigma_hat / delta}
        )

    fit = fit_one(cdf_spec.cdf_amplitude, "cdfset")
    points = fit.cdf_points
    phi = gauss_cdf(points[:, 0])
    cdf_rows = [
        {"abscissa": float(a), "p_hat": float(p), "phi": float(f)}
        for a, p, f in zip(points[:, 0], points[:, 1], phi)
    ]
    dens = estimate_noise_pdf(points)
    pdf_rows = [
        {"abscissa": float(a), "density": float(d)} for a, d in dens
    ]

    tables = {"cdf": cdf_rows, "pdf": pdf_rows, "sigma_hat": sigma_rows}
    if out_dir is not None:
        report.write_table(cdf_rows, report.CDF_COLUMNS, out_dir, "cdf.csv")
        report.write_table(pdf_rows, report.PDF_COLUMNS, out_dir, "pdf.csv")
        report.write_table(
            sigma_rows, report.SIGMA_COLUMNS, out_dir, "sigma_hat.csv"
        )
        report.render_cdf(cdf_rows, pdf_rows, out_dir)
    return tables


def calibrate_model(
    model: QuantizerModel,
    noise_sigma: float,
    samples_per_step: int,
    tolerance: float,
    master_seed: int = 0,
) -> QuantizerModel:
    """Measure every transition of a model via the dithered servo loop.

    Treats the model as a black box (codes out, voltages in) and rebuilds
    it from the measured transition voltages.  ``noise_sigma`` and
    ``tolerance`` are in volts here — callers converting from config files
    scale by the code width first.
    """
    measured = np.empty(model.n_codes - 1)
    for code in range(1, model.n_codes):
        measured[code - 1] = servo_loop_measure(
            lambda v: quantize(model, v),
            noise_sigma,
            code,
            samples_per_step,
            tolerance,
            model.v_lo,
            model.v_hi,
            seed=derive_seed(master_seed, "servo", code),
        )
    return QuantizerModel(levels=measured, v_lo=model.v_lo, v_hi=model.v_hi)
