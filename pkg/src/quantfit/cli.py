"""Command-line front end.

Every subcommand reads one scenario file and writes its tables (and
companion PNG figures) into the output directory:

    quantfit simulate cfg.ini --out results/   record.csv + levels.txt
    quantfit fit cfg.ini --record record.csv   fit.csv, cdf.csv, fit.png
    quantfit sweep cfg.ini                     sweep.csv, sweep.png
    quantfit motivate cfg.ini                  motivate.csv, motivate.png
    quantfit cdf cfg.ini                       cdf/pdf/sigma_hat.csv + figures
    quantfit calibrate cfg.ini --levels f.txt  levels.txt (measured)
    quantfit inl cfg.ini                       inl.csv, inl.png

Exit status: 0 on success, 2 for configuration problems, 3 for runtime
failures (estimation, I/O).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import report
from .config import ScenarioConfig, derive_seed, load_config
from .errors import ConfigError, QuantfitError
from .estimator import gauss_cdf, qbe_fit
from .experiments import (
    build_quantizer,
    calibrate_model,
    run_cdf_experiment,
    run_motivating_example,
    run_scenario,
)
from .partition import async_partition
from .quantizer import (
    compute_inl,
    make_uniform,
    read_levels,
    reconstruction_value,
    write_levels,
)
from .baseline import dft_frequency_guess, sinefit3, sinefit4
from .search import qbe_fit_unknown_freq
from .signals import ParamVector, acquire, get_basis, read_record, write_record

import numpy as np


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantfit",
        description="Signal and noise estimation from quantized data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="scenario file (INI syntax)")
        p.add_argument("--seed", type=int, help="override [run] master_seed")
        p.add_argument("--out", help="override [run] out_dir")
        return p

    add("simulate", "synthesize one acquisition record")
    p_fit = add("fit", "estimate signal and noise from a record")
    p_fit.add_argument("--record", required=True, help="record CSV from simulate")
    p_fit.add_argument(
        "--dump-partition",
        action="store_true",
        help="also write partition.csv (subset_id,n,phase)",
    )
    add("sweep", "Monte Carlo estimator comparison over the (sigma, N) grid")
    add("motivate", "amplitude-error study: ideal vs perturbed quantizer")
    add("cdf", "noise CDF/PDF recovery and sigma stability")
    p_cal = add("calibrate", "measure transition levels with the servo loop")
    p_cal.add_argument("--levels", help="levels file of the device under test")
    p_inl = add("inl", "integral nonlinearity of a quantizer")
    p_inl.add_argument("--levels", help="levels file (default: config quantizer)")
    return parser


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = args.out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_simulate(cfg: ScenarioConfig, args) -> int:
    quant = cfg.quantizer
    adc = build_quantizer(quant, cfg.master_seed)
    basis = get_basis(cfg.signal.basis)
    delta = quant.delta
    params = ParamVector(
        theta=np.asarray(cfg.signal.theta, dtype=float) * delta,
        sigma=cfg.signal.sigma_list[0] * delta,
    )
    rec = acquire(
        params,
        basis,
        cfg.signal.lam,
        cfg.signal.n_list[0],
        adc,
        seed=derive_seed(cfg.master_seed, "simulate"),
        noise=cfg.signal.noise,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, "record.csv")
    write_record(rec, csv_path, os.path.join(cfg.out_dir, "levels.txt"))
    print(f"wrote {csv_path} ({rec.n_samples} samples)")
    return 0


def _cmd_fit(cfg: ScenarioConfig, args) -> int:
    rec = read_record(args.record)
    basis = get_basis(rec.basis_name)
    est = cfg.estimator
    delta = rec.quantizer.delta
    guards = (est.guard_lo, est.guard_hi)
    sigma_arg = cfg.signal.sigma_list[0] * delta if est.sigma_known else None
    if est.freq_known:
        fit = qbe_fit(
            rec,
            basis,
            rec.lam,
            rec.quantizer,
            epsilon=est.epsilon,
            guards=guards,
            sigma=sigma_arg,
        )
    else:
        fit = qbe_fit_unknown_freq(
            rec,
            basis,
            rec.quantizer,
            gamma=est.gamma,
            epsilon=est.epsilon,
            guards=guards,
            sigma=sigma_arg,
        )

    extra = []
    if est.lse:
        lse_model = (
            make_uniform(cfg.quantizer.bits, cfg.quantizer.v_lo, cfg.quantizer.v_hi)
            if est.lse_reconstruction == "nominal"
            else rec.quantizer
        )
        samples = reconstruction_value(lse_model, rec.codes)
        if est.freq_known:
            sf = sinefit3(samples, rec.lam)
        else:
            sf = sinefit4(samples, dft_frequency_guess(samples), est.gamma)
        for label, value in zip(basis.labels, sf.theta_hat):
            extra.append((f"lse_theta_{label}", float(value)))
        extra.append(("lse_lambda", float(sf.lam)))
        extra.append(("lse_residual_rms", float(sf.residual_rms)))

    out = cfg.out_dir
    report.write_fit_table(fit, basis, out, extra=extra)
    phi = gauss_cdf(fit.cdf_points[:, 0])
    cdf_rows = [
        {"abscissa": float(a), "p_hat": float(p), "phi": float(f)}
        for (a, p), f in zip(fit.cdf_points, phi)
    ]
    report.write_table(cdf_rows, report.CDF_COLUMNS, out, "cdf.csv")
    report.render_fit(cdf_rows, out)
    if fit.trace is not None:
        report.write_trace(fit.trace, out)
        report.render_trace(fit.trace, out)
    if args.dump_partition:
        part = async_partition(rec.n_samples, fit.lam, est.epsilon)
        report.dump_partition(part, fit.lam, out)
    print(
        f"sigma_hat={fit.sigma_hat:.6g} lambda={fit.lam:.8g} "
        f"rows={fit.rows_used} condition={fit.condition:.3e}"
    )
    return 0


def _cmd_sweep(cfg: ScenarioConfig, args) -> int:
    rows = run_scenario(cfg, out_dir=cfg.out_dir)
    failed = sum(r["failures"] for r in rows)
    print(f"wrote {os.path.join(cfg.out_dir, 'sweep.csv')} "
          f"({len(rows)} grid rows, {failed} failed trials)")
    return 0


def _cmd_motivate(cfg: ScenarioConfig, args) -> int:
    rows = run_motivating_example(cfg, out_dir=cfg.out_dir)
    worst = max(r["ratio"] for r in rows)
    print(f"wrote {os.path.join(cfg.out_dir, 'motivate.csv')} "
          f"(max error ratio {worst:.2f})")
    return 0


def _cmd_cdf(cfg: ScenarioConfig, args) -> int:
    tables = run_cdf_experiment(cfg, out_dir=cfg.out_dir)
    sig = [r["sigma_hat"] for r in tables["sigma_hat"]]
    print(
        f"wrote cdf/pdf/sigma_hat tables to {cfg.out_dir} "
        f"(sigma_hat mean {np.mean(sig):.4f}, std {np.std(sig, ddof=1):.4f})"
    )
    return 0


def _cmd_calibrate(cfg: ScenarioConfig, args) -> int:
    if args.levels:
        device = read_levels(args.levels)
    else:
        device = build_quantizer(cfg.quantizer, cfg.master_seed)
    cal = cfg.calibrate
    delta = device.delta
    measured = calibrate_model(
        device,
        cal.noise_sigma * delta,
        cal.samples_per_step,
        cal.tolerance * delta,
        master_seed=cfg.master_seed,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "levels.txt")
    write_levels(measured, path)
    worst = float(np.max(np.abs(measured.levels - device.levels)))
    print(f"wrote {path} (worst deviation {worst:.3e} V)")
    return 0


def _cmd_inl(cfg: ScenarioConfig, args) -> int:
    if args.levels:
        model = read_levels(args.levels)
    else:
        model = build_quantizer(cfg.quantizer, cfg.master_seed)
    inl = compute_inl(model)
    report.write_inl(inl, cfg.out_dir)
    report.render_inl(inl, cfg.out_dir)
    print(
        f"max |INL| = {inl.max_abs:.6f} delta "
        f"(gain {inl.gain:.6g}, offset {inl.offset:.6g})"
    )
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
    "motivate": _cmd_motivate,
    "cdf": _cmd_cdf,
    "calibrate": _cmd_calibrate,
    "inl": _cmd_inl,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuantfitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
