"""CSV tables and companion figures.

Every table has a fixed column set (schema constants below) and is written
with repr-formatted floats, so identical runs produce byte-identical
files.  Figures are rendered headlessly next to the tables they
illustrate; they are a convenience view of the same data, never the
primary artifact.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .signals import phase_fraction

SWEEP_COLUMNS = ("sigma", "N", "estimator", "rmse", "failures")
MOTIVATE_COLUMNS = ("amplitude", "err_uniform", "err_nonuniform", "ratio")
CDF_COLUMNS = ("abscissa", "p_hat", "phi")
PDF_COLUMNS = ("abscissa", "density")
SIGMA_COLUMNS = ("amplitude", "sigma_hat")
FIT_COLUMNS = ("name", "value")
TRACE_COLUMNS = ("iter", "lambda", "mse")
PARTITION_COLUMNS = ("subset_id", "n", "phase")
INL_COLUMNS = ("code", "inl")


def _cell(value) -> str:
    # np.float64 subclasses float, so coerce before repr to keep the
    # shortest-round-trip form instead of numpy's wrapped repr
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_table(rows, columns, out_dir, filename) -> str:
    """Write dict rows to ``out_dir/filename`` under the given schema."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[col]) for col in columns])
    return path


def write_fit_table(fit, basis, out_dir, filename="fit.csv", extra=()) -> str:
    """Flatten a FitResult into name,value rows."""
    rows = []
    for label, value in zip(basis.labels, fit.theta_hat):
        rows.append({"name": f"theta_{label}", "value": float(value)})
    rows.append({"name": "sigma_hat", "value": float(fit.sigma_hat)})
    rows.append({"name": "sigma_known", "value": int(fit.sigma_known)})
    rows.append({"name": "lambda", "value": float(fit.lam)})
    rows.append({"name": "rows_used", "value": int(fit.rows_used)})
    rows.append({"name": "condition", "value": float(fit.condition)})
    for name, value in extra:
        rows.append({"name": name, "value": value})
    return write_table(rows, FIT_COLUMNS, out_dir, filename)


def write_trace(trace, out_dir, filename="trace.csv") -> str:
    rows = [
        {"iter": i, "lambda": float(lam), "mse": float(val)}
        for i, (lam, val) in enumerate(trace.evaluations)
    ]
    return write_table(rows, TRACE_COLUMNS, out_dir, filename)


def dump_partition(part, lam, out_dir, filename="partition.csv") -> str:
    """Debug dump: one row per sample index with its subset and phase."""
    rows = []
    for sid, subset in enumerate(part.subsets):
        phases = phase_fraction(subset, lam)
        for n, phase in zip(subset, np.atleast_1d(phases)):
            rows.append({"subset_id": sid, "n": int(n), "phase": float(phase)})
    rows.sort(key=lambda r: r["n"])
    return write_table(rows, PARTITION_COLUMNS, out_dir, filename)


def write_inl(inl, out_dir, filename="inl.csv") -> str:
    rows = [
        {"code": c + 1, "inl": float(v)} for c, v in enumerate(inl.values)
    ]
    return write_table(rows, INL_COLUMNS, out_dir, filename)


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _save(fig, out_dir, filename) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    return path


def render_sweep(rows, out_dir, filename="sweep.png") -> str:
    """RMSE versus noise level, one curve per estimator and record length."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    styles = {"qbe": dict(marker="o", ls="-"), "lse": dict(marker="s", ls="--")}
    combos = sorted({(r["estimator"], r["N"]) for r in rows})
    for name, n_samples in combos:
        pts = [r for r in rows if r["estimator"] == name and r["N"] == n_samples]
        pts.sort(key=lambda r: r["sigma"])
        ax.plot(
            [r["sigma"] for r in pts],
            [r["rmse"] for r in pts],
            label=f"{name.upper()}, N={n_samples}",
            **styles.get(name, {}),
        )
    ax.set_xlabel("noise sigma / delta")
    ax.set_ylabel("RMSE / delta")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    path = _save(fig, out_dir, filename)
    plt.close(fig)
    return path


def render_motivate(rows, out_dir, filename="motivate.png") -> str:
    """Mean relative amplitude error on both quantizers, plus their ratio."""
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(
        2, 1, figsize=(6.0, 5.6), sharex=True, height_ratios=[2, 1]
    )
    amps = [r["amplitude"] for r in rows]
    ax1.semilogy(amps, [r["err_uniform"] for r in rows], "o-", label="ideal")
    ax1.semilogy(
        amps, [r["err_nonuniform"] for r in rows], "s--", label="perturbed"
    )
    ax1.set_ylabel("mean |relative error|")
    ax1.grid(True, which="both", alpha=0.3)
    ax1.legend()
    ax2.plot(amps, [r["ratio"] for r in rows], "k.-")
    ax2.axhline(1.0, color="gray", lw=0.8)
    ax2.set_xlabel("amplitude / delta")
    ax2.set_ylabel("error ratio")
    ax2.grid(True, alpha=0.3)
    path = _save(fig, out_dir, filename)
    plt.close(fig)
    return path


def render_cdf(cdf_rows, pdf_rows, out_dir, filename="cdf.png") -> str:
    """Recovered noise CDF/PDF point clouds against the Gaussian reference."""
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    x = np.array([r["abscissa"] for r in cdf_rows])
    ax1.plot(x, [r["p_hat"] for r in cdf_rows], ".", ms=3, label="estimated")
    ax1.plot(x, [r["phi"] for r in cdf_rows], "r-", lw=1, label="standard normal")
    ax1.set_xlabel("normalized abscissa")
    ax1.set_ylabel("CDF")
    ax1.grid(True, alpha=0.3)
    ax1.legend()
    if pdf_rows:
        xp = np.array([r["abscissa"] for r in pdf_rows])
        ax2.plot(xp, [r["density"] for r in pdf_rows], ".", ms=3, label="estimated")
        dense = np.linspace(xp.min(), xp.max(), 400)
        ax2.plot(
            dense,
            np.exp(-0.5 * dense**2) / np.sqrt(2 * np.pi),
            "r-",
            lw=1,
            label="standard normal",
        )
        ax2.set_xlabel("normalized abscissa")
        ax2.set_ylabel("PDF")
        ax2.grid(True, alpha=0.3)
        ax2.legend()
    path = _save(fig, out_dir, filename)
    plt.close(fig)
    return path


def render_fit(cdf_rows, out_dir, filename="fit.png") -> str:
    """Noise-CDF point cloud of a single fit against the Gaussian link."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    x = np.array([r["abscissa"] for r in cdf_rows])
    ax.plot(x, [r["p_hat"] for r in cdf_rows], ".", ms=3, label="estimated")
    ax.plot(x, [r["phi"] for r in cdf_rows], "r-", lw=1, label="standard normal")
    ax.set_xlabel("normalized abscissa")
    ax.set_ylabel("CDF")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path = _save(fig, out_dir, filename)
    plt.close(fig)
    return path


def render_trace(trace, out_dir, filename="trace.png") -> str:
    """Objective evaluations of a frequency search, in evaluation order."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    lams = [lam for lam, _ in trace.evaluations]
    vals = [val for _, val in trace.evaluations]
    ax.semilogy(lams, vals, "k.", ms=4)
    ax.set_xlabel("lambda probed")
    ax.set_ylabel("objective")
    ax.grid(True, which="both", alpha=0.3)
    path = _save(fig, out_dir, filename)
    plt.close(fig)
    return path


def render_inl(inl, out_dir, filename="inl.png") -> str:
    """Integral nonlinearity per transition, in code widths."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    codes = np.arange(1, inl.values.size + 1)
    ax.step(codes, inl.values, where="mid", lw=0.9)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("transition index")
    ax.set_ylabel("INL / delta")
    ax.grid(True, alpha=0.3)
    path = _save(fig, out_dir, filename)
    plt.close(fig)
    return path
