"""Frequency search: golden-section minimization of an experimental MSE.

When the signal frequency is unknown, candidate frequencies are scored by
how well the fitted model explains the reconstructed samples — a quantity
computable without ground truth — and the score is minimized over a
bracket around a spectral initial guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, QuantfitError
from .estimator import DEFAULT_EPSILON, DEFAULT_GUARDS, FitResult, qbe_fit
from .partition import async_partition, average_basis
from .quantizer import QuantizerModel, reconstruction_value
from .signals import AcquisitionRecord, BasisSet, eval_sample_vector

__all__ = [
    "SearchTrace",
    "golden_section",
    "mse_exp",
    "qbe_fit_unknown_freq",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchTrace:
    """Evaluation log of one golden-section run.

    ``evaluations`` lists (argument, objective) pairs in evaluation order;
    ``bracket_width`` is the final bracket width and ``iterations`` the
    number of shrink steps taken.
    """

    evaluations: tuple[tuple[float, float], ...]
    bracket_width: float
    iterations: int


def golden_section(
    objective,
    lo: float,
    hi: float,
    gamma: float,
    max_iter: int = 200,
) -> tuple[float, SearchTrace]:
    """Minimize a unimodal function on [lo, hi] by golden-section search.

    The bracket shrinks by the golden ratio each iteration, so successive
    probe placements move by less than the bracket width; the search stops
    once the bracket is narrower than ``gamma`` and returns its midpoint.
    The objective is never evaluated outside the initial bracket.  Exceeding
    ``max_iter`` raises :class:`ConvergenceError` (with the default budget
    that would take a bracket over 40 orders of magnitude wider than
    ``gamma``).
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")

    evals: list[tuple[float, float]] = []

    def f(x: float) -> float:
        y = float(objective(x))
        evals.append((x, y))
        return y

    a, b = float(lo), float(hi)
    h = b - a
    iterations = 0
    if h > gamma:
        c = b - _INV_PHI * h
        d = a + _INV_PHI * h
        yc, yd = f(c), f(d)
        while h > gamma:
            if iterations >= max_iter:
                raise ConvergenceError(
                    f"golden-section bracket still {h:.3e} wide after "
                    f"{max_iter} iterations (target {gamma:.3e})"
                )
            if yc < yd:
                b, d, yd = d, c, yc
                h = b - a
                c = b - _INV_PHI * h
                yc = f(c)
            else:
                a, c, yc = c, d, yd
                h = b - a
                d = a + _INV_PHI * h
                yd = f(d)
            iterations += 1
    return 0.5 * (a + b), SearchTrace(
        evaluations=tuple(evals), bracket_width=h, iterations=iterations
    )


def mse_exp(
    theta_hat: np.ndarray,
    basis: BasisSet,
    lam: float,
    rec: AcquisitionRecord,
    model: QuantizerModel,
    epsilon: float = DEFAULT_EPSILON,
    use_averaged: bool = True,
) -> float:
    """Experimental MSE: fitted model vs reconstructed samples.

    By default each sample is predicted from the subset-averaged basis row
    of its phase bin — the same quantity the estimator fits, which keeps
    this score consistent with the estimation chain.  Set
    ``use_averaged=False`` to predict from each sample's own basis vector
    instead.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    volts = reconstruction_value(model, rec.codes)
    n = rec.n_samples
    if use_averaged:
        part = async_partition(n, lam, epsilon)
        avg = average_basis(part, basis, lam)
        fitted = (avg.rows @ theta_hat)[part.labels]
    else:
        fitted = eval_sample_vector(basis, np.arange(n), lam) @ theta_hat
    return float(np.mean((fitted - volts) ** 2))


def qbe_fit_unknown_freq(
    rec: AcquisitionRecord,
    basis: BasisSet,
    model: QuantizerModel,
    gamma: float = 1e-9,
    bracket_halfwidth: float | None = None,
    epsilon: float = DEFAULT_EPSILON,
    guards: tuple[float, float] = DEFAULT_GUARDS,
    sigma: float | None = None,
) -> FitResult:
    """Quantile-based fit with the frequency found by direct search.

    A spectral peak of the reconstructed samples seeds the search; the
    experimental MSE of a full fit is then minimized by golden section
    over a bracket of ``bracket_halfwidth`` (default two DFT bins) around
    the seed.  Candidate frequencies whose fit fails outright score
    infinity, steering the search back to workable territory.  The
    returned result carries the evaluation trace.
    """
    from .baseline import dft_frequency_guess

    volts = reconstruction_value(model, rec.codes)
    lam0 = dft_frequency_guess(volts)
    w = 2.0 / rec.n_samples if bracket_halfwidth is None else float(bracket_halfwidth)
    if w <= 0:
        raise ValueError("bracket_halfwidth must be > 0")

    cache: dict[float, float] = {}

    def objective(lam: float) -> float:
        if lam in cache:
            return cache[lam]
        try:
            fit = qbe_fit(
                rec, basis, lam, model, epsilon=epsilon, guards=guards, sigma=sigma
            )
            value = mse_exp(fit.theta_hat, basis, lam, rec, model, epsilon=epsilon)
        except QuantfitError:
            value = float("inf")
        cache[lam] = value
        return value

    lam_star, trace = golden_section(objective, lam0 - w, lam0 + w, gamma)
    fit = qbe_fit(
        rec, basis, lam_star, model, epsilon=epsilon, guards=guards, sigma=sigma
    )
    return FitResult(
        theta_hat=fit.theta_hat,
        sigma_hat=fit.sigma_hat,
        sigma_known=fit.sigma_known,
        lam=lam_star,
        rows_used=fit.rows_used,
        condition=fit.condition,
        cdf_points=fit.cdf_points,
        trace=trace,
    )
