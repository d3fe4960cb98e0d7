"""Quantile-based parameter estimation from quantizer output codes.

The chain: group samples by phase, estimate per-subset threshold-crossing
probabilities from code counts, map them through the inverse Gaussian CDF,
and solve a linear system for the signal coefficients (and, if unknown,
the noise scale).

With noise standard deviation ``sigma`` known, each admissible pair of
threshold ``T_k`` and subset ``m`` contributes one linear equation

    S_bar[m]' theta = T_k - sigma * invcdf(p_hat[k, m]).

With ``sigma`` unknown, the same data give

    [S_bar[m], T_k] . [theta / sigma, -1 / sigma] = -invcdf(p_hat[k, m]),

an augmented system whose last coefficient recovers the noise scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import erfc

from .errors import InsufficientDataError, InvalidEstimateError, SingularSystemError
from .partition import AveragedBasis, async_partition, average_basis
from .quantizer import QuantizerModel
from .signals import AcquisitionRecord, BasisSet, ParamVector

if TYPE_CHECKING:  # pragma: no cover
    from .search import SearchTrace

__all__ = [
    "gauss_cdf",
    "inv_gauss_cdf",
    "ProbabilityTable",
    "estimate_probabilities",
    "exact_probability_table",
    "apply_guard",
    "DesignSystem",
    "assemble_known_sigma",
    "assemble_unknown_sigma",
    "solve_ls",
    "recover_params",
    "FitResult",
    "qbe_fit",
    "estimate_noise_cdf",
    "estimate_noise_pdf",
]

DEFAULT_EPSILON = 0.0011
DEFAULT_GUARDS = (0.05, 0.95)

_SQRT2 = np.sqrt(2.0)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


def gauss_cdf(z):
    """Standard normal CDF, accurate in both tails."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)


# Rational minimax coefficients for the initial inverse-CDF guess
# (central region and tails), good to ~1e-9 on their own.
_ICDF_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ICDF_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ICDF_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ICDF_D = (
    7.784695709041462e-03, 3.224671290700398e-01,
    2.445134137142996e00, 3.754408661907416e00,
)
_ICDF_SPLIT = 0.02425


def inv_gauss_cdf(p):
    """Inverse of the standard normal CDF.

    A rational approximation (central polynomial plus two tail branches)
    supplies the initial value; one Halley step against the exact CDF
    polishes it to full double precision.  Accepts scalars or arrays;
    every entry must lie strictly inside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if arr.size and not ((arr > 0.0) & (arr < 1.0)).all():
        raise ValueError("probabilities must lie strictly inside (0, 1)")

    x = np.atleast_1d(arr).copy()
    z = np.empty_like(x)

    lo = x < _ICDF_SPLIT
    hi = x > 1.0 - _ICDF_SPLIT
    mid = ~(lo | hi)

    if lo.any():
        q = np.sqrt(-2.0 * np.log(x[lo]))
        z[lo] = np.polyval(_ICDF_C, q) / np.polyval(_ICDF_D + (1.0,), q)
    if hi.any():
        q = np.sqrt(-2.0 * np.log(1.0 - x[hi]))
        z[hi] = -np.polyval(_ICDF_C, q) / np.polyval(_ICDF_D + (1.0,), q)
    if mid.any():
        q = x[mid] - 0.5
        r = q * q
        z[mid] = q * np.polyval(_ICDF_A, r) / np.polyval(_ICDF_B + (1.0,), r)

    # One Halley refinement; skipped where exp(z^2/2) would overflow
    # (only relevant beyond |z| ~ 37, far outside any p this package meets).
    safe = np.abs(z) < 37.0
    if safe.any():
        e = gauss_cdf(z[safe]) - x[safe]
        u = e * _SQRT_2PI * np.exp(0.5 * z[safe] ** 2)
        z[safe] = z[safe] - u / (1.0 + 0.5 * z[safe] * u)

    if arr.ndim == 0:
        return float(z[0])
    return z.reshape(arr.shape)


@dataclass(frozen=True)
class ProbabilityTable:
    """Empirical threshold-crossing probabilities per (threshold, subset).

    ``count_le[i, m]`` counts samples of subset ``m`` whose code is below
    threshold ``i + 1`` (i.e. code <= i); ``p_hat = count_le / sizes``.
    ``admissible`` marks entries usable for estimation: subset large
    enough and probability strictly between the guard bounds.
    """

    count_le: np.ndarray
    sizes: np.ndarray
    p_hat: np.ndarray
    admissible: np.ndarray
    guard_lo: float
    guard_hi: float

    @property
    def n_thresholds(self) -> int:
        return self.p_hat.shape[0]

    @property
    def n_subsets(self) -> int:
        return self.p_hat.shape[1]


MIN_SUBSET_SIZE = 2


def _admissible(p: np.ndarray, sizes: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return (p > lo) & (p < hi) & (sizes >= MIN_SUBSET_SIZE)[np.newaxis, :]


def estimate_probabilities(
    rec: AcquisitionRecord, part, model: QuantizerModel
) -> ProbabilityTable:
    """Count code occurrences per subset and convert to per-threshold
    empirical probabilities.

    Entries start admissible when their subset has at least
    ``MIN_SUBSET_SIZE`` members and the probability is strictly inside
    (0, 1); apply :func:`apply_guard` to tighten the bounds.
    """
    codes = rec.codes
    if part.n_samples != codes.size:
        raise ValueError("partition and record disagree on sample count")
    k = model.n_codes
    if codes.max() >= k:
        raise ValueError("record contains codes beyond the quantizer's range")
    m = part.n_subsets
    flat = codes * m + part.labels
    joint = np.bincount(flat, minlength=k * m).reshape(k, m)
    count_le = np.cumsum(joint, axis=0)[: k - 1].astype(float)
    sizes = part.sizes
    p_hat = count_le / sizes[np.newaxis, :]
    return ProbabilityTable(
        count_le=count_le,
        sizes=sizes,
        p_hat=p_hat,
        admissible=_admissible(p_hat, sizes, 0.0, 1.0),
        guard_lo=0.0,
        guard_hi=1.0,
    )


def exact_probability_table(
    avg: AveragedBasis, model: QuantizerModel, params: ParamVector
) -> ProbabilityTable:
    """Noise-free oracle: the exact crossing probabilities implied by known
    signal parameters.  Useful for consistency checks of the estimation
    chain without sampling error."""
    if params.sigma is None:
        raise ValueError("params.sigma is required")
    x_bar = avg.rows @ params.theta
    p = gauss_cdf((model.levels[:, np.newaxis] - x_bar[np.newaxis, :]) / params.sigma)
    sizes = np.asarray(avg.sizes)
    return ProbabilityTable(
        count_le=p * sizes[np.newaxis, :],
        sizes=sizes,
        p_hat=p,
        admissible=_admissible(p, sizes, 0.0, 1.0),
        guard_lo=0.0,
        guard_hi=1.0,
    )


def apply_guard(
    table: ProbabilityTable, lo: float = DEFAULT_GUARDS[0], hi: float = DEFAULT_GUARDS[1]
) -> ProbabilityTable:
    """Restrict admissible entries to guard bounds ``lo < p_hat < hi``.

    Probabilities near 0 or 1 sit on the flat tails of the inverse CDF,
    where small count fluctuations translate into huge abscissa errors;
    the guard keeps those rows out of the linear system.
    """
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("guards must satisfy 0 <= lo < hi <= 1")
    return replace(
        table,
        admissible=_admissible(table.p_hat, table.sizes, lo, hi),
        guard_lo=float(lo),
        guard_hi=float(hi),
    )


@dataclass(frozen=True)
class DesignSystem:
    """Linear system assembled from admissible table entries.

    Row ``r`` came from threshold index ``threshold_index[r]`` (0-based,
    i.e. transition ``T_{threshold_index[r] + 1}``) and subset
    ``subset_index[r]``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    mode: str
    threshold_index: np.ndarray
    subset_index: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]


def _admissible_rows(table: ProbabilityTable):
    ki, mi = np.nonzero(table.admissible)
    if ki.size == 0:
        raise InsufficientDataError(
            "no admissible (threshold, subset) pairs; all probabilities fall "
            "outside the guards or subsets are too small"
        )
    return ki, mi


def assemble_known_sigma(
    table: ProbabilityTable, avg: AveragedBasis, model: QuantizerModel, sigma: float
) -> DesignSystem:
    """Rows ``S_bar[m]' theta = T_k - sigma * invcdf(p_hat)``."""
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    ki, mi = _admissible_rows(table)
    z = inv_gauss_cdf(table.p_hat[ki, mi])
    return DesignSystem(
        matrix=avg.rows[mi],
        rhs=model.levels[ki] - sigma * z,
        mode="known_sigma",
        threshold_index=ki,
        subset_index=mi,
    )


def assemble_unknown_sigma(
    table: ProbabilityTable, avg: AveragedBasis, model: QuantizerModel
) -> DesignSystem:
    """Rows ``[S_bar[m], T_k] . [theta/sigma, -1/sigma] = -invcdf(p_hat)``."""
    ki, mi = _admissible_rows(table)
    z = inv_gauss_cdf(table.p_hat[ki, mi])
    matrix = np.hstack([avg.rows[mi], model.levels[ki, np.newaxis]])
    return DesignSystem(
        matrix=matrix,
        rhs=-z,
        mode="unknown_sigma",
        threshold_index=ki,
        subset_index=mi,
    )


def solve_ls(system: DesignSystem) -> np.ndarray:
    """Least-squares solution via orthogonal factorization (SVD).

    Raises :class:`InsufficientDataError` when there are fewer rows than
    unknowns and :class:`SingularSystemError` when the matrix is rank
    deficient, carrying the condition number for diagnosis.
    """
    rows, cols = system.matrix.shape
    if rows < cols:
        raise InsufficientDataError(
            f"{rows} equations for {cols} unknowns; need more admissible "
            "(threshold, subset) pairs"
        )
    x, _, rank, sv = np.linalg.lstsq(system.matrix, system.rhs, rcond=None)
    if rank < cols:
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        raise SingularSystemError("design matrix is rank deficient", cond)
    return x


def recover_params(theta_u: np.ndarray) -> tuple[np.ndarray, float]:
    """Undo the unknown-sigma reparameterization.

    The last coefficient equals ``-1 / sigma`` and must be negative for a
    physically meaningful (positive) noise scale.
    """
    theta_u = np.asarray(theta_u, dtype=float)
    last = theta_u[-1]
    if not last < 0:
        raise InvalidEstimateError(
            f"recovered noise-scale coefficient is {last:.6g}; a valid "
            "estimate requires it to be negative"
        )
    sigma = -1.0 / last
    return theta_u[:-1] * sigma, float(sigma)


@dataclass(frozen=True)
class FitResult:
    """Everything recovered by one fit.

    ``cdf_points`` holds pointwise noise-CDF samples as an array of
    (abscissa, probability) rows sorted by abscissa; ``condition`` is the
    condition number of the design matrix actually solved.
    """

    theta_hat: np.ndarray
    sigma_hat: float
    sigma_known: bool
    lam: float
    rows_used: int
    condition: float
    cdf_points: np.ndarray
    trace: "SearchTrace | None" = None


def _noise_cdf_points(
    table: ProbabilityTable,
    avg: AveragedBasis,
    model: QuantizerModel,
    theta: np.ndarray,
    sigma: float,
) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    ki, mi = _admissible_rows(table)
    x_bar = avg.rows @ np.asarray(theta, dtype=float)
    abscissa = (model.levels[ki] - x_bar[mi]) / sigma
    order = np.argsort(abscissa, kind="stable")
    return np.column_stack([abscissa[order], table.p_hat[ki, mi][order]])


def estimate_noise_cdf(
    fit: FitResult,
    table: ProbabilityTable,
    avg: AveragedBasis,
    model: QuantizerModel,
) -> np.ndarray:
    """Pointwise noise-CDF samples implied by a fitted signal.

    Each admissible (threshold, subset) pair pins the noise CDF at
    abscissa ``(T_k - S_bar[m]' theta_hat) / sigma_hat`` with value
    ``p_hat``.  If the noise really is Gaussian these points fall on the
    standard normal CDF; systematic departure is evidence against
    Gaussianity.  Returns (abscissa, probability) rows sorted by abscissa.
    """
    return _noise_cdf_points(table, avg, model, fit.theta_hat, fit.sigma_hat)


def estimate_noise_pdf(cdf_points: np.ndarray) -> np.ndarray:
    """Differentiate pointwise CDF samples into density estimates.

    Ordinates sharing an abscissa (exact duplicates) are averaged first;
    central differences over the surviving points give the density at each
    interior abscissa.  Needs at least three distinct abscissas.
    """
    pts = np.asarray(cdf_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("cdf_points must be an (n, 2) array")
    x, inv = np.unique(pts[:, 0], return_inverse=True)
    if x.size < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct abscissas to differentiate, got {x.size}"
        )
    y = np.bincount(inv, weights=pts[:, 1]) / np.bincount(inv)
    dens = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    return np.column_stack([x[1:-1], dens])


def qbe_fit(
    rec: AcquisitionRecord,
    basis: BasisSet,
    lam: float,
    model: QuantizerModel,
    epsilon: float = DEFAULT_EPSILON,
    guards: tuple[float, float] = DEFAULT_GUARDS,
    sigma: float | None = None,
) -> FitResult:
    """Full estimation chain at a known frequency.

    ``model`` is the quantizer the estimator believes in (its threshold
    voltages enter the linear system); pass a calibrated or corrupted
    model to study mismatch with the record's true generator.  ``sigma``
    fixes the noise scale when it is known; otherwise the augmented system
    estimates it.
    """
    part = async_partition(rec.n_samples, lam, epsilon)
    avg = average_basis(part, basis, lam)
    table = apply_guard(estimate_probabilities(rec, part, model), *guards)
    if sigma is not None:
        system = assemble_known_sigma(table, avg, model, sigma)
        theta_hat = solve_ls(system)
        sigma_hat = float(sigma)
    else:
        system = assemble_unknown_sigma(table, avg, model)
        theta_hat, sigma_hat = recover_params(solve_ls(system))
    condition = float(np.linalg.cond(system.matrix))
    cdf_points = _noise_cdf_points(table, avg, model, theta_hat, sigma_hat)
    return FitResult(
        theta_hat=theta_hat,
        sigma_hat=sigma_hat,
        sigma_known=sigma is not None,
        lam=float(lam),
        rows_used=system.n_rows,
        condition=condition,
        cdf_points=cdf_points,
    )
