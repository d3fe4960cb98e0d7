"""Classical least-squares sine fitting on reconstructed sample values.

These fits treat each reconstructed voltage as the signal value plus
noise, ignoring the quantizer's threshold layout — the standard approach
this package's quantile estimator is compared against.  Feed them
``reconstruction_value(model, rec.codes)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NoPeakError, SingularSystemError
from .search import golden_section
from .signals import eval_sample_vector, sine_basis

__all__ = [
    "SineFitResult",
    "sinefit3",
    "sinefit4",
    "dft_frequency_guess",
]


@dataclass(frozen=True)
class SineFitResult:
    """Coefficients of a fitted three-parameter sinusoid.

    ``theta_hat`` is ordered (sin, cos, dc) to match the sine basis.
    ``lam`` is the frequency the fit was evaluated at (for the
    four-parameter variant, the refined estimate).
    """

    theta_hat: np.ndarray
    lam: float
    residual_rms: float
    iterations: int = 0


def sinefit3(samples: np.ndarray, lam: float) -> SineFitResult:
    """Least-squares sine/cosine/DC fit at a fixed frequency.

    Degenerate frequencies (0, 1/2, or anything else that collapses the
    sine column) surface as a rank-deficient design and raise
    :class:`SingularSystemError`.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 3:
        raise ValueError("need a 1-D array of at least 3 samples")
    design = eval_sample_vector(sine_basis(), np.arange(samples.size), lam)
    x, _, rank, sv = np.linalg.lstsq(design, samples, rcond=None)
    if rank < 3:
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        raise SingularSystemError(
            f"sine design matrix is rank deficient at lam={lam!r}", cond
        )
    resid = design @ x - samples
    return SineFitResult(
        theta_hat=x,
        lam=float(lam),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def sinefit4(
    samples: np.ndarray,
    lam0: float,
    gamma: float,
    bracket_halfwidth: float | None = None,
    max_recenter: int = 20,
) -> SineFitResult:
    """Four-parameter sine fit: frequency refined by golden-section search.

    Every candidate frequency is scored by the residual RMS of
    :func:`sinefit3`, so the search alternates linear fits with bracket
    shrinking.  The bracket starts at ``lam0 +/- bracket_halfwidth``
    (default two DFT bins, ``2 / len(samples)``) and is re-centered when
    the minimum lands on its edge; running off the edge ``max_recenter``
    times raises :class:`ConvergenceError`.
    """
    samples = np.asarray(samples, dtype=float)
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    w = 2.0 / samples.size if bracket_halfwidth is None else float(bracket_halfwidth)
    if w <= 0:
        raise ValueError("bracket_halfwidth must be > 0")

    evals = 0

    def objective(lam: float) -> float:
        nonlocal evals
        evals += 1
        try:
            return sinefit3(samples, lam).residual_rms
        except SingularSystemError:
            return float("inf")

    center = float(lam0)
    for _ in range(max_recenter):
        lam_star, _ = golden_section(objective, center - w, center + w, gamma)
        # A minimum within gamma of the bracket edge probably lies outside;
        # slide the bracket instead of trusting it.
        if w <= 2.0 * gamma or abs(lam_star - center) <= w - gamma:
            fit = sinefit3(samples, lam_star)
            return SineFitResult(
                theta_hat=fit.theta_hat,
                lam=lam_star,
                residual_rms=fit.residual_rms,
                iterations=evals,
            )
        center = lam_star  # minimum sits at the bracket edge; slide over
    raise ConvergenceError(
        f"frequency refinement kept running off its bracket after "
        f"{max_recenter} re-centerings (last center {center!r})"
    )


def dft_frequency_guess(samples: np.ndarray) -> float:
    """Coarse frequency estimate from the largest non-DC spectral line.

    The peak bin is refined by parabolic interpolation on the log
    magnitude of the bin and its two neighbours, which is exact for a
    Gaussian-windowed tone and good to a small fraction of a bin for a
    rectangular window.  A tone exactly on a bin has zero-magnitude
    neighbours; interpolation is skipped and the bin frequency returned
    exactly.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if samples.ndim != 1 or n < 8:
        raise ValueError("need a 1-D array of at least 8 samples")
    if np.ptp(samples) == 0:
        raise NoPeakError("constant input has no spectral peak")
    mag = np.abs(np.fft.rfft(samples))
    mag[0] = 0.0  # the DC line is not a tone
    k = int(np.argmax(mag))
    if mag[k] == 0.0:
        raise NoPeakError("spectrum is empty apart from DC")

    delta = 0.0
    if 1 <= k < mag.size - 1 and mag[k - 1] > 0 and mag[k + 1] > 0:
        la, lb, lg = np.log(mag[k - 1]), np.log(mag[k]), np.log(mag[k + 1])
        denom = la - 2.0 * lb + lg
        if denom != 0.0:
            delta = 0.5 * (la - lg) / denom
            delta = float(np.clip(delta, -0.5, 0.5))
    return (k + delta) / n
