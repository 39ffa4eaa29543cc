"""Reference-prior estimators, their delta-method intervals, and constant fitting.

Three estimators of the prior at theta:

* ``fk``   exp(mean_j r_j(theta)), estimating the prior up to an unknown constant.
* ``f``    fk(theta) / fk(theta0) with the two sides simulated from independent streams.
* ``fnac`` the same ratio with both sides driven by one uniform matrix.

Interval half-widths use the number of replicate samples ``m`` under the
square root; with the default m = k this is the familiar k^(-1/2) factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from refprior.errors import DomainError, InternalError, ShapeMismatch
from refprior.models import Model, get_model
from refprior.quadrature import DEFAULT_SETTINGS, QuadratureSettings
from refprior.sampling import UniformMatrix, sample_matrix
from refprior.special import normal_quantile

VARIANCE_CLAMP = 1e-12
ROUNDING_ULPS = 64


@dataclass(frozen=True)
class FkEstimate:
    theta: float
    value: float
    mu1_hat: float
    sigma1_hat: float
    m: int
    k: int


@dataclass(frozen=True)
class RatioEstimate:
    theta: float
    theta0: float
    value: float
    mu1_hat: float
    mu2_hat: float
    sigma1_sq: float
    sigma2_sq: float
    sigma12: float
    m: int
    k: int
    crn: bool
    diff_var: float | None = None  # sample variance of r1 - r2, when the r values were seen

    @property
    def combined_variance(self) -> float:
        """sigma1^2 + sigma2^2 - 2 sigma12, the variance of r(theta) - r(theta0).

        Uses the directly computed variance of the differences when available;
        the three-term form cancels badly when the two sides are nearly equal.
        """
        if self.diff_var is not None:
            return self.diff_var
        return self.sigma1_sq + self.sigma2_sq - 2.0 * self.sigma12


@dataclass(frozen=True)
class Interval:
    center: float
    half_width: float
    lo: float
    hi: float
    alpha: float


@dataclass(frozen=True)
class EarpFit:
    a_hat: float
    s_hat: int
    earp_min: float
    ratios_sorted: np.ndarray
    earp_by_s: np.ndarray


def r_values(model, samples: np.ndarray, theta: float, quad: QuadratureSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """r_j(theta) for each row of ``samples``; the rows must be consistent with theta."""
    model = get_model(model)
    theta = model.check_theta(theta)
    r = model.r_rows(samples, theta, quad)
    if np.isneginf(r).any():
        raise InternalError(f"sample row outside the support at theta={theta}; r_j = -inf")
    if not np.isfinite(r).all():
        raise InternalError(f"non-finite r_j at theta={theta}")
    return r


def _mean_var(r: np.ndarray) -> tuple[float, float]:
    mu = float(np.mean(r))
    if r.size < 2:
        raise DomainError("variance estimates need m >= 2 replicate samples")
    d = r - mu
    return mu, float(np.sum(d * d) / (r.size - 1))


def fk_from_r(theta: float, r: np.ndarray, k: int) -> FkEstimate:
    """fk from precomputed r_j values (one per replicate sample of size k)."""
    r = np.asarray(r, dtype=float)
    mu, var = _mean_var(r)
    return FkEstimate(float(theta), math.exp(mu), mu, math.sqrt(var), r.size, int(k))


def fk_from_samples(model, theta: float, samples, quad: QuadratureSettings = DEFAULT_SETTINGS) -> FkEstimate:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    return fk_from_r(theta, r_values(model, samples, theta, quad), samples.shape[1])


def fk_hat(model, theta: float, U: UniformMatrix, quad: QuadratureSettings = DEFAULT_SETTINGS) -> FkEstimate:
    return fk_from_samples(model, theta, sample_matrix(model, U, theta), quad)


def ratio_from_samples(
    model,
    theta: float,
    theta0: float,
    x_theta,
    x_theta0,
    quad: QuadratureSettings = DEFAULT_SETTINGS,
    crn: bool = False,
) -> RatioEstimate:
    x_theta = np.atleast_2d(np.asarray(x_theta, dtype=float))
    x_theta0 = np.atleast_2d(np.asarray(x_theta0, dtype=float))
    if x_theta.shape != x_theta0.shape:
        raise ShapeMismatch(f"sample matrices differ in shape: {x_theta.shape} vs {x_theta0.shape}")
    r1 = r_values(model, x_theta, theta, quad)
    r2 = r_values(model, x_theta0, theta0, quad)
    return ratio_from_r(theta, theta0, r1, r2, x_theta.shape[1], crn)


def ratio_from_r(theta: float, theta0: float, r1: np.ndarray, r2: np.ndarray, k: int, crn: bool) -> RatioEstimate:
    """Ratio estimate from paired r_j values at theta (r1) and theta0 (r2)."""
    r1, r2 = np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    if r1.shape != r2.shape:
        raise ShapeMismatch(f"r vectors differ in shape: {r1.shape} vs {r2.shape}")
    m = r1.size
    # variances kept unsquare-rooted so identical rows cancel exactly against sigma12
    mu1, var1 = _mean_var(r1)
    mu2, var2 = _mean_var(r2)
    # rows are paired j with j; the centered form equals
    # [sum(r1 r2)/m - mu1 mu2] / ((m-1)/m) and is exactly 0 for identical rows
    s12 = float(np.sum((r1 - mu1) * (r2 - mu2)) / (m - 1))
    _, dvar = _mean_var(r1 - r2)
    # spread below the rounding level of r itself is arithmetic noise, not variance
    noise = (ROUNDING_ULPS * np.finfo(float).eps * max(float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), 1.0)) ** 2
    return RatioEstimate(
        theta=float(theta), theta0=float(theta0), value=math.exp(mu1 - mu2),
        mu1_hat=mu1, mu2_hat=mu2, sigma1_sq=var1, sigma2_sq=var2, sigma12=s12,
        m=m, k=k, crn=crn, diff_var=0.0 if dvar <= noise else dvar,
    )


def f_hat(
    model,
    theta: float,
    theta0: float,
    U_theta: UniformMatrix,
    U_theta0: UniformMatrix,
    quad: QuadratureSettings = DEFAULT_SETTINGS,
) -> RatioEstimate:
    """Ratio estimator fk(theta)/fk(theta0), each side sampled from its own matrix.

    Passing the same matrix for both sides gives the common-random-numbers
    estimator; see :func:`fnac_hat`.
    """
    if U_theta.shape != U_theta0.shape:
        raise ShapeMismatch(f"uniform matrices differ in shape: {U_theta.shape} vs {U_theta0.shape}")
    shared = U_theta is U_theta0 or (U_theta.key is not None and U_theta.key == U_theta0.key)
    return ratio_from_samples(
        model, theta, theta0,
        sample_matrix(model, U_theta, theta), sample_matrix(model, U_theta0, theta0),
        quad, crn=shared,
    )


def fnac_from_samples(model, theta: float, theta0: float, x_theta, quad=DEFAULT_SETTINGS) -> RatioEstimate:
    """CRN ratio from a theta-sample; the theta0-sample is its image under the CRN map."""
    model = get_model(model)
    x_theta = np.atleast_2d(np.asarray(x_theta, dtype=float))
    x0 = np.asarray(model.crn_transform(x_theta, theta, theta0), dtype=float).reshape(x_theta.shape)
    return ratio_from_samples(model, theta, theta0, x_theta, x0, quad, crn=True)


def fnac_hat(model, theta: float, theta0: float, U: UniformMatrix, quad=DEFAULT_SETTINGS) -> RatioEstimate:
    return fnac_from_samples(model, theta, theta0, sample_matrix(model, U, theta), quad)


def fnac_exp_closed_form(theta: float, theta0: float) -> float:
    """Exact value of the CRN ratio for exponential data: theta0 / theta."""
    if not (theta > 0 and theta0 > 0):
        raise DomainError("theta and theta0 must be positive")
    return theta0 / theta


def _z(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return normal_quantile(1.0 - alpha / 2.0)


def half_width_fk(est: FkEstimate, alpha: float) -> Interval:
    z = _z(alpha)
    if est.m < 2:
        raise DomainError("half-width needs m >= 2")
    hw = z * math.exp(est.mu1_hat) * est.sigma1_hat / math.sqrt(est.m)
    return Interval(est.value, hw, est.value - hw, est.value + hw, alpha)


def half_width_f(est: RatioEstimate, alpha: float) -> Interval:
    z = _z(alpha)
    if est.m < 2:
        raise DomainError("half-width needs m >= 2")
    var = est.combined_variance
    if var < 0.0:
        if var < -VARIANCE_CLAMP * max(1.0, est.sigma1_sq + est.sigma2_sq):
            raise InternalError(f"combined variance is negative ({var:.3g})")
        var = 0.0
    hw = z * math.exp(est.mu1_hat - est.mu2_hat) * math.sqrt(var) / math.sqrt(est.m)
    return Interval(est.value, hw, est.value - hw, est.value + hw, alpha)


def earp_candidates(ratios_sorted: np.ndarray) -> np.ndarray:
    """EARP for each split s = 0..R, using the closed form of each case.

    With ratios sorted ascending, split s puts the constant at the (s+1)-th
    ratio (first ratio for s = 0, last for s = R); the s ratios below it
    contribute 1 - r/a and the rest r/a - 1.
    """
    r = np.asarray(ratios_sorted, dtype=float)
    R = r.size
    total = float(np.sum(r))
    prefix = np.concatenate([[0.0], np.cumsum(r)])
    out = np.empty(R + 1)
    out[0] = total / (r[0] * R) - 1.0
    for s in range(1, R):
        a = r[s]
        out[s] = 2.0 * s / R - 1.0 + ((total - prefix[s]) - prefix[s]) / (a * R)
    out[R] = 1.0 - total / (r[-1] * R)
    return out


def fit_constant_earp(
    estimates: Iterable[tuple[float, float]],
    reference: Callable[[float], float] | Model,
) -> EarpFit:
    """Proportionality constant minimizing the mean relative absolute error.

    ``estimates`` is a sequence of (theta, estimate) pairs and ``reference``
    evaluates the target prior (a Model uses its known prior). Ties between
    splits go to the smallest s.
    """
    if isinstance(reference, Model):
        ref = reference.prior
    else:
        ref = reference
    pairs = [(float(t), float(e)) for t, e in estimates]
    if not pairs:
        raise DomainError("fit_constant_earp needs at least one estimate")
    est = np.array([e for _, e in pairs])
    fref = np.array([float(ref(t)) for t, _ in pairs])
    if not (np.all(est > 0) and np.all(fref > 0)):
        raise DomainError("estimates and reference values must be positive")
    ratios = np.sort(est / fref)
    earps = earp_candidates(ratios)
    best = float(np.min(earps))
    s_hat = int(np.flatnonzero(earps <= best + 1e-12 * max(1.0, best))[0])
    a_hat = float(ratios[min(s_hat, ratios.size - 1)])
    return EarpFit(a_hat, s_hat, max(0.0, float(earps[s_hat])), ratios, earps)
