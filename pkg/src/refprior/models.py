"""The four one-parameter families and their per-sample likelihood quantities.

Every likelihood quantity is computed in log space. A support violation is
reported as ``-inf`` (log of an indicator that is zero), never as an error.
Batch methods take an (m, k) array whose rows are independent samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.special import gammaln, logsumexp

from refprior.errors import DegenerateSample, DomainError, EmptySample
from refprior.quadrature import DEFAULT_SETTINGS, QuadratureSettings, log_integrate_many
from refprior.special import digamma, log_abs_expm1


class ModelId(str, Enum):
    EXP_RATE = "exp"
    UNIF_0_THETA = "unif0"
    UNIF_THETA_THETA_SQ = "unifsq"
    TRIANGULAR_01 = "triangular"


@dataclass
class Sample:
    """One simulated sample of size k; ``sorted_view`` holds its order statistics."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.values.ndim != 1:
            raise DomainError("a Sample is a 1-d vector of observations")
        if self.values.size == 0:
            raise EmptySample("sample has no observations")

    @property
    def k(self) -> int:
        return self.values.size

    @cached_property
    def sorted_view(self) -> np.ndarray:
        return np.sort(self.values)


def _as_rows(x) -> np.ndarray:
    if isinstance(x, Sample):
        x = x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DomainError("expected a sample vector or an (m, k) sample matrix")
    if arr.shape[1] == 0:
        raise EmptySample("sample has no observations")
    return arr


@dataclass(frozen=True)
class Model:
    """Base class. Subclasses implement the family-specific formulas."""

    id: ModelId
    theta_domain: tuple[float, float]
    default_theta0: float
    prior_is_conjecture: bool = field(default=False)
    min_k: int = 1

    # -- domain checks ---------------------------------------------------
    def in_domain(self, theta) -> np.ndarray:
        lo, hi = self.theta_domain
        theta = np.asarray(theta, dtype=float)
        return (theta > lo) & (theta < hi)

    def check_theta(self, theta) -> float:
        theta = float(theta)
        if not self.in_domain(theta):
            raise DomainError(f"theta={theta!r} outside {self.id.value} domain {self.theta_domain}")
        return theta

    def _check_k(self, k: int) -> None:
        if k < self.min_k:
            raise DomainError(f"{self.id.value} marginal constant needs k >= {self.min_k}, got k={k}")

    # -- family-specific pieces (vectorized) ------------------------------
    def log_density(self, y, theta):
        raise NotImplementedError

    def cdf(self, y, theta):
        raise NotImplementedError

    def _inverse_cdf(self, u, theta):
        raise NotImplementedError

    def _crn(self, y, theta, theta0):
        raise NotImplementedError

    def log_joint_rows(self, x, theta: float) -> np.ndarray:
        raise NotImplementedError

    def log_marginal_rows(self, x, quad: QuadratureSettings = DEFAULT_SETTINGS) -> np.ndarray:
        raise NotImplementedError

    def prior(self, theta):
        raise NotImplementedError

    # -- shared wrappers ----------------------------------------------------
    def inverse_cdf(self, u, theta):
        theta = self.check_theta(theta)
        u = np.asarray(u, dtype=float)
        if not np.all((u > 0.0) & (u < 1.0)):
            raise DomainError("inverse_cdf requires 0 < u < 1")
        out = self._inverse_cdf(u, theta)
        return float(out) if out.ndim == 0 else out

    def crn_transform(self, y, theta, theta0):
        theta = self.check_theta(theta)
        theta0 = self.check_theta(theta0)
        y = np.asarray(y, dtype=float)
        if theta == theta0:
            out = y.copy()
        else:
            out = self._crn(y, theta, theta0)
        return float(out) if out.ndim == 0 else out

    def r_rows(self, x, theta: float, quad: QuadratureSettings = DEFAULT_SETTINGS) -> np.ndarray:
        """r_j(theta) = log joint - log c_j for every row."""
        x = _as_rows(x)
        lj = self.log_joint_rows(x, theta)
        lc = self.log_marginal_rows(x, quad)
        return np.where(np.isneginf(lj), -np.inf, lj - lc)


class ExpRate(Model):
    """Exponential with rate theta: p(y|theta) = theta exp(-theta y)."""

    def __init__(self):
        super().__init__(ModelId.EXP_RATE, (0.0, math.inf), default_theta0=1.0)

    def log_density(self, y, theta):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, math.log(theta) - theta * y, -np.inf)

    def cdf(self, y, theta):
        return -np.expm1(-theta * np.asarray(y, dtype=float))

    def _inverse_cdf(self, u, theta):
        return -np.log1p(-u) / theta

    def _crn(self, y, theta, theta0):
        return y * (theta / theta0)

    def log_joint_rows(self, x, theta):
        x = _as_rows(x)
        k = x.shape[1]
        return k * math.log(theta) - theta * x.sum(axis=1)

    def log_marginal_rows(self, x, quad=DEFAULT_SETTINGS):
        # integral over theta of theta^k exp(-theta S) = k! / S^(k+1)
        x = _as_rows(x)
        k = x.shape[1]
        return gammaln(k + 1.0) - (k + 1.0) * np.log(x.sum(axis=1))

    def prior(self, theta):
        return 1.0 / np.asarray(theta, dtype=float)


class Unif0Theta(Model):
    """Uniform on (0, theta)."""

    def __init__(self):
        super().__init__(ModelId.UNIF_0_THETA, (0.0, math.inf), default_theta0=1.0, min_k=2)

    def log_density(self, y, theta):
        y = np.asarray(y, dtype=float)
        return np.where((y > 0) & (y < theta), -math.log(theta), -np.inf)

    def cdf(self, y, theta):
        return np.asarray(y, dtype=float) / theta

    def _inverse_cdf(self, u, theta):
        return u * theta

    def _crn(self, y, theta, theta0):
        return y * (theta0 / theta)

    def log_joint_rows(self, x, theta):
        x = _as_rows(x)
        k = x.shape[1]
        inside = x.max(axis=1) <= theta
        return np.where(inside, -k * math.log(theta), -np.inf)

    def log_marginal_rows(self, x, quad=DEFAULT_SETTINGS):
        # integral of theta^-k over (t_(k), inf) = t_(k)^(1-k) / (k-1)
        x = _as_rows(x)
        k = x.shape[1]
        self._check_k(k)
        return (1.0 - k) * np.log(x.max(axis=1)) - math.log(k - 1.0)

    def prior(self, theta):
        return 1.0 / np.asarray(theta, dtype=float)


class UnifThetaThetaSq(Model):
    """Uniform on (theta, theta^2), theta > 1. The support moves with the parameter."""

    def __init__(self):
        super().__init__(ModelId.UNIF_THETA_THETA_SQ, (1.0, math.inf), default_theta0=1.001)

    @staticmethod
    def _log_scale(theta):
        theta = np.asarray(theta, dtype=float)
        return np.log(theta) + np.log(theta - 1.0)

    def log_density(self, y, theta):
        y = np.asarray(y, dtype=float)
        return np.where((y > theta) & (y < theta * theta), -self._log_scale(theta), -np.inf)

    def cdf(self, y, theta):
        return (np.asarray(y, dtype=float) - theta) / (theta * (theta - 1.0))

    def _inverse_cdf(self, u, theta):
        return theta + u * (theta * (theta - 1.0))

    def _crn(self, y, theta, theta0):
        return (y - theta) * (theta0 * (theta0 - 1.0) / (theta * (theta - 1.0))) + theta0

    def log_joint_rows(self, x, theta):
        x = _as_rows(x)
        k = x.shape[1]
        # indicator of sqrt(t_(k)) <= theta <= t_(1)
        inside = (x.max(axis=1) <= theta * theta) & (x.min(axis=1) >= theta)
        return np.where(inside, -k * float(self._log_scale(theta)), -np.inf)

    def integration_limits(self, x):
        x = _as_rows(x)
        return np.sqrt(x.max(axis=1)), x.min(axis=1)

    def log_marginal_rows(self, x, quad=DEFAULT_SETTINGS):
        x = _as_rows(x)
        k = x.shape[1]
        lo, hi = self.integration_limits(x)
        if not np.all(lo < hi):
            raise DegenerateSample("empty integration interval (sqrt(t_(k)), t_(1)) for some sample")
        if not np.all(lo > 1.0):
            raise DomainError("Unif(theta, theta^2) samples must exceed 1")

        def logf(t, owner):
            return -k * (np.log(t) + np.log(t - 1.0))

        return log_integrate_many(logf, lo, hi, quad)

    def prior(self, theta):
        theta = np.asarray(theta, dtype=float)
        arg = 2.0 * theta / (2.0 * theta - 1.0)
        psi = np.vectorize(digamma, otypes=[float])(arg)
        out = (2.0 * theta - 1.0) / (theta * (theta - 1.0)) * np.exp(psi - 1.0)
        return out


class Triangular01(Model):
    """Triangular on (0, 1) with mode theta."""

    # rows processed per block in the marginal constant; bounds the (rows, k, k) temporaries
    block_elements = 2_000_000

    def __init__(self):
        super().__init__(
            ModelId.TRIANGULAR_01, (0.0, 1.0), default_theta0=0.5, prior_is_conjecture=True, min_k=2
        )

    def log_density(self, y, theta):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            left = np.log(2.0 * y / theta)
            right = np.log(2.0 * (1.0 - y) / (1.0 - theta))
        out = np.where(y < theta, left, right)
        return np.where((y > 0) & (y < 1), out, -np.inf)

    def cdf(self, y, theta):
        y = np.asarray(y, dtype=float)
        return np.where(y <= theta, y * y / theta, 1.0 - (1.0 - y) ** 2 / (1.0 - theta))

    def _inverse_cdf(self, u, theta):
        with np.errstate(invalid="ignore"):
            left = np.sqrt(u * theta)
            right = 1.0 - np.sqrt((1.0 - u) * (1.0 - theta))
        return np.where(u <= theta, left, right)

    def _crn(self, y, theta, theta0):
        # four cases: which side of the mode y sits on, and where the shared
        # uniform u = F(y; theta) falls relative to theta0
        u = self.cdf(y, theta)
        below = y <= theta
        with np.errstate(invalid="ignore"):
            c1 = y * np.sqrt(theta0 / theta)
            c2 = np.sqrt(theta0 * (1.0 - (1.0 - y) ** 2 / (1.0 - theta)))
            c3 = 1.0 - np.sqrt((1.0 - theta0) * (1.0 - y * y / theta))
            c4 = 1.0 - (1.0 - y) * np.sqrt((1.0 - theta0) / (1.0 - theta))
        return np.where(u <= theta0, np.where(below, c1, c2), np.where(below, c3, c4))

    def log_joint_rows(self, x, theta):
        x = _as_rows(x)
        return self.log_density(x, theta).sum(axis=1)

    def log_marginal_rows(self, x, quad=DEFAULT_SETTINGS):
        x = _as_rows(x)
        m, k = x.shape
        self._check_k(k)
        t = np.sort(x, axis=1)
        if not np.all((t > 0.0) & (t < 1.0)):
            raise DomainError("triangular samples must lie in (0, 1)")
        block = max(1, self.block_elements // max(1, (k - 1) ** 2))
        out = np.empty(m)
        for start in range(0, m, block):
            out[start:start + block] = self._log_c_sorted(t[start:start + block])
        return out

    @staticmethod
    def _log_c_sorted(t: np.ndarray) -> np.ndarray:
        """log c for rows of order statistics.

        The theta axis splits at the order statistics into k+1 segments; on
        segment q (t_(q) < theta < t_(q+1)) the joint density is
        2^k prod_{i<=q} t_(i) prod_{i>q} (1-t_(i)) theta^-q (1-theta)^-(k-q).
        """
        m, k = t.shape
        logt = np.log(t)
        log1mt = np.log1p(-t)
        # prefix[q] = sum_{i<=q} log t_(i); suffix[q] = sum_{i>q} log(1-t_(i)), q = 0..k
        prefix = np.concatenate([np.zeros((m, 1)), np.cumsum(logt, axis=1)], axis=1)
        suffix = np.concatenate(
            [np.cumsum(log1mt[:, ::-1], axis=1)[:, ::-1], np.zeros((m, 1))], axis=1
        )
        log_km1 = math.log(k - 1.0)
        seg = np.empty((m, k + 1))
        # end segments have elementary antiderivatives
        seg[:, 0] = log_abs_expm1(-(k - 1.0) * log1mt[:, 0]) - log_km1
        seg[:, k] = log_abs_expm1(-(k - 1.0) * logt[:, k - 1]) - log_km1
        if k >= 2:
            seg[:, 1:k] = Triangular01._log_interior(logt, log1mt, k)
        return k * math.log(2.0) + logsumexp(prefix + suffix + seg, axis=1)

    @staticmethod
    def _log_interior(logt, log1mt, k):
        # With u = theta/(1-theta) the segment integral becomes
        # int u^-q (1+u)^(k-2) du = sum_i C(k-2, i) (u_b^p - u_a^p)/p, p = i-q+1,
        # and every term is positive, so the sum is evaluated in log space.
        logu = logt - log1mt  # (m, k)
        lua = logu[:, :-1]  # segment q = 1..k-1 starts at t_(q)
        lub = logu[:, 1:]
        span = (lub - lua)[:, :, None]  # (m, k-1, 1)
        q = np.arange(1, k)[None, :, None]
        i = np.arange(0, k - 1)[None, None, :]
        p = (i - q + 1).astype(float)  # (1, k-1, k-1)
        log_binom = (gammaln(k - 1.0) - gammaln(i + 1.0) - gammaln(k - 1.0 - i))
        with np.errstate(divide="ignore", invalid="ignore"):
            safe_p = np.where(p == 0, 1.0, p)
            inc = np.where(
                p == 0,
                np.log(span),
                log_abs_expm1(p * span) - np.log(np.abs(safe_p)),
            )
            terms = log_binom + p * lua[:, :, None] + inc
            terms = np.where(span > 0, terms, -np.inf)
            return logsumexp(terms, axis=2)

    def prior(self, theta):
        theta = np.asarray(theta, dtype=float)
        return 1.0 / np.sqrt(theta * (1.0 - theta))


MODELS: dict[ModelId, Model] = {
    ModelId.EXP_RATE: ExpRate(),
    ModelId.UNIF_0_THETA: Unif0Theta(),
    ModelId.UNIF_THETA_THETA_SQ: UnifThetaThetaSq(),
    ModelId.TRIANGULAR_01: Triangular01(),
}

_ALIASES = {
    "exprate": ModelId.EXP_RATE,
    "exponential": ModelId.EXP_RATE,
    "unif0theta": ModelId.UNIF_0_THETA,
    "uniform0": ModelId.UNIF_0_THETA,
    "unifthetathetasq": ModelId.UNIF_THETA_THETA_SQ,
    "unif_theta_theta2": ModelId.UNIF_THETA_THETA_SQ,
    "triangular01": ModelId.TRIANGULAR_01,
    "trian": ModelId.TRIANGULAR_01,
    "tri": ModelId.TRIANGULAR_01,
}


def get_model(model) -> Model:
    """Resolve a Model, ModelId or name (case-insensitive, a few aliases accepted)."""
    if isinstance(model, Model):
        return model
    if isinstance(model, ModelId):
        return MODELS[model]
    key = str(model).strip().lower()
    try:
        return MODELS[ModelId(key)]
    except ValueError:
        pass
    if key in _ALIASES:
        return MODELS[_ALIASES[key]]
    raise DomainError(f"unknown model {model!r}; choose from {[m.value for m in ModelId]}")


# -- operation-level API -------------------------------------------------------

def log_joint(model, sample, theta) -> float:
    model = get_model(model)
    theta = model.check_theta(theta)
    return float(model.log_joint_rows(_as_rows(sample), theta)[0])


def log_marginal_c(model, sample, quad: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    model = get_model(model)
    return float(model.log_marginal_rows(_as_rows(sample), quad)[0])


def r_statistic(model, sample, theta, quad: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    model = get_model(model)
    theta = model.check_theta(theta)
    lj = log_joint(model, sample, theta)
    if math.isinf(lj) and lj < 0:
        return -math.inf
    return lj - log_marginal_c(model, sample, quad)


def inverse_cdf(model, u, theta):
    return get_model(model).inverse_cdf(u, theta)


def crn_transform(model, y, theta, theta0):
    return get_model(model).crn_transform(y, theta, theta0)


def known_prior(model, theta) -> float:
    model = get_model(model)
    theta = model.check_theta(theta)
    return float(model.prior(theta))
