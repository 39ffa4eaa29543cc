import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from refprior.errors import DomainError, NaNError, QuadratureError
from refprior.quadrature import (
    DEFAULT_SETTINGS,
    NODES,
    W_GAUSS,
    W_KRONROD,
    QuadratureSettings,
    TailTransform,
    integrate_adaptive,
    log_integrate,
    log_integrate_many,
)


def test_rule_weights_integrate_constants():
    assert W_KRONROD.sum() == pytest.approx(2.0, abs=1e-15)
    assert W_GAUSS.sum() == pytest.approx(2.0, abs=1e-15)
    assert np.all(np.diff(NODES) > 0)


@pytest.mark.parametrize("degree", range(0, 23))
def test_kronrod_exact_for_polynomials(degree):
    got = float(np.sum(W_KRONROD * NODES**degree))
    want = 0.0 if degree % 2 else 2.0 / (degree + 1)
    assert got == pytest.approx(want, abs=1e-14)


class TestIntegrateAdaptive:
    def test_inverse_square(self):
        assert integrate_adaptive(lambda t: t**-2.0, 1.0, 2.0).value == pytest.approx(0.5, rel=1e-12)

    def test_endpoint_singularity(self):
        res = integrate_adaptive(lambda t: t**-0.5, 0.0, 1.0)
        assert res.value == pytest.approx(2.0, rel=1e-8)
        assert res.subdivisions_used > 1

    def test_gamma_integral_on_half_line(self):
        # equals k!/(sum y)^(k+1) with k = 2, sum y = 2
        res = integrate_adaptive(lambda t: t**2 * np.exp(-2 * t), 0.0, math.inf)
        assert res.value == pytest.approx(0.25, rel=1e-10)

    def test_power_tail(self):
        res = integrate_adaptive(lambda t: t**-5.0, 4.832099, math.inf)
        assert res.value == pytest.approx(4.832099**-4 / 4, rel=1e-9)

    @pytest.mark.parametrize("tail", list(TailTransform))
    def test_tail_transforms_agree_on_exponential_tail(self, tail):
        s = QuadratureSettings(infinite_tail_transform=tail)
        res = integrate_adaptive(lambda t: t**3 * np.exp(-1.5 * t), 0.5, math.inf, s)
        want, _ = sp_integrate.quad(lambda t: t**3 * np.exp(-1.5 * t), 0.5, np.inf, epsabs=0, epsrel=1e-13)
        assert res.value == pytest.approx(want, rel=1e-9)

    def test_node_on_infinity_is_not_nan(self):
        s = QuadratureSettings(infinite_tail_transform="exp_decay")
        res = integrate_adaptive(lambda t: t**-5.0, 4.832099, math.inf, s)
        assert np.isfinite(res.value)

    def test_breakpoints_handle_kinks(self):
        f = lambda t: np.abs(t - 0.3)  # noqa: E731
        res = integrate_adaptive(f, 0.0, 1.0, points=[0.3])
        assert res.value == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-13)

    def test_scalar_only_integrand(self):
        res = integrate_adaptive(lambda t: math.exp(-t), 0.0, 1.0)
        assert res.value == pytest.approx(1 - math.exp(-1), rel=1e-12)

    def test_error_estimate_reported(self):
        res = integrate_adaptive(np.sin, 0.0, math.pi)
        assert res.value == pytest.approx(2.0, rel=1e-12)
        assert 0.0 <= res.err_estimate < 1e-9

    @pytest.mark.parametrize("a, b", [(1.0, 1.0), (2.0, 1.0), (-math.inf, 0.0), (math.nan, 1.0)])
    def test_bad_bounds(self, a, b):
        with pytest.raises(DomainError):
            integrate_adaptive(lambda t: t, a, b)

    def test_nan_integrand(self):
        with pytest.raises(NaNError):
            integrate_adaptive(lambda t: np.full_like(t, np.nan), 0.0, 1.0)

    def test_subdivision_budget_exhausted(self):
        s = QuadratureSettings(rel_tol=1e-15, abs_tol=1e-300, max_subdivisions=10)
        with pytest.raises(QuadratureError):
            integrate_adaptive(lambda t: np.sin(1.0 / t), 1e-6, 1.0, s)

    @given(
        st.floats(min_value=-3, max_value=3),
        st.floats(min_value=0.1, max_value=4),
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=-5, max_value=5),
    )
    @settings(max_examples=60, deadline=None)
    def test_linearity(self, a, width, c1, c2):
        f = lambda t: np.exp(-t * t)  # noqa: E731
        g = lambda t: np.cos(t)  # noqa: E731
        b = a + width
        lhs = integrate_adaptive(lambda t: c1 * f(t) + c2 * g(t), a, b).value
        rhs = c1 * integrate_adaptive(f, a, b).value + c2 * integrate_adaptive(g, a, b).value
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-11)

    @given(st.floats(min_value=0.5, max_value=5), st.floats(min_value=1.5, max_value=6))
    @settings(max_examples=60, deadline=None)
    def test_agrees_with_scipy(self, lam, power):
        f = lambda t: t**power * np.exp(-lam * t)  # noqa: E731
        want, _ = sp_integrate.quad(f, 0.0, np.inf, epsabs=0, epsrel=1e-12)
        assert integrate_adaptive(f, 0.0, math.inf).value == pytest.approx(want, rel=1e-8)


class TestLogIntegrate:
    def test_unit_exponential(self):
        assert log_integrate(lambda t: -t, 0.0, math.inf) == pytest.approx(0.0, abs=1e-12)

    def test_no_underflow_far_below_double_range(self):
        assert log_integrate(lambda t: np.full_like(t, -1000.0), 0.0, 1.0) == pytest.approx(-1000.0, abs=1e-12)

    def test_marginal_constant_tail(self):
        t = 4.832099
        want = math.log(t**-4 / 4)
        got = log_integrate(lambda x: -5.0 * np.log(x), t, math.inf)
        assert got == pytest.approx(want, rel=1e-9)
        assert math.exp(got) == pytest.approx(4.586e-4, rel=1e-3)

    @pytest.mark.parametrize("k, t", [(186, 0.03125), (400, 0.01), (50, 1e-4)])
    def test_peak_narrower_than_probe_spacing(self, k, t):
        want = (1 - k) * math.log(t) - math.log(k - 1)
        assert log_integrate(lambda x: -k * np.log(x), t, math.inf) == pytest.approx(want, rel=1e-9)

    def test_everywhere_minus_inf(self):
        assert log_integrate(lambda t: np.full_like(t, -np.inf), 0.0, 1.0) == -math.inf

    @given(st.floats(min_value=-5000, max_value=5000))
    @settings(max_examples=50, deadline=None)
    def test_shift_invariance(self, c):
        base = log_integrate(lambda t: -t * t, -3.0, 2.0)
        assert log_integrate(lambda t: c - t * t, -3.0, 2.0) == pytest.approx(base + c, abs=1e-9 * max(1, abs(c)))

    @given(st.integers(min_value=2, max_value=400), st.floats(min_value=0.01, max_value=1000))
    @settings(max_examples=60, deadline=None)
    def test_power_tail_closed_form(self, k, t):
        want = (1 - k) * math.log(t) - math.log(k - 1)
        got = log_integrate(lambda x: -k * np.log(x), t, math.inf)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


class TestLogIntegrateMany:
    def test_matches_scalar_path(self):
        a = np.array([1.0, 0.5, 2.0])
        b = np.array([3.0, 0.9, 2.1])
        powers = np.array([2.0, 7.0, 30.0])
        got = log_integrate_many(lambda x, owner: -powers[owner][:, None] * np.log(x), a, b)
        for i in range(3):
            want = log_integrate(lambda x: -powers[i] * np.log(x), a[i], b[i])
            assert got[i] == pytest.approx(want, rel=1e-10)

    def test_narrow_peaks_in_batch(self):
        a = np.array([1.0001, 1.5, 0.01])
        b = np.array([3.0, 1.6, 5.0])
        k = np.array([200.0, 3.0, 300.0])
        got = log_integrate_many(lambda x, owner: -k[owner][:, None] * np.log(x), a, b)
        want = [(1 - ki) * math.log(ai) + math.log1p(-((bi / ai) ** (1 - ki))) - math.log(ki - 1) for ai, bi, ki in zip(a, b, k)]
        np.testing.assert_allclose(got, want, rtol=1e-9)

    def test_bad_intervals(self):
        with pytest.raises(DomainError):
            log_integrate_many(lambda x, o: x, np.array([1.0]), np.array([1.0]))
        with pytest.raises(DomainError):
            log_integrate_many(lambda x, o: x, np.array([1.0, 2.0]), np.array([3.0]))

    def test_defaults_exposed(self):
        assert DEFAULT_SETTINGS.rel_tol == 1e-9
        with pytest.raises(DomainError):
            QuadratureSettings(rel_tol=0.0)
