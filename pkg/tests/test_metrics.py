import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from refprior import metrics
from refprior.errors import DomainError
from refprior.golden import GOLDEN, back_solved_constant

THETA = np.array([2.0, 5.0, 8.0, 11.0, 14.0, 17.0])


def table_grid(ratios, constant):
    ratios = np.array(ratios)
    return metrics.grid_from_records(THETA, ratios / THETA, np.zeros(6), constant, lambda t: 1.0 / t)


class TestEarp:
    def test_fk_constant_fit_data(self):
        c = GOLDEN["constant_fit"]
        assert metrics.earp(table_grid(c["fk_ratio"], c["a_hat"])) == pytest.approx(0.094, abs=1e-3)

    def test_f_constant_fit_data(self):
        c = GOLDEN["constant_fit"]
        assert metrics.earp(table_grid(c["f_ratio"], c["b_hat"])) == pytest.approx(0.145, abs=1e-3)

    def test_zero_when_exact(self):
        g = metrics.GridEvaluation.from_arrays(THETA, 1 / THETA, np.zeros(6), 1 / THETA)
        assert metrics.earp(g) == 0.0

    def test_needs_positive_reference(self):
        g = metrics.GridEvaluation.from_arrays([1.0], [1.0], [0.0], [0.0])
        with pytest.raises(DomainError):
            metrics.earp(g)


class TestAmrp:
    @pytest.mark.parametrize("hw, rel, want", [("hw_fk", "rel_fk", 0.218), ("hw_f", "rel_f", 0.281)])
    def test_relative_width_data(self, hw, rel, want):
        rw = GOLDEN["relative_widths"]
        const = back_solved_constant(rw[hw], THETA, rw[rel])
        g = metrics.grid_from_records(THETA, np.zeros(6), rw[hw], const, lambda t: 1.0 / t)
        assert metrics.amrp(g) == pytest.approx(want, abs=1e-3)

    def test_zero_widths(self):
        g = metrics.GridEvaluation.from_arrays(THETA, THETA, np.zeros(6), THETA)
        assert metrics.amrp(g) == 0.0


class TestCoverage:
    def test_interval_table(self):
        iv = GOLDEN["intervals"]
        g = metrics.GridEvaluation.from_arrays(THETA, iv["fk_scaled"], iv["fk_scaled_hw"], 1 / THETA)
        assert metrics.coverage(g) == pytest.approx(4 / 6)
        missed = [e.theta for e in g.entries if not (e.lo < e.scaled_ref < e.hi)]
        assert missed == [2.0, 11.0]

    def test_all_covered(self):
        g = metrics.GridEvaluation.from_arrays(THETA, THETA, np.ones(6), THETA)
        assert metrics.coverage(g) == 1.0

    def test_zero_width_misses(self):
        g = metrics.GridEvaluation.from_arrays(THETA, THETA + 0.1, np.zeros(6), THETA)
        assert metrics.coverage(g) == 0.0

    def test_boundary_is_not_covered(self):
        g = metrics.GridEvaluation.from_arrays([1.0], [1.0], [0.5], [1.5])
        assert metrics.coverage(g) == 0.0


@given(st.lists(st.tuples(st.floats(0.01, 100), st.floats(0, 10), st.floats(0.01, 100)), min_size=1, max_size=40))
def test_metric_ranges(rows):
    est, hw, ref = (np.array(c) for c in zip(*rows))
    g = metrics.GridEvaluation.from_arrays(np.arange(len(rows)), est, hw, ref)
    s = metrics.summarize(g)
    assert 0.0 <= s["CE"] <= 1.0
    assert s["EARP"] >= 0.0 and s["AMRP"] >= 0.0


@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=20), st.floats(0.01, 100))
def test_scaling_estimate_and_reference_together_leaves_metrics_unchanged(values, c):
    v = np.array(values)
    g1 = metrics.GridEvaluation.from_arrays(np.arange(v.size), v, 0.1 * v, v[::-1])
    g2 = metrics.GridEvaluation.from_arrays(np.arange(v.size), c * v, 0.1 * c * v, c * v[::-1])
    for key, val in metrics.summarize(g1).items():
        assert metrics.summarize(g2)[key] == pytest.approx(val, rel=1e-9, abs=1e-12)


def test_empty_grid_rejected():
    with pytest.raises(DomainError):
        metrics.GridEvaluation(())
