import json

import pytest

from refprior import golden


def test_every_check_passes_on_the_built_in_data():
    failed = [r.line() for r in golden.run_checks() if not r.passed]
    assert not failed, "\n".join(failed)


def test_check_names_cover_the_worked_example():
    names = [r.name for r in golden.run_checks()]
    assert "fk_hat Table 2.1 = 0.5437" in names


def test_fixture_override_is_merged(tmp_path):
    path = tmp_path / "fixture.json"
    path.write_text(json.dumps({"worked_example": {"fk_theta": 0.9}}))
    data = golden.load_golden(path)
    assert data["worked_example"]["fk_theta"] == 0.9
    assert data["worked_example"]["theta"] == 5.0
    assert golden.GOLDEN["worked_example"]["fk_theta"] == 0.5437


def test_corrupted_sample_fails_a_check(tmp_path):
    data = golden.load_golden()
    data["worked_example"]["theta_samples"][0][3] = 4.9
    results = {r.name: r.passed for r in golden.run_checks(data)}
    assert not results["fk_hat Table 2.1 = 0.5437"]


def test_malformed_fixture_is_reported_not_raised():
    data = golden.load_golden()
    del data["constant_fit"]["fk_ratio"]
    results = golden.run_checks(data)
    assert any(not r.passed and "KeyError" in r.detail for r in results)


@pytest.mark.parametrize("hw, rel, approx", [("hw_fk", "rel_fk", 18.8), ("hw_f", "rel_f", 1.03)])
def test_back_solved_constants(hw, rel, approx):
    rw = golden.GOLDEN["relative_widths"]
    assert golden.back_solved_constant(rw[hw], rw["theta"], rw[rel]) == pytest.approx(approx, rel=0.02)
