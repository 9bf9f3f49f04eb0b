import numpy as np
import pytest

from freefield.bumps import gaussian_bump
from freefield.covariance import MassCovariance, covariance_form
from freefield.errors import SpecMismatch
from freefield.lattice import LatticeSpec, ScalarField, pair
from freefield.mixing import (mixing_correlation_analytic, mixing_correlation_mc, mixing_curve, mixing_exponent,
                              translate, write_curve_csv)
from freefield.sampler import characteristic_analytic, sample

COV = MassCovariance(1.0)
SPEC = LatticeSpec(1, 256, 0.1)


def test_translate_identity_and_period():
    f = gaussian_bump(SPEC, 0.7, 1.0)
    assert translate(f, 0.0).allclose(f, rtol=0, atol=1e-15)
    assert translate(f, SPEC.length).allclose(f, rtol=0, atol=1e-12)


def test_translate_by_lattice_steps_is_roll():
    f = ScalarField(SPEC, np.random.default_rng(0).standard_normal(SPEC.shape))
    np.testing.assert_allclose(translate(f, 7 * SPEC.a).values, np.roll(f.values, 7), atol=1e-12)
    s2 = LatticeSpec(2, 16, 0.5)
    g = ScalarField(s2, np.random.default_rng(1).standard_normal(s2.shape))
    np.testing.assert_allclose(translate(g, -3 * s2.a).values, np.roll(g.values, -3, axis=0), atol=1e-12)


def test_translate_is_isometry():
    f = ScalarField(SPEC, np.random.default_rng(2).standard_normal(SPEC.shape))
    fy = translate(f, 1.234)
    assert pair(fy, fy) == pytest.approx(pair(f, f), rel=1e-12)


def test_exponent_properties():
    f, g = gaussian_bump(SPEC, 0.4, -1.0), gaussian_bump(SPEC, 0.6, 2.0)
    assert mixing_exponent(COV, f, f, 0.0) == pytest.approx(covariance_form(COV, f, f), rel=1e-14)
    assert mixing_exponent(COV, f, g, 1.7) == pytest.approx(mixing_exponent(COV, g, f, -1.7), rel=1e-12)
    with pytest.raises(SpecMismatch):
        mixing_exponent(COV, f, gaussian_bump(LatticeSpec(1, 128, 0.1), 0.5), 1.0)


def test_narrow_bumps_decay_by_factor_ten():
    f = gaussian_bump(SPEC, 0.2)
    e0 = mixing_exponent(COV, f, f, 0.0)
    assert mixing_exponent(COV, f, f, SPEC.length / 2) * 10 <= e0


def test_correlation_limits():
    zero = ScalarField.zeros(SPEC)
    assert mixing_correlation_analytic(COV, zero, zero, 3.0) == 1.0
    f = gaussian_bump(SPEC, 0.3)
    far = mixing_correlation_analytic(COV, f, f, SPEC.length / 2)
    assert far == pytest.approx(characteristic_analytic(COV, f) ** 2, abs=1e-3)


def test_curve_validation_and_empty():
    f = gaussian_bump(SPEC, 0.5)
    c = mixing_curve(COV, f, f, [])
    assert c.shifts.size == 0 and c.rows() == [] and not c.decayed
    for bad in ([0.0], [-1.0], [SPEC.length / 2 + 0.1]):
        with pytest.raises(ValueError):
            mixing_curve(COV, f, f, bad)


def test_curve_decays_and_writes(tmp_path):
    f = gaussian_bump(SPEC, 0.5)
    c = mixing_curve(COV, f, f, [0.5, 2.0, 6.4, 12.8])
    assert c.exponents[-1] < c.exponents[0]
    write_curve_csv(tmp_path / "c.csv", c)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "y,exponent,re_corr,im_corr,abs_corr_minus_product" and len(lines) == 5


def test_correlation_mc_matches_closed_form():
    batch = sample(COV, SPEC, 21, 10_000)
    f, g = gaussian_bump(SPEC, 0.5), gaussian_bump(SPEC, 0.8, 0.5)
    for y in (0.3, 1.0, 3.0):
        est = mixing_correlation_mc(batch, f, g, y)
        assert abs(est.value - mixing_correlation_analytic(COV, f, g, y)) <= max(3 * est.stderr, 0.02)
