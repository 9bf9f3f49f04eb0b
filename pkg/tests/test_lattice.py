import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freefield.errors import NonHermitianInput, SpecMismatch
from freefield.lattice import (LatticeSpec, ScalarField, SpectralField, forward_transform, inverse_transform,
                               pair, read_field, write_field)


def naive_forward(spec, values):
    """Direct O(N^2) sum ``a^d sum_x f(x) e^{-ikx}`` over the stated momentum and position grids."""
    k = np.stack([np.broadcast_to(g, spec.shape).ravel() for g in spec.momentum_grid()], axis=1)
    x = np.stack([g.ravel() for g in np.meshgrid(*[np.arange(spec.n) * spec.a] * spec.d, indexing="ij")], axis=1)
    phase = np.exp(-1j * k @ x.T)
    return (spec.cell * phase @ values.ravel()).reshape(spec.shape)


def random_field(spec, seed=0):
    return ScalarField(spec, np.random.default_rng(seed).standard_normal(spec.shape))


def test_spec_geometry():
    s = LatticeSpec(2, 8, 0.5)
    assert s.length == 4.0 and s.sites == 64 and s.cell == 0.25 and s.volume == 16.0
    k = np.sort(s.axis_momenta())
    q = np.arange(-4, 4)
    np.testing.assert_allclose(k, 2 * np.pi / 4.0 * q)
    x = np.sort(s.axis_positions())
    np.testing.assert_allclose(x, 0.5 * q)


@pytest.mark.parametrize("kw", [dict(d=0, n=8, a=1), dict(d=4, n=8, a=1), dict(d=1, n=7, a=1),
                                dict(d=1, n=8, a=0), dict(d=1, n=8, a=-1.0)])
def test_spec_rejects_invalid(kw):
    with pytest.raises(ValueError):
        LatticeSpec(**kw)


def test_field_validation():
    s = LatticeSpec(1, 8, 1.0)
    with pytest.raises(ValueError):
        ScalarField(s, np.zeros(9))
    with pytest.raises(ValueError):
        ScalarField(s, np.array([np.nan] + [0.0] * 7))
    f = ScalarField.zeros(s)
    with pytest.raises(ValueError):
        f.values[0] = 1.0  # read-only storage


def test_constant_transform_is_dc_only():
    s = LatticeSpec(2, 8, 0.3)
    F = forward_transform(ScalarField.constant(s, 2.5)).modes
    assert F[0, 0] == pytest.approx(2.5 * s.length**2, rel=1e-14)
    rest = F.copy()
    rest[0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-12


def test_zero_transforms():
    s = LatticeSpec(1, 16, 1.0)
    assert not np.any(forward_transform(ScalarField.zeros(s)).modes)
    assert not np.any(inverse_transform(SpectralField(s, np.zeros(16, complex))).values)


@pytest.mark.parametrize("d,n", [(1, 16), (2, 16), (3, 4)])
def test_forward_matches_direct_sum(d, n):
    s = LatticeSpec(d, n, 0.7)
    f = random_field(s, d)
    np.testing.assert_allclose(forward_transform(f).modes, naive_forward(s, f.values), rtol=0, atol=1e-11)


def test_round_trip_d2():
    s = LatticeSpec(2, 16, 0.25)
    f = random_field(s)
    back = inverse_transform(forward_transform(f))
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
    # inverse of the oracle transform also recovers f
    back2 = inverse_transform(SpectralField(s, naive_forward(s, f.values)))
    assert np.max(np.abs(back2.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))


def test_hermitian_pair_gives_cosine():
    s = LatticeSpec(1, 32, 0.5)
    q = 3
    modes = np.zeros(32, complex)
    modes[q] = modes[-q] = 0.5 * s.volume
    f = inverse_transform(SpectralField(s, modes))
    k0 = 2 * np.pi * q / s.length
    np.testing.assert_allclose(f.values, np.cos(k0 * np.arange(32) * s.a), atol=1e-14)


def test_non_hermitian_rejected():
    s = LatticeSpec(1, 8, 1.0)
    modes = np.zeros(8, complex)
    modes[1] = 1.0
    with pytest.raises(NonHermitianInput):
        inverse_transform(SpectralField(s, modes))


def test_pair_basics():
    s = LatticeSpec(2, 8, 0.5)
    f = random_field(s)
    assert pair(f, ScalarField.zeros(s)) == 0
    one = ScalarField.constant(s, 1.0)
    assert pair(one, one) == pytest.approx(s.volume, rel=1e-14)
    with pytest.raises(SpecMismatch):
        pair(f, ScalarField.zeros(LatticeSpec(2, 8, 0.25)))


def test_parseval_against_direct_sum():
    s = LatticeSpec(2, 8, 0.3)
    f, g = random_field(s, 1), random_field(s, 2)
    F, G = naive_forward(s, f.values), naive_forward(s, g.values)
    expected = np.sum((F * np.conj(G)).real) / s.volume
    assert pair(f, g) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
def test_transform_is_linear(seed, alpha, beta):
    s = LatticeSpec(1, 16, 0.4)
    f, g = random_field(s, seed), random_field(s, seed + 1)
    lhs = forward_transform(f * alpha + g * beta).modes
    rhs = alpha * forward_transform(f).modes + beta * forward_transform(g).modes
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_field_io_round_trip(tmp_path):
    s = LatticeSpec(2, 8, 0.125)
    f = random_field(s)
    write_field(tmp_path / "f.bin", f)
    g = read_field(tmp_path / "f.bin")
    assert g.spec == s and np.array_equal(g.values, f.values)
    raw = (tmp_path / "f.bin").read_bytes()
    (tmp_path / "bad.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_field(tmp_path / "bad.bin")
