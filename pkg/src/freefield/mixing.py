"""Decay of correlations under translations along ``x_1``.

For ``psi = e^{-i phi(f)}`` and ``psi' = e^{-i phi(f')}`` the vacuum correlation
after a shift ``y`` is ``chi(f') chi(f) exp(<f', C_m f_y>)``; the exponent tends
to zero with ``y`` and the correlation factorizes.  On a periodic box the
shift is only meaningful up to half the box length.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import MassCovariance, covariance_form
from .errors import SpecMismatch
from .lattice import ScalarField, apply_multiplier
from .sampler import Estimate, SampleBatch, characteristic_analytic, jackknife_mean


def translate(f: ScalarField, y: float) -> ScalarField:
    """``f(x_1 - y, x_2, ...)`` by a spectral phase (band-limited interpolation between sites)."""
    spec = f.spec
    k1 = spec.axis_momenta().reshape((-1,) + (1,) * (spec.d - 1))
    phase = np.exp(-1j * k1 * y)
    # The Nyquist mode is its own conjugate, so its factor must be real; +-1 (the sign of
    # cos) keeps the shift an isometry and matches np.roll exactly on lattice shifts.
    phase[spec.n // 2] = 1.0 if np.cos(k1[spec.n // 2, ...].item(0) * y) >= 0 else -1.0
    return apply_multiplier(f, np.broadcast_to(phase, spec.shape))


def mixing_exponent(cov: MassCovariance, f: ScalarField, f_prime: ScalarField, y: float) -> float:
    """``<f', C_m f_y>``."""
    if f.spec != f_prime.spec:
        raise SpecMismatch(f"{f.spec} != {f_prime.spec}")
    return covariance_form(cov, f_prime, translate(f, y))


def mixing_correlation_analytic(cov: MassCovariance, f: ScalarField, f_prime: ScalarField, y: float) -> float:
    """``<e^{-i phi(f')}, U(y) e^{-i phi(f)}>``; real because ``chi`` is."""
    return (characteristic_analytic(cov, f_prime) * characteristic_analytic(cov, f)
            * float(np.exp(mixing_exponent(cov, f, f_prime, y))))


def mixing_correlation_mc(batch: SampleBatch, f: ScalarField, f_prime: ScalarField, y: float) -> Estimate:
    """Sample mean of ``e^{i phi(f')} conj(e^{i phi(f_y)})``."""
    return jackknife_mean(np.exp(1j * (batch.evaluate(f_prime) - batch.evaluate(translate(f, y)))))


@dataclass(frozen=True, eq=False)
class MixingCurve:
    shifts: np.ndarray
    exponents: np.ndarray
    correlations: np.ndarray
    product: float
    threshold: float = field(default=1e-3)

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.correlations - self.product)

    @property
    def decayed(self) -> bool:
        """``|correlation - product|`` below ``threshold`` at the largest shift."""
        return bool(self.shifts.size) and bool(self.gaps[np.argmax(self.shifts)] < self.threshold)

    def rows(self):
        return [(y, e, c.real, c.imag, g)
                for y, e, c, g in zip(self.shifts, self.exponents, self.correlations, self.gaps)]


def mixing_curve(cov: MassCovariance, f: ScalarField, f_prime: ScalarField, shifts,
                 threshold: float = 1e-3) -> MixingCurve:
    shifts = np.asarray(shifts, dtype=float).ravel()
    half = f.spec.length / 2
    if np.any(shifts <= 0) or np.any(shifts > half * (1 + 1e-12)):
        raise ValueError(f"shifts must lie in (0, {half:g}] (half the box)")
    chi = characteristic_analytic(cov, f) * characteristic_analytic(cov, f_prime)
    exps = np.array([mixing_exponent(cov, f, f_prime, y) for y in shifts])
    corr = (chi * np.exp(exps)).astype(complex)
    return MixingCurve(shifts, exps, corr, chi, threshold)


MIXING_COLUMNS = ("y", "exponent", "re_corr", "im_corr", "abs_corr_minus_product")


def write_curve_csv(path, curve: MixingCurve) -> None:
    from .report import write_csv
    write_csv(path, MIXING_COLUMNS, curve.rows())
