"""The free-field covariance ``C_m = (m^2 - Laplacian)^(-1/2) / 2`` and its relatives.

On the periodic lattice every function of ``m^2 - Laplacian`` is the diagonal
multiplier ``(m^2 + |k|^2)^p`` in the discrete Fourier basis, so real powers
are exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec, ScalarField, apply_multiplier, pair
from .errors import SpecMismatch


@dataclass(frozen=True)
class MassCovariance:
    """Covariance of the mass-``m`` free field; ``m`` must be strictly positive."""

    m: float

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m <= 0:
            raise ValueError(f"mass must be > 0, got {self.m!r}")
        object.__setattr__(self, "m", float(self.m))

    def symbol(self, spec: LatticeSpec) -> np.ndarray:
        """``m^2 + |k|^2`` on the momentum grid."""
        return self.m**2 + spec.k_squared()

    def power_multiplier(self, spec: LatticeSpec, p: float) -> np.ndarray:
        return self.symbol(spec) ** p

    def multiplier(self, spec: LatticeSpec) -> np.ndarray:
        """Spectral multiplier of ``C_m``, in ``(0, 1/(2m)]``."""
        return 0.5 * self.symbol(spec) ** -0.5

    def frequencies(self, spec: LatticeSpec) -> np.ndarray:
        """Mode frequencies ``omega(k) = sqrt(m^2 + |k|^2)``."""
        return np.sqrt(self.symbol(spec))


@dataclass(frozen=True)
class MinlosParams:
    """Spatial damping exponent ``alpha`` and smoothing exponent ``beta``."""

    alpha: float
    beta: float

    def in_support_regime(self, d: int) -> bool:
        """True iff ``alpha > d/4`` and ``beta > (d-1)/4``.

        Purely informational: sub-threshold parameters are legal and are how
        the divergence of the unregularized norm is exhibited.
        """
        return self.alpha > d / 4 and self.beta > (d - 1) / 4


def apply_power(cov: MassCovariance, f: ScalarField, p: float) -> ScalarField:
    """``(m^2 - Laplacian)^p f``."""
    if p == 0:
        return f
    return apply_multiplier(f, cov.power_multiplier(f.spec, p))


def apply_covariance(cov: MassCovariance, f: ScalarField) -> ScalarField:
    return apply_multiplier(f, cov.multiplier(f.spec))


def apply_inverse_covariance(cov: MassCovariance, g: ScalarField) -> ScalarField:
    """``C_m^-1 g = 2 (m^2 - Laplacian)^(1/2) g``."""
    return 2.0 * apply_power(cov, g, 0.5)


def covariance_form(cov: MassCovariance, f: ScalarField, g: ScalarField) -> float:
    """``<f, C_m g>``."""
    if f.spec != g.spec:
        raise SpecMismatch(f"{f.spec} != {g.spec}")
    return pair(f, 0.5 * apply_power(cov, g, -0.5))


def minlos_weight(spec: LatticeSpec, alpha: float) -> np.ndarray:
    """``(1 + |x|^2)^(-alpha)`` on box-centred coordinates."""
    return (1.0 + spec.x_squared()) ** (-alpha)


def minlos_regularize(cov: MassCovariance, phi: ScalarField, p: MinlosParams) -> ScalarField:
    """``(1 + x^2)^(-alpha) (m^2 - Laplacian)^(-beta) phi``: smooth first, then damp."""
    smoothed = apply_power(cov, phi, -p.beta)
    if p.alpha == 0:
        return smoothed
    return ScalarField(phi.spec, minlos_weight(phi.spec, p.alpha) * smoothed.values)


def expected_regularized_norm(cov: MassCovariance, spec: LatticeSpec, p: MinlosParams) -> float:
    """Exact lattice value of ``E ||minlos_regularize(phi)||^2`` under the mass-``m`` measure.

    Translation invariance makes ``E[(P phi)(x)^2]`` site independent, equal to
    the kernel of ``P C_m P`` at the origin, ``V^-1 sum_k c(k) (m^2+k^2)^(-2 beta)``.
    """
    diag = np.sum(cov.multiplier(spec) * cov.power_multiplier(spec, -2 * p.beta)) / spec.volume
    spatial = spec.cell * np.sum(minlos_weight(spec, 2 * p.alpha))
    return float(spatial * diag)
