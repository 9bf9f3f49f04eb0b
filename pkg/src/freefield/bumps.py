"""Smooth test functions used by the checks and the command line."""
from __future__ import annotations

import numpy as np

from .covariance import MassCovariance, apply_inverse_covariance
from .lattice import LatticeSpec, ScalarField, pair


def gaussian_bump(spec: LatticeSpec, width: float, center: float = 0.0, mass: float = 1.0) -> ScalarField:
    """Gaussian of standard deviation ``width`` and integral ``mass``, centred at ``(center, 0, ...)``."""
    def profile(*x):
        r2 = (x[0] - center) ** 2 + sum(xi * xi for xi in x[1:])
        return mass * np.exp(-0.5 * r2 / width**2) / (np.sqrt(2 * np.pi) * width) ** spec.d
    return ScalarField.from_function(spec, profile)


def standard_test_functions(spec: LatticeSpec) -> dict[str, ScalarField]:
    """Five fixed test functions scaled to the box: bumps, a dipole and a wave packet."""
    s = spec.length / 12.8
    dipole = gaussian_bump(spec, 0.5 * s, -s) - gaussian_bump(spec, 0.5 * s, s)
    packet = ScalarField.from_function(
        spec, lambda *x: np.cos(2 * x[0] / s) * np.exp(-0.5 * sum(xi * xi for xi in x) / (1.5 * s) ** 2))
    return {
        "bump": gaussian_bump(spec, 0.5 * s),
        "wide": gaussian_bump(spec, 1.0 * s, 2.0 * s, mass=2.0),
        "narrow": gaussian_bump(spec, 0.3 * s, -3.0 * s, mass=1.5),
        "dipole": dipole,
        "packet": packet,
    }


def shift_directions(cov: MassCovariance, spec: LatticeSpec, norm2: float = 0.5) -> dict[str, ScalarField]:
    """Three translation directions ``g`` scaled so that ``<g, C^-1 g> = norm2``."""
    s = spec.length / 12.8
    raw = {
        "bump": gaussian_bump(spec, 0.5 * s),
        "offset": gaussian_bump(spec, 1.0 * s, 3.0 * s),
        "dipole": gaussian_bump(spec, 0.5 * s, -s) - gaussian_bump(spec, 0.5 * s, s),
    }
    out = {}
    for name, g in raw.items():
        q = pair(g, apply_inverse_covariance(cov, g))
        out[name] = g * float(np.sqrt(norm2 / q))
    return out
