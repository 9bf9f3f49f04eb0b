"""Draws from the Gaussian measure of covariance ``C_m`` and Monte Carlo checks of it.

Randomness
----------
Sample ``s`` of a batch seeded with ``seed`` uses its own Philox
(counter-based) stream keyed by ``SeedSequence(seed, spawn_key=(s,))``.
A batch is therefore independent of how samples are scheduled, and a batch
of ``count`` samples is a prefix of any larger batch with the same seed.

Each stream yields ``n**d`` standard normals in row-major site order.  Their
unnormalized DFT, divided by ``sqrt(n**d)``, is exactly the Hermitian complex
white noise ``xi(k)`` (unit real draws on self-conjugate modes, one shared
complex draw per conjugate pair), which is then coloured by
``sqrt(V * c(k))``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft
import scipy.linalg

from .covariance import (
    MassCovariance,
    apply_inverse_covariance,
    apply_power,
    covariance_form,
)
from .errors import EmptyBatch, SpecMismatch, TooLarge
from .lattice import LatticeSpec, ScalarField, apply_multiplier, pair, read_field, write_field

DENSE_LIMIT = 4096


def sample_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def white_noise(spec: LatticeSpec, seed: int, start: int, count: int) -> np.ndarray:
    out = np.empty((count,) + spec.shape)
    for i in range(count):
        out[i] = sample_stream(seed, start + i).standard_normal(spec.shape)
    return out


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """A deterministic batch of draws; ``values`` has shape ``(count, n, ..., n)``."""

    cov: MassCovariance
    spec: LatticeSpec
    seed: int
    values: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def fields(self) -> list[ScalarField]:
        return [ScalarField(self.spec, v) for v in self.values]

    def evaluate(self, f: ScalarField) -> np.ndarray:
        """``phi_s(f)`` for every sample ``s``."""
        if f.spec != self.spec:
            raise SpecMismatch(f"{f.spec} != {self.spec}")
        axes = tuple(range(1, self.spec.d + 1))
        return self.spec.cell * np.tensordot(self.values, f.values, axes=(axes, tuple(range(self.spec.d))))


def sample(cov: MassCovariance, spec: LatticeSpec, seed: int, count: int,
           workers: int | None = None) -> SampleBatch:
    if count < 1:
        raise ValueError("count must be >= 1")
    noise = white_noise(spec, seed, 0, count)
    axes = tuple(range(1, spec.d + 1))
    amp = np.sqrt(spec.volume * cov.multiplier(spec) / spec.sites)
    modes = scipy.fft.fftn(noise, axes=axes, workers=workers) * amp
    # phi(x) = V^-1 sum_k phi_hat(k) e^{ikx} = a^-d ifft(phi_hat)
    values = scipy.fft.ifftn(modes, axes=axes, workers=workers).real / spec.cell
    return SampleBatch(cov, spec, int(seed), values)


def dense_covariance(cov: MassCovariance, spec: LatticeSpec) -> np.ndarray:
    """Site-value covariance ``E[phi(x) phi(y)]`` as a dense circulant matrix."""
    if spec.sites > DENSE_LIMIT:
        raise TooLarge(f"{spec.sites} sites exceeds the dense limit of {DENSE_LIMIT}")
    kernel = scipy.fft.ifftn(cov.multiplier(spec)).real / spec.cell
    idx = np.indices(spec.shape).reshape(spec.d, -1)
    diff = (idx[:, :, None] - idx[:, None, :]) % spec.n
    return kernel[tuple(diff)]


def sample_dense(cov: MassCovariance, spec: LatticeSpec, seed: int, count: int) -> SampleBatch:
    """Reference sampler: Cholesky factor of :func:`dense_covariance` times white noise."""
    chol = scipy.linalg.cholesky(dense_covariance(cov, spec), lower=True)
    noise = white_noise(spec, seed, 0, count).reshape(count, -1)
    return SampleBatch(cov, spec, int(seed), (noise @ chol.T).reshape((count,) + spec.shape))


# -- estimators ---------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: complex | float
    stderr: float

    def within(self, target, nsigma: float, floor: float = 0.0) -> bool:
        return abs(self.value - target) <= max(nsigma * self.stderr, floor)


def jackknife_mean(z: np.ndarray) -> Estimate:
    """Sample mean with its leave-one-out jackknife standard error."""
    z = np.asarray(z)
    s = z.shape[0]
    if s == 0:
        raise EmptyBatch("no samples")
    mean = z.mean()
    if s == 1:
        return Estimate(mean, float("inf"))
    loo = (s * mean - z) / (s - 1)
    var = (s - 1) / s * np.sum(np.abs(loo - loo.mean()) ** 2)
    value = complex(mean) if np.iscomplexobj(z) else float(mean)
    return Estimate(value, float(np.sqrt(var)))


def characteristic_analytic(cov: MassCovariance, f: ScalarField) -> float:
    """``chi(f) = exp(-<f, C_m f>/2)``."""
    return float(np.exp(-0.5 * covariance_form(cov, f, f)))


def characteristic_mc(batch: SampleBatch, f: ScalarField) -> Estimate:
    if len(batch) == 0:
        raise EmptyBatch("empty batch")
    if not np.any(f.values):
        return Estimate(1 + 0j, 0.0)
    return jackknife_mean(np.exp(1j * batch.evaluate(f)))


def weyl_expectation_analytic(cov: MassCovariance, f: ScalarField, g: ScalarField,
                              form: str = "covariance") -> float:
    """Vacuum expectation ``<1, W(f, g) 1>``.

    ``form="covariance"`` evaluates ``<f, 2C f> + <g, (2C)^-1 g>`` with ``(2C)^-1``
    taken as the reciprocal of the covariance symbol; ``form="mass"`` uses
    ``(m^2 - Laplacian)^(-1/2)`` and ``(m^2 - Laplacian)^(1/2)`` directly.
    """
    if form == "covariance":
        two_c = 2.0 * cov.multiplier(f.spec)
        q = pair(f, apply_multiplier(f, two_c)) + pair(g, apply_multiplier(g, 1.0 / two_c))
    elif form == "mass":
        q = pair(f, apply_power(cov, f, -0.5)) + pair(g, apply_power(cov, g, 0.5))
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(np.exp(-q / 4))


def weyl_expectation_mc(batch: SampleBatch, f: ScalarField, g: ScalarField) -> Estimate:
    """Monte Carlo ``<1, W(f, g) 1>`` from the Schrodinger-type action of U and V.

    ``W(f,g) 1 = e^{i<f,g>/2} e^{-i phi(f)} e^{-<g, C^-1 g>/4} e^{phi(C^-1 g)/2}``.
    """
    cinv_g = apply_inverse_covariance(batch.cov, g)
    phase = np.exp(0.5j * pair(f, g) - 0.25 * pair(g, cinv_g))
    z = phase * np.exp(-1j * batch.evaluate(f) + 0.5 * batch.evaluate(cinv_g))
    return jackknife_mean(z)


def radon_nikodym(cov: MassCovariance, g: ScalarField, phi: ScalarField) -> float:
    """Density of the law of ``phi + g`` with respect to the mass-``m`` measure."""
    h = apply_inverse_covariance(cov, g)
    return float(np.exp(pair(phi, h) - 0.5 * pair(g, h)))


def radon_nikodym_batch(batch: SampleBatch, g: ScalarField) -> np.ndarray:
    h = apply_inverse_covariance(batch.cov, g)
    return np.exp(batch.evaluate(h) - 0.5 * pair(g, h))


def translated_characteristic_mc(batch: SampleBatch, f: ScalarField, g: ScalarField) -> Estimate:
    """``E[RN_g(phi) exp(i phi(f))]``; should equal ``chi(f) exp(i <f, g>)``."""
    return jackknife_mean(radon_nikodym_batch(batch, g) * np.exp(1j * batch.evaluate(f)))


def translated_characteristic_analytic(cov: MassCovariance, f: ScalarField, g: ScalarField) -> complex:
    return characteristic_analytic(cov, f) * np.exp(1j * pair(f, g))


# -- persistence ---------------------------------------------------------------

def write_batch(directory, batch: SampleBatch) -> Path:
    """Directory with ``manifest.json`` and one field file per sample."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": batch.seed, "count": len(batch), "m": batch.cov.m, "lattice": batch.spec.to_dict()}
    (directory / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    for i, f in enumerate(batch.fields):
        write_field(directory / f"field_{i:06d}.bin", f)
    return directory


def read_batch(directory) -> SampleBatch:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    spec = LatticeSpec(**manifest["lattice"])
    values = np.empty((manifest["count"],) + spec.shape)
    for i in range(manifest["count"]):
        f = read_field(directory / f"field_{i:06d}.bin")
        if f.spec != spec:
            raise SpecMismatch(f"field {i} has lattice {f.spec}, manifest says {spec}")
        values[i] = f.values
    return SampleBatch(MassCovariance(manifest["m"]), spec, int(manifest["seed"]), values)


def default_workers() -> int | None:
    w = os.environ.get("FREEFIELD_WORKERS")
    return int(w) if w else None
