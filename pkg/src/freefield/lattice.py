"""Periodic lattice geometry, real fields and the discrete Fourier transform.

Conventions
-----------
Sites sit at ``x = a * i`` for integer multi-indices ``i`` taken modulo ``n``
on every axis.  Whenever a coordinate is needed (spatial weights, bumps) the
minimal-image representative in ``[-n*a/2, n*a/2)`` is used, so the origin is
site 0 and the box is centred on it.

Field values are stored as C-ordered (row-major) arrays of shape ``(n,)*d``;
axis 0 is the ``x_1`` direction.

The transform pair is::

    F(k) = a^d * sum_x f(x) exp(-i k.x)
    f(x) = V^-1 * sum_k F(k) exp(+i k.x),        V = (n a)^d

with ``k = 2*pi*q/(n*a)`` for ``q`` in ``[-n/2, n/2)``, stored in FFT order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft

from .errors import NonHermitianInput, SpecMismatch

_HERMITIAN_RTOL = 1e-10


@dataclass(frozen=True)
class LatticeSpec:
    """A periodic cubic lattice of ``n**d`` sites with spacing ``a``."""

    d: int
    n: int
    a: float

    def __post_init__(self):
        if int(self.d) != self.d or not 1 <= self.d <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d!r}")
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise ValueError(f"points per axis must be an even integer >= 2, got {self.n!r}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ValueError(f"lattice spacing must be positive, got {self.a!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "a", float(self.a))

    @property
    def length(self) -> float:
        """Box side ``n*a``."""
        return self.n * self.a

    @property
    def volume(self) -> float:
        return self.length**self.d

    @property
    def cell(self) -> float:
        """Volume element ``a**d``."""
        return self.a**self.d

    @property
    def sites(self) -> int:
        return self.n**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def axis_momenta(self) -> np.ndarray:
        """Momenta along one axis, FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.a)

    def axis_positions(self) -> np.ndarray:
        """Minimal-image coordinates along one axis, in ``[-L/2, L/2)``."""
        return np.fft.fftfreq(self.n, d=1.0 / self.length)

    def momentum_grid(self) -> list[np.ndarray]:
        k = self.axis_momenta()
        return np.meshgrid(*([k] * self.d), indexing="ij", sparse=True)

    def position_grid(self) -> list[np.ndarray]:
        x = self.axis_positions()
        return np.meshgrid(*([x] * self.d), indexing="ij", sparse=True)

    def k_squared(self) -> np.ndarray:
        """``|k|^2`` on the full momentum grid."""
        return _broadcast_sum_sq(self.momentum_grid(), self.shape)

    def x_squared(self) -> np.ndarray:
        """``|x|^2`` with box-centred coordinates."""
        return _broadcast_sum_sq(self.position_grid(), self.shape)

    def to_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "a": self.a}


def _broadcast_sum_sq(axes, shape):
    out = np.zeros(shape)
    for c in axes:
        out = out + c * c
    return out


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real lattice function: a test function or a sampled distribution."""

    spec: LatticeSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size != self.spec.sites:
            raise ValueError(f"expected {self.spec.sites} values, got {vals.size}")
        vals = np.array(vals.reshape(self.spec.shape), order="C", copy=True)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "ScalarField":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def constant(cls, spec: LatticeSpec, c: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, float(c)))

    @classmethod
    def from_function(cls, spec: LatticeSpec, func) -> "ScalarField":
        """Evaluate ``func(*coords)`` on box-centred coordinates."""
        grids = np.meshgrid(*([spec.axis_positions()] * spec.d), indexing="ij")
        return cls(spec, np.broadcast_to(func(*grids), spec.shape))

    def _check(self, other: "ScalarField"):
        if not isinstance(other, ScalarField):
            return NotImplemented
        if other.spec != self.spec:
            raise SpecMismatch(f"{self.spec} != {other.spec}")
        return other.values

    def __add__(self, other):
        v = self._check(other)
        return v if v is NotImplemented else ScalarField(self.spec, self.values + v)

    def __sub__(self, other):
        v = self._check(other)
        return v if v is NotImplemented else ScalarField(self.spec, self.values - v)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            return ScalarField(self.spec, self.values * self._check(c))
        return ScalarField(self.spec, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.spec, -self.values)

    def __truediv__(self, c):
        return ScalarField(self.spec, self.values / float(c))

    def allclose(self, other: "ScalarField", rtol=1e-12, atol=0.0) -> bool:
        return self.spec == other.spec and np.allclose(self.values, other.values, rtol=rtol, atol=atol)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex mode amplitudes on the momentum grid (FFT order)."""

    spec: LatticeSpec
    modes: np.ndarray = field(repr=False)

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.complex128)
        if modes.size != self.spec.sites:
            raise ValueError(f"expected {self.spec.sites} modes, got {modes.size}")
        object.__setattr__(self, "modes", _readonly(np.array(modes.reshape(self.spec.shape), copy=True)))

    def hermitian_defect(self) -> float:
        """``max |F(-k) - conj F(k)|``, relative to ``max |F|``."""
        scale = np.max(np.abs(self.modes), initial=0.0)
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.modes - np.conj(reflect(self.modes)))) / scale)


def reflect(arr: np.ndarray) -> np.ndarray:
    """Map the FFT-ordered array ``F(k)`` to ``F(-k)``."""
    out = arr
    for ax in range(arr.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def forward_transform(f: ScalarField, workers: int | None = None) -> SpectralField:
    spec = f.spec
    modes = spec.cell * scipy.fft.fftn(f.values, workers=workers)
    return SpectralField(spec, modes)


def inverse_transform(F: SpectralField, workers: int | None = None) -> ScalarField:
    """Inverse of :func:`forward_transform`.

    Raises :class:`NonHermitianInput` if ``F`` is not (to 1e-10 relative) the
    transform of a real field.
    """
    defect = F.hermitian_defect()
    if defect > _HERMITIAN_RTOL:
        raise NonHermitianInput(f"Hermitian symmetry violated (relative defect {defect:.3g})")
    vals = scipy.fft.ifftn(F.modes, workers=workers) / F.spec.cell
    return ScalarField(F.spec, vals.real)


def apply_multiplier(f: ScalarField, mult: np.ndarray, workers: int | None = None) -> ScalarField:
    """Fourier multiplier with a real, even symbol ``mult`` (shape ``spec.shape``)."""
    # real even symbols keep Hermitian symmetry; skip the round-trip checks
    vals = scipy.fft.ifftn(scipy.fft.fftn(f.values, workers=workers) * mult, workers=workers).real
    return ScalarField(f.spec, vals)


def pair(f: ScalarField, g: ScalarField) -> float:
    """Discrete ``L^2`` pairing ``a^d sum_x f(x) g(x)``."""
    if f.spec != g.spec:
        raise SpecMismatch(f"{f.spec} != {g.spec}")
    return float(f.spec.cell * np.sum(f.values * g.values))


# -- persistence -------------------------------------------------------------

def write_field(path, f: ScalarField) -> None:
    """Write a JSON header line followed by raw little-endian float64 values."""
    header = {**f.spec.to_dict(), "dtype": "f64le", "layout": "row-major"}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path) -> ScalarField:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl])
    if header.get("dtype") != "f64le" or header.get("layout") != "row-major":
        raise ValueError(f"unsupported field encoding in {path}: {header}")
    spec = LatticeSpec(header["d"], header["n"], header["a"])
    payload = raw[nl + 1:]
    if len(payload) != 8 * spec.sites:
        raise ValueError(f"{path}: expected {spec.sites} values, found {len(payload) / 8:g}")
    return ScalarField(spec, np.frombuffer(payload, dtype="<f8").reshape(spec.shape))
