"""Long-distance probes of the free field: hypercube averages far apart.

The probes are ``f_j = 1_{B_j} / L^d`` for edge-``L`` cubes centred at
``(j^2/m, 0, ..., 0)``.  Their covariance matrix under the mass-``m`` measure is
the continuum momentum integral::

    M_jl = 1/2 (2/pi)^d L^(-2d) int d^dk  e^{i k_1 D} (k^2 + m^2)^(-1/2) prod_n S(k_n),
    S(k) = sin^2(k L / 2) / k^2,    D = (j^2 - l^2) / m.

Quadrature
----------
Transverse directions and the diagonal (``D = 0``) use tensorized
Gauss-Legendre panels on ``0 <= k <= K`` (the integrand is even), with ``K`` a
multiple of the ``sin^2`` period.  ``K`` is doubled, doubling the panel count,
and successive values are Richardson-extrapolated against the ``K^-2``
truncation tail until they agree to ``tol``.

For ``|D| > L`` (every off-diagonal entry, since the cubes are disjoint) the
``k_1`` integral is moved onto the branch cut of ``(k_1^2 + mu^2)^(-1/2)`` in
the upper half plane, ``mu^2 = m^2 + |k_perp|^2``::

    int e^{i k D} S(k) (k^2+mu^2)^(-1/2) dk
        = 2 int_mu^inf e^{-s|D|} sinh^2(sL/2) / (s^2 sqrt(s^2 - mu^2)) ds,

which is positive and free of cancellation, so entries that are
exponentially small in ``|D|`` keep full relative accuracy.  The cut integral
is done with generalized Gauss-Laguerre rules (weight ``v^(-1/2) e^(-v)``)
whose order is doubled to convergence.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.special import erfc, roots_genlaguerre, roots_legendre

from .covariance import MassCovariance
from .errors import (
    Degenerate,
    FactorizationFailed,
    NotPositiveDefinite,
    QuadratureNotConverged,
)
from .lattice import LatticeSpec, ScalarField
from .sampler import sample_stream


@dataclass(frozen=True)
class QuadratureSpec:
    """Convergence controls for the probe covariance integrals.

    ``tol`` is relative.  ``nodes`` is the Gauss-Legendre order per panel,
    ``periods`` the initial cutoff in units of the ``sin^2`` period ``2 pi / L``,
    ``laguerre`` the initial branch-cut rule order; each is doubled at most
    ``max_doublings`` times.
    """

    tol: float = 1e-6
    nodes: int = 8
    periods: int = 8
    laguerre: int = 16
    max_doublings: int = 12
    max_points: int = 2_000_000_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class ProbeFamily:
    m: float
    L: float
    d: int
    J: int

    def __post_init__(self):
        if self.m <= 0 or self.L <= 0:
            raise ValueError("mass and edge length must be positive")
        if self.d not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.J < 1:
            raise ValueError("need at least one probe")
        # nearest centres (j=1, 2) are 3/m apart
        if not self.L < 3 / self.m:
            raise ValueError(f"cubes overlap unless L < 3/m = {3 / self.m:g}")

    @property
    def centers(self) -> np.ndarray:
        c = np.zeros((self.J, self.d))
        c[:, 0] = np.arange(1, self.J + 1) ** 2 / self.m
        return c

    def separation(self, j: int, l: int) -> float:
        return (j * j - l * l) / self.m

    def probe_field(self, spec: LatticeSpec, j: int) -> ScalarField:
        """Lattice version of ``f_j``; sites on a face get half weight per axis."""
        if spec.d != self.d:
            raise ValueError("lattice dimension differs from the probe family")
        if not 1 <= j <= self.J:
            raise IndexError(j)
        if spec.length < 2 * (j * j / self.m + self.L):
            raise ValueError("box too small to hold the probe without wrapping")
        x = spec.axis_positions()
        weights = []
        for axis in range(self.d):
            dist = np.abs(x - (j * j / self.m if axis == 0 else 0.0))
            w = np.where(dist < self.L / 2, 1.0, 0.0)
            w[np.isclose(dist, self.L / 2, rtol=0, atol=1e-9 * spec.a)] = 0.5
            weights.append(w)
        vals = weights[0]
        for w in weights[1:]:
            vals = np.multiply.outer(vals, w)
        return ScalarField(spec, vals / self.L**self.d)


# -- quadrature kernels ---------------------------------------------------------

def _sinc2(k: np.ndarray, L: float) -> np.ndarray:
    """``sin^2(kL/2)/k^2`` with its limit ``L^2/4`` at ``k = 0``."""
    half = 0.5 * L * np.sinc(k * L / (2 * np.pi))
    return half * half


def _panel_rule(K: float, width: float, fine: float, nodes: int):
    """Composite Gauss-Legendre nodes/weights on ``[0, K]``.

    Panels start at width ``fine`` near the origin (where ``(k^2+m^2)^(-1/2)``
    bends on the scale ``m``) and grow geometrically up to ``width``.
    """
    fine = min(fine, width)
    edges = [0.0]
    while edges[-1] < K - 1e-12 * K:
        edges.append(min(K, edges[-1] + min(width, max(fine, 0.5 * edges[-1]))))
    edges = np.asarray(edges)
    x, w = roots_legendre(nodes)
    left, h = edges[:-1, None], np.diff(edges)[:, None]
    return (left + 0.5 * h * (x + 1)).ravel(), (0.5 * h * w).ravel()


@lru_cache(maxsize=None)
def _laguerre(n: int):
    return roots_genlaguerre(n, -0.5)


def cut_integral(D: np.ndarray, mu: np.ndarray, L: float, n: int) -> np.ndarray:
    """``int e^{ikD} S(k) (k^2+mu^2)^(-1/2) dk`` over the real line, for ``|D| > L``.

    Broadcasts over ``D`` and ``mu``.
    """
    D = np.abs(np.asarray(D, dtype=float))
    mu = np.asarray(mu, dtype=float)
    gap = D - L  # decay length of e^{-sD} sinh^2(sL/2)
    v, w = _laguerre(n)
    gap_, mu_ = gap[..., None], mu[..., None]
    s = mu_ + v / gap_
    g = np.expm1(-s * L) ** 2 / (s * s * np.sqrt(2 * mu_ + v / gap_))
    return np.exp(-mu * gap) / (2 * np.sqrt(gap)) * np.sum(w * g, axis=-1)


def _real_axis_1d(D: float, mu: np.ndarray, L: float, K: float, width: float, nodes: int):
    """``2 int_0^K cos(kD) S(k) (k^2+mu^2)^(-1/2) dk`` for every ``mu``."""
    k, w = _panel_rule(K, *width, nodes)
    integrand = np.cos(k * D) * _sinc2(k, L) * w
    mu = np.atleast_1d(mu)
    out = np.empty(mu.shape)
    step = max(1, 4_000_000 // k.size)
    flat = mu.ravel()
    res = out.ravel()
    for i in range(0, flat.size, step):
        res[i:i + step] = 2 * (integrand / np.sqrt(k * k + flat[i:i + step, None] ** 2)).sum(axis=1)
    return out


def _prefactor(L: float, d: int) -> float:
    return 0.5 * (2 / np.pi) ** d / L ** (2 * d)


def _initial_cutoff(m: float, L: float, quad: QuadratureSpec) -> float:
    period = 2 * np.pi / L
    return period * max(quad.periods, math.ceil(4 * m / period))


def _panel_width(m: float, L: float) -> tuple[float, float]:
    """(coarse, fine) panel widths: a quarter ``sin^2`` period, and ``m/2``."""
    return np.pi / (2 * L), 0.5 * m


def _transverse_values(m, L, d, K, width, nodes, inner):
    """Integrate ``inner(mu)`` against ``prod_{n>=2} S(k_n)`` over ``[-K, K]^(d-1)``."""
    if d == 1:
        return inner(np.array([m]))[..., 0]
    k, w = _panel_rule(K, *width, nodes)
    wk = w * _sinc2(k, L) * 2  # even integrand: fold onto k >= 0
    if d == 2:
        weights, ksq = wk, k * k
    else:
        weights = np.multiply.outer(wk, wk).ravel()
        ksq = np.add.outer(k * k, k * k).ravel()
    vals = inner(np.sqrt(m * m + ksq))
    return np.tensordot(vals, weights, axes=([-1], [0])) if vals.ndim > 1 else float(vals @ weights)


def _converge(evaluate, quad: QuadratureSpec, what: str, extrapolate: bool):
    """Run ``evaluate(level)`` until successive (extrapolated) values agree to ``tol``."""
    prev_raw = prev_est = None
    for level in range(quad.max_doublings + 1):
        raw = np.asarray(evaluate(level), dtype=float)
        est = raw if not extrapolate or prev_raw is None else raw + (raw - prev_raw) / 3
        if prev_est is not None and (not extrapolate or level >= 2):
            change = np.abs(est - prev_est)
            scale = np.abs(est)
            ok = (change <= quad.tol * scale) | ((change == 0) & (scale == 0))
            if np.all(ok):
                return est
        prev_raw, prev_est = raw, est
    raise QuadratureNotConverged(f"{what}: not converged to {quad.tol:g} after {quad.max_doublings} doublings")


def _check_budget(nodes_per_axis: int, dims: int, quad: QuadratureSpec, what: str):
    if nodes_per_axis**dims > quad.max_points:
        raise QuadratureNotConverged(f"{what}: point budget {quad.max_points} exhausted")


def _diagonal_value(m: float, L: float, d: int, quad: QuadratureSpec) -> float:
    K0 = _initial_cutoff(m, L, quad)
    width = _panel_width(m, L)

    def evaluate(level):
        K = K0 * 2**level
        _check_budget(_panel_rule(K, *width, 1)[0].size * quad.nodes, d, quad, "diagonal entry")
        inner = lambda mu: _real_axis_1d(0.0, mu, L, K, width, quad.nodes)
        return _prefactor(L, d) * _transverse_values(m, L, d, K, width, quad.nodes, inner)

    return float(_converge(evaluate, quad, "diagonal entry", extrapolate=True))


def _offdiagonal_values(m: float, L: float, d: int, D: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    D = np.abs(np.asarray(D, dtype=float))
    if np.any(D <= L):
        raise ValueError("branch-cut evaluation needs |D| > L")
    K0 = _initial_cutoff(m, L, quad)
    width = _panel_width(m, L)

    def evaluate(level):
        n = quad.laguerre * 2 ** min(level, 4)
        if d == 1:
            return _prefactor(L, 1) * cut_integral(D, m, L, n)
        K = K0 * 2**level
        _check_budget(_panel_rule(K, *width, 1)[0].size * quad.nodes, d - 1, quad, "off-diagonal entry")
        out = np.empty(D.shape)
        for i, Di in np.ndenumerate(D):
            inner = lambda mu: cut_integral(Di, mu, L, n)
            out[i] = _transverse_values(m, L, d, K, width, quad.nodes, inner)
        return _prefactor(L, d) * out

    return _converge(evaluate, quad, "off-diagonal entry", extrapolate=d > 1)


def _entries_for_separations(m, L, d, D, quad):
    D = np.asarray(D, dtype=float)
    out = np.empty(D.shape)
    diag = np.abs(D) <= L
    if np.any(diag):
        if np.any(D[diag] != 0):
            raise ValueError("separations 0 < |D| <= L do not occur for disjoint cubes")
        out[diag] = _diagonal_value(m, L, d, quad)
    if np.any(~diag):
        uniq, inv = np.unique(np.abs(D[~diag]), return_inverse=True)
        out[~diag] = _offdiagonal_values(m, L, d, uniq, quad)[inv]
    return out


# -- public operations -----------------------------------------------------------

def covariance_entry(cov: MassCovariance, family: ProbeFamily, j: int, l: int,
                     quad: QuadratureSpec = QuadratureSpec()) -> float:
    """``<f_j, C_m f_l>`` for probes of ``family`` (1-based indices)."""
    if not (1 <= j <= family.J and 1 <= l <= family.J):
        raise IndexError((j, l))
    D = (j * j - l * l) / cov.m
    return float(_entries_for_separations(cov.m, family.L, family.d, np.array([D]), quad)[0])


@lru_cache(maxsize=256)
def _lambda_cached(m: float, L: float, d: int, quad: QuadratureSpec) -> float:
    return _diagonal_value(m, L, d, quad)


def lambda_L(cov: MassCovariance, L: float, quad: QuadratureSpec = QuadratureSpec(), d: int = 1) -> float:
    """Variance of the field averaged over one edge-``L`` cube (the common diagonal of ``M``)."""
    if L <= 0:
        raise ValueError("L must be positive")
    return _lambda_cached(cov.m, float(L), int(d), quad)


@dataclass(frozen=True, eq=False)
class CovMatrix:
    family: ProbeFamily
    entries: np.ndarray = field(repr=False)
    quadrature_tol: float

    @property
    def lam(self) -> float:
        return float(self.entries[0, 0])

    @property
    def J(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(scipy.linalg.eigvalsh(self.entries, subset_by_index=[0, 0])[0])


def _validate(M: CovMatrix):
    e = M.entries
    if not np.array_equal(e, e.T):
        raise NotPositiveDefinite("matrix is not symmetric")
    diag = np.diag(e)
    if np.max(np.abs(diag - diag[0])) > M.quadrature_tol * abs(diag[0]):
        raise NotPositiveDefinite("diagonal entries differ beyond quadrature tolerance")
    if not M.min_eigenvalue() > 0:
        raise NotPositiveDefinite("minimum eigenvalue is not positive; tighten the quadrature tolerance")


def build_cov_matrix(cov: MassCovariance, family: ProbeFamily,
                     quad: QuadratureSpec = QuadratureSpec()) -> CovMatrix:
    if cov.m != family.m:
        raise ValueError("probe centres are laid out for a different mass")
    j = np.arange(1, family.J + 1, dtype=float)
    D = np.subtract.outer(j * j, j * j) / cov.m
    iu = np.triu_indices(family.J)
    upper = _entries_for_separations(cov.m, family.L, family.d, D[iu], quad)
    entries = np.zeros((family.J, family.J))
    entries[iu] = upper
    entries = np.triu(entries) + np.triu(entries, 1).T
    M = CovMatrix(family, entries, quad.tol)
    _validate(M)
    return M


def _as_array(M) -> np.ndarray:
    return M.entries if isinstance(M, CovMatrix) else np.asarray(M, dtype=float)


def hs_offdiag_norm(M) -> float:
    """``sum_{j != l} M_jl^2``: squared Hilbert-Schmidt norm of ``M - lambda I``."""
    e = _as_array(M)
    off = e - np.diag(np.diag(e))
    return float(np.sum(off * off))


def hs_increments(M, sizes) -> list[float]:
    """Growth of :func:`hs_offdiag_norm` between leading blocks of the given sizes.

    Each increment sums only the entries added, so it stays accurate when it
    is far below the total.
    """
    e = _as_array(M)
    sizes = list(sizes)
    out = []
    for a, b in zip(sizes, sizes[1:]):
        if not 1 <= a < b <= e.shape[0]:
            raise ValueError("sizes must increase within the matrix")
        block = e[a:b, :b]  # rows a..b-1 against all earlier columns (excluding diagonal)
        rows = np.arange(a, b)
        sq = block * block
        sq[np.arange(b - a), rows] = 0.0
        out.append(float(2 * np.sum(sq[:, :a]) + np.sum(sq[:, a:])))
    return out


def hs_witness(M, J: int | None = None) -> float:
    """``max_{j != l <= J} |M_jl| |j^2 - l^2|`` (the decay constant of the off-diagonal part)."""
    e = _as_array(M)
    J = e.shape[0] if J is None else J
    if J < 2:
        return 0.0
    idx = np.arange(1, J + 1, dtype=float)
    sep = np.abs(np.subtract.outer(idx * idx, idx * idx))
    return float(np.max(np.abs(e[:J, :J]) * sep))


def sample_probe_sequence(M, seed: int, count: int) -> np.ndarray:
    """``count`` centred Gaussian vectors with covariance ``M`` (shape ``(count, J)``).

    Vector ``i`` uses the same per-index stream contract as the field sampler.
    """
    e = _as_array(M)
    try:
        chol = scipy.linalg.cholesky(e, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailed(str(exc)) from exc
    z = np.stack([sample_stream(seed, i).standard_normal(e.shape[0]) for i in range(count)])
    return z @ chol.T


# -- envelope sets ---------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeParams:
    rho: float
    epsilon: float = 0.0
    n_min: int = 2

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.n_min < 2:
            raise ValueError("n_min must be >= 2")

    def bound(self, n: np.ndarray) -> np.ndarray:
        return np.sqrt(2 * (1 + self.epsilon) * self.rho * np.log(n))


@dataclass(frozen=True)
class EnvelopeReport:
    last_violation: int | None
    violation_count: int
    member: bool
    checked: int


def envelope_table(x, p: EnvelopeParams, start: int = 1):
    """Per-index rows ``(n, bound, |x_n|, violated)`` for ``n >= n_min``; ``x[0]`` is ``x_start``."""
    x = np.asarray(x, dtype=float)
    n = np.arange(start, start + x.size)
    keep = n >= p.n_min
    n, ax = n[keep], np.abs(x[keep])
    bound = p.bound(n)
    return n, bound, ax, ax >= bound


def envelope_test(x, p: EnvelopeParams, start: int = 1) -> EnvelopeReport:
    n, _, _, bad = envelope_table(x, p, start)
    last = int(n[bad][-1]) if bad.any() else None
    return EnvelopeReport(last, int(bad.sum()), last is None, int(n.size))


def envelope_probability(p: EnvelopeParams, N: int, N_max: int) -> float:
    """``prod_{n=N}^{N_max} Erf(sqrt((1+eps) ln n))``: chance that white noise of variance
    ``rho`` stays inside the envelope on ``[N, N_max]``."""
    if not 2 <= N <= N_max:
        raise ValueError("need 2 <= N <= N_max")
    total = 0.0
    chunk = 1 << 20
    for lo in range(N, N_max + 1, chunk):
        n = np.arange(lo, min(N_max, lo + chunk - 1) + 1, dtype=float)
        total += np.sum(np.log1p(-erfc(np.sqrt((1 + p.epsilon) * np.log(n)))))
    return float(np.exp(total))


# -- mass discrimination --------------------------------------------------------

@dataclass(frozen=True)
class Discrimination:
    best: float
    score: float
    lambda_hat: float
    stderr: float
    candidates: tuple[float, ...]
    lambdas: tuple[float, ...]
    z: tuple[float, ...]

    def rows(self):
        return [(m, lam, self.lambda_hat, z) for m, lam, z in zip(self.candidates, self.lambdas, self.z)]


def discriminate_mass(x, candidates, L: float, quad: QuadratureSpec = QuadratureSpec(),
                      d: int = 1) -> Discrimination:
    """Pick the mass whose cube variance is closest to the plain second moment of ``x``.

    ``score`` is how many standard errors further the runner-up sits.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 30:
        raise ValueError("need at least 30 probe values")
    cands = tuple(float(c) for c in candidates)
    if len(cands) < 2 or len(set(cands)) != len(cands):
        raise ValueError("need at least two distinct candidate masses")
    sq = x * x
    lam_hat = float(sq.mean())
    if lam_hat == 0:
        raise Degenerate("all-zero sequence carries no scale")
    se = float(sq.std(ddof=1) / np.sqrt(x.size))
    lams = tuple(lambda_L(MassCovariance(c), L, quad, d) for c in cands)
    z = tuple((lam - lam_hat) / se if se > 0 else math.copysign(math.inf, lam - lam_hat) for lam in lams)
    order = np.argsort([abs(v) for v in z])
    best, runner = order[0], order[1]
    score = abs(z[runner]) - abs(z[best])
    return Discrimination(cands[best], float(score), lam_hat, se, cands, lams, z)


# -- persistence ---------------------------------------------------------------

def write_cov_matrix(path, M: CovMatrix) -> None:
    """JSON header line, then row-major little-endian float64 entries."""
    f = M.family
    header = {"m": f.m, "L": f.L, "d": f.d, "J": f.J, "quadrature_tol": M.quadrature_tol,
              "dtype": "f64le", "layout": "row-major"}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(M.entries, dtype="<f8").tobytes())


def read_cov_matrix(path) -> CovMatrix:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    h = json.loads(raw[:nl])
    J = h["J"]
    payload = raw[nl + 1:]
    if len(payload) != 8 * J * J:
        raise ValueError(f"{path}: expected {J * J} entries")
    family = ProbeFamily(h["m"], h["L"], h["d"], J)
    return CovMatrix(family, np.frombuffer(payload, dtype="<f8").reshape(J, J).copy(), h["quadrature_tol"])
