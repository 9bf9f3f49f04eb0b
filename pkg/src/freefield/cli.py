"""Command-line driver: one subcommand per experiment.

Parameters are resolved as built-in defaults, then a flat JSON ``--config``
file, then explicit flags.  Every run writes ``run_manifest.json`` next to its
outputs.  Exit status: 0 ok, 2 configuration error, 3 numerical failure,
4 a check failed.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import longrange as lr
from .bumps import gaussian_bump, shift_directions, standard_test_functions
from .covariance import MassCovariance, MinlosParams, expected_regularized_norm, minlos_regularize
from .dynamics import (PhasePoint, evolve, hamiltonian, kg_residual, phase_space_norm,
                       symplectic_form)
from .errors import FreeFieldError, NumericalError
from .lattice import LatticeSpec, ScalarField, pair, write_field
from .mixing import MIXING_COLUMNS, mixing_correlation_mc, mixing_curve
from .report import write_csv, write_json
from .sampler import (characteristic_analytic, characteristic_mc, default_workers, read_batch,
                      sample, translated_characteristic_analytic, translated_characteristic_mc,
                      weyl_expectation_analytic, weyl_expectation_mc, write_batch, jackknife_mean,
                      radon_nikodym_batch)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    name: str
    type: type
    default: object
    help: str = ""
    many: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def coerce(self, value):
        if value is None:
            return None
        if self.many:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{self.name} must be a list")
            return [self._scalar(v) for v in value]
        return self._scalar(value)

    def _scalar(self, v):
        if isinstance(v, bool):
            raise ConfigError(f"{self.name}: booleans are not accepted")
        if self.type is int:
            if isinstance(v, float) and not v.is_integer():
                raise ConfigError(f"{self.name} must be an integer, got {v!r}")
            return int(v)
        if self.type is float:
            return float(v)
        return str(v)


def _lattice(n=128, a=0.1):
    return [Param("d", int, 1, "spatial dimension (1-3)"),
            Param("n", int, n, "sites per axis (even)"),
            Param("a", float, a, "lattice spacing")]


_M = Param("m", float, 1.0, "mass")
_SEED = Param("seed", int, 0, "base seed")
_BATCH = Param("batch", str, None, "existing batch directory (otherwise sample afresh)")
_L = Param("L", float, 1.0, "probe cube edge")
_QTOL = Param("tol", float, 1e-6, "quadrature tolerance")

SCHEMAS: dict[str, list[Param]] = {
    "sample": _lattice() + [_M, _SEED, Param("count", int, 100, "number of samples")],
    "verify-char": _lattice() + [_M, _SEED, Param("count", int, 10_000), _BATCH,
                                 Param("nsigma", float, 3.0), Param("floor", float, 0.02)],
    "weyl": _lattice() + [_M, _SEED, Param("count", int, 10_000), _BATCH,
                          Param("tol", float, 1e-12, "agreement of the two closed forms"),
                          Param("nsigma", float, 3.0), Param("floor", float, 0.02)],
    "rn-check": _lattice() + [_M, _SEED, Param("count", int, 10_000), _BATCH,
                              Param("nsigma", float, 4.0), Param("norm2", float, 0.5, "<g, C^-1 g>")],
    "evolve": _lattice() + [_M, _SEED, Param("t", float, 1.0, "evolution time")],
    "conserve": _lattice() + [_M, _SEED, Param("t_max", float, 100.0), Param("steps", int, 101),
                              Param("tol", float, 1e-12, "relative drift allowed"),
                              Param("h", float, [0.1, 0.05, 0.025, 0.0125], "difference steps", many=True),
                              Param("order_tol", float, 0.1)],
    "covmat": [Param("d", int, 1), _M, _L, Param("J", int, 50, "number of probes"), _QTOL,
               Param("witness_tol", float, 0.1, "allowed relative change of the HS witness")],
    "lambda": [Param("d", int, 1), Param("masses", float, [0.5, 1.0, 2.0], many=True), _L, _QTOL],
    "envelope": [Param("d", int, 1), _M, _L, _QTOL, _SEED,
                 Param("rho", float, None, "variance (default: lambda for m, L)"),
                 Param("epsilon", float, [0.0, 1.0], many=True),
                 Param("N", int, 100, "envelope start index"),
                 Param("length", int, 10_000, "sequence length"),
                 Param("count", int, 1000, "number of sequences"),
                 Param("decades", int, [1000, 10_000, 100_000, 1_000_000], "N_max values", many=True),
                 Param("nsigma", float, 3.0), Param("stab_tol", float, 1e-3),
                 Param("input", str, None, "text file of x_1, x_2, ... to test instead")],
    "discriminate": [Param("d", int, 1), _M, _L, _QTOL, _SEED,
                     Param("candidates", float, [0.5, 1.0], many=True),
                     Param("length", int, 200), Param("trials", int, 100),
                     Param("accuracy", float, 0.95, "required fraction classified correctly"),
                     Param("input", str, None, "text file with one probe sequence to classify")],
    "mixing": _lattice(n=2048, a=200 / 2048) + [
        _M, _SEED, Param("width", float, 1.0, "bump width"),
        Param("shifts", float, None, "shifts for the curve (default: 200 points up to box/2)", many=True),
        Param("mc_shifts", float, [0.5, 1.0, 2.0], many=True),
        Param("count", int, 10_000), Param("threshold", float, 1e-3),
        Param("nsigma", float, 3.0), Param("floor", float, 0.02)],
    "minlos": [Param("d", int, 1), _M, _SEED, Param("box", float, 100.0, "box length"),
               Param("n_values", int, [256, 512], many=True),
               Param("alpha", float, 0.3), Param("beta", float, 0.3),
               Param("count", int, 1000), Param("nsigma", float, 3.0),
               Param("max_change", float, 0.05), Param("min_growth", float, 0.2)],
}

_GLOBAL = [Param("out", str, None, "output directory (default runs/<command>)"),
           Param("workers", int, None, "FFT worker threads (default $FREEFIELD_WORKERS)")]


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"command": self.command, **self.params}, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        if "command" not in raw:
            raise ConfigError("config has no 'command'")
        cmd = raw.pop("command")
        return resolve(cmd, raw, {})

    @property
    def out(self) -> Path:
        return Path(self.params.get("out") or f"runs/{self.command}")


def resolve(command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = {p.name: p for p in SCHEMAS[command] + _GLOBAL}
    values = {name: p.default for name, p in schema.items()}
    for source in (file_values, flag_values):
        for k, v in source.items():
            if k not in schema:
                raise ConfigError(f"unknown parameter {k!r} for {command}")
            values[k] = schema[k].coerce(v)
    if values["workers"] is None:
        values["workers"] = default_workers()
    return ExperimentConfig(command, values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freefield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, schema in SCHEMAS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="flat JSON file of parameters")
        for prm in schema + _GLOBAL:
            kw = dict(type=prm.type, default=argparse.SUPPRESS, dest=prm.name,
                      help=f"{prm.help} (default: {prm.default})".strip())
            if prm.many:
                kw["nargs"] = "+"
            p.add_argument(prm.flag, **kw)
    return parser


# -- helpers --------------------------------------------------------------------

def _spec(c: dict) -> LatticeSpec:
    return LatticeSpec(c["d"], c["n"], c["a"])


def _batch(c: dict):
    if c.get("batch"):
        return read_batch(c["batch"])
    return sample(MassCovariance(c["m"]), _spec(c), c["seed"], c["count"], workers=c["workers"])


def _read_sequence(path) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read sequence {path}: {exc}") from exc


@dataclass
class Outcome:
    outputs: list[str] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# -- subcommands ----------------------------------------------------------------

def run_sample(c, out: Path) -> Outcome:
    write_batch(out, _batch({**c, "batch": None}))
    return Outcome(["manifest.json"] + [f"field_{i:06d}.bin" for i in range(c["count"])])


def run_verify_char(c, out: Path) -> Outcome:
    batch = _batch(c)
    rows, tests = [], []
    for name, f in standard_test_functions(batch.spec).items():
        exact = characteristic_analytic(batch.cov, f)
        est = characteristic_mc(batch, f)
        tol = max(c["nsigma"] * est.stderr, c["floor"])
        diff = abs(est.value - exact)
        ok = diff <= tol
        rows.append((name, exact, est.value.real, est.value.imag, diff, est.stderr, tol, ok))
        tests.append(dict(zip(("name", "analytic", "mc_re", "mc_im", "abs_diff", "stderr",
                               "tolerance", "pass"), rows[-1])))
    passed = all(t["pass"] for t in tests)
    write_json(out / "verify_char.json", {"count": len(batch), "tests": tests, "pass": passed})
    write_csv(out / "verify_char.csv",
              ("name", "analytic", "mc_re", "mc_im", "abs_diff", "stderr", "tolerance", "pass"), rows)
    return Outcome(["verify_char.json", "verify_char.csv"], {"characteristic": passed})


def run_weyl(c, out: Path) -> Outcome:
    batch = _batch(c)
    fs = standard_test_functions(batch.spec)
    gs = shift_directions(batch.cov, batch.spec)
    pairs = [("bump", "bump"), ("dipole", "offset"), ("packet", "dipole")]
    rows, forms_ok, mc_ok = [], True, True
    for fn, gn in pairs:
        f, g = fs[fn], gs[gn]
        cov_form = weyl_expectation_analytic(batch.cov, f, g, "covariance")
        mass_form = weyl_expectation_analytic(batch.cov, f, g, "mass")
        est = weyl_expectation_mc(batch, f, g)
        gap = abs(cov_form - mass_form)
        ok_mc = abs(est.value - cov_form) <= max(c["nsigma"] * est.stderr, c["floor"])
        forms_ok &= gap <= c["tol"]
        mc_ok &= ok_mc
        rows.append((fn, gn, cov_form, mass_form, gap, est.value.real, est.value.imag, est.stderr, ok_mc))
    write_csv(out / "weyl.csv", ("f", "g", "covariance_form", "mass_form", "form_gap", "mc_re", "mc_im",
                                 "stderr", "mc_pass"), rows)
    return Outcome(["weyl.csv"], {"closed_forms": bool(forms_ok), "monte_carlo": bool(mc_ok)})


def run_rn_check(c, out: Path) -> Outcome:
    batch = _batch(c)
    f = gaussian_bump(batch.spec, batch.spec.length / 25.6)
    rows, rn_ok, tc_ok = [], True, True
    for name, g in shift_directions(batch.cov, batch.spec, c["norm2"]).items():
        rn = jackknife_mean(radon_nikodym_batch(batch, g))
        exact = translated_characteristic_analytic(batch.cov, f, g)
        tc = translated_characteristic_mc(batch, f, g)
        ok1 = rn.within(1.0, c["nsigma"])
        ok2 = tc.within(exact, c["nsigma"])
        rn_ok &= ok1
        tc_ok &= ok2
        rows.append((name, rn.value, rn.stderr, ok1, exact.real, exact.imag,
                     tc.value.real, tc.value.imag, tc.stderr, ok2))
    write_csv(out / "rn_check.csv", ("g", "rn_mean", "rn_stderr", "rn_pass", "char_re", "char_im",
                                     "mc_re", "mc_im", "mc_stderr", "char_pass"), rows)
    return Outcome(["rn_check.csv"], {"radon_nikodym": bool(rn_ok), "translated_characteristic": bool(tc_ok)})


def _random_state(c) -> tuple[MassCovariance, PhasePoint]:
    cov = MassCovariance(c["m"])
    draws = sample(cov, _spec(c), c["seed"], 2, workers=c["workers"]).fields
    return cov, PhasePoint(draws[0], draws[1])


def run_evolve(c, out: Path) -> Outcome:
    cov, s0 = _random_state(c)
    st = evolve(cov, s0, c["t"])
    for name, fld in (("phi_0", s0.phi), ("pi_0", s0.pi), ("phi_t", st.phi), ("pi_t", st.pi)):
        write_field(out / f"{name}.bin", fld)
    write_json(out / "evolve.json", {
        "t": c["t"],
        "hamiltonian": [hamiltonian(cov, s0), hamiltonian(cov, st)],
        "phase_space_norm": [phase_space_norm(cov, s0), phase_space_norm(cov, st)],
    })
    return Outcome(["phi_0.bin", "pi_0.bin", "phi_t.bin", "pi_t.bin", "evolve.json"])


def conservation_table(cov, s1: PhasePoint, s2: PhasePoint, times):
    """Rows ``(t, dH, dOmega, dNorm, group_law)`` of relative deviations from ``t = 0``."""
    h0, w0, n0 = hamiltonian(cov, s1), symplectic_form(s1, s2), phase_space_norm(cov, s1)
    rows = []
    for t in times:
        a, b = evolve(cov, s1, t), evolve(cov, s2, t)
        # group law: evolve(t) == evolve(t/2) after evolve(t/2)
        half = evolve(cov, evolve(cov, s1, t / 2), t / 2)
        scale = max(np.max(np.abs(a.phi.values)), np.max(np.abs(a.pi.values)))
        gl = max(np.max(np.abs(half.phi.values - a.phi.values)),
                 np.max(np.abs(half.pi.values - a.pi.values))) / scale
        rows.append((float(t), abs(hamiltonian(cov, a) - h0) / abs(h0),
                     abs(symplectic_form(a, b) - w0) / abs(w0),
                     abs(phase_space_norm(cov, a) - n0) / n0, float(gl)))
    return rows


def kg_order(cov, f: ScalarField, t: float, steps) -> tuple[list[float], float]:
    """Residual norms at each step and the fitted convergence order."""
    res = [np.sqrt(pair(r, r)) for r in (kg_residual(cov, f, t, h) for h in steps)]
    slope = np.polyfit(np.log(steps), np.log(res), 1)[0]
    return [float(r) for r in res], float(slope)


def run_conserve(c, out: Path) -> Outcome:
    cov = MassCovariance(c["m"])
    draws = sample(cov, _spec(c), c["seed"], 4, workers=c["workers"]).fields
    s1, s2 = PhasePoint(draws[0], draws[1]), PhasePoint(draws[2], draws[3])
    rows = conservation_table(cov, s1, s2, np.linspace(0.0, c["t_max"], c["steps"]))
    write_csv(out / "conserve.csv", ("t", "hamiltonian_drift", "symplectic_drift", "norm_drift",
                                     "group_law_error"), rows)
    worst = np.max(np.array([r[1:] for r in rows]), axis=0)
    f = gaussian_bump(_spec(c), _spec(c).length / 12.8)
    res, order = kg_order(cov, f, 1.0, c["h"])
    write_csv(out / "kg_residual.csv", ("h", "residual"), list(zip(c["h"], res)))
    write_json(out / "conserve.json", {"max_drift": {k: float(v) for k, v in zip(
        ("hamiltonian", "symplectic", "norm", "group_law"), worst)}, "kg_order": order})
    checks = {k: bool(v <= c["tol"]) for k, v in zip(("hamiltonian", "symplectic", "norm", "group_law"), worst)}
    checks["kg_order"] = abs(order - 2.0) <= c["order_tol"]
    return Outcome(["conserve.csv", "kg_residual.csv", "conserve.json"], checks)


def doubling_sizes(J: int, smallest: int = 3) -> list[int]:
    """``[.., J//4, J//2, J]`` down to ``smallest``."""
    sizes = [J]
    while sizes[-1] // 2 >= smallest:
        sizes.append(sizes[-1] // 2)
    return sizes[::-1]


def run_covmat(c, out: Path) -> Outcome:
    quad = lr.QuadratureSpec(tol=c["tol"])
    fam = lr.ProbeFamily(c["m"], c["L"], c["d"], c["J"])
    M = lr.build_cov_matrix(MassCovariance(c["m"]), fam, quad)
    lr.write_cov_matrix(out / "covmat.bin", M)
    diag = np.diag(M.entries)
    spread = float(np.max(np.abs(diag - diag[0])) / diag[0])
    half = max(c["J"] // 2, 2)
    w_half, w_full = lr.hs_witness(M, half), lr.hs_witness(M)
    change = abs(w_full - w_half) / w_half if w_half else float("inf")
    sizes = doubling_sizes(c["J"])
    incs = lr.hs_increments(M, sizes)
    report = {"lambda": M.lam, "diagonal_spread": spread, "min_eigenvalue": M.min_eigenvalue(),
              "hs_offdiag_norm": lr.hs_offdiag_norm(M), "hs_witness": {str(half): w_half, str(c["J"]): w_full},
              "witness_change": change, "increment_sizes": sizes, "hs_increments": incs}
    write_json(out / "covmat.json", report)
    J = c["J"]
    rows = [(j + 1, l + 1, M.entries[j, l]) for j in range(J) for l in range(J)]
    write_csv(out / "covmat.csv", ("j", "l", "value"), rows)
    checks = {"diagonal": spread <= c["tol"], "positive_definite": M.min_eigenvalue() > 0,
              "witness_stable": change <= c["witness_tol"],
              "increments_decreasing": all(b < a for a, b in zip(incs, incs[1:]))}
    return Outcome(["covmat.bin", "covmat.json", "covmat.csv"], checks)


def run_lambda(c, out: Path) -> Outcome:
    quad = lr.QuadratureSpec(tol=c["tol"])
    masses = sorted(c["masses"])
    lams = [lr.lambda_L(MassCovariance(m), c["L"], quad, c["d"]) for m in masses]
    write_csv(out / "lambda.csv", ("m", "lambda"), list(zip(masses, lams)))
    return Outcome(["lambda.csv"], {"strictly_decreasing": all(b < a for a, b in zip(lams, lams[1:]))})


def envelope_rows(x, params: lr.EnvelopeParams, start: int = 1):
    n, bound, ax, bad = lr.envelope_table(x, params, start)
    return list(zip(n.tolist(), bound, ax, bad.tolist()))


def run_envelope(c, out: Path) -> Outcome:
    rho = c["rho"]
    if rho is None:
        rho = lr.lambda_L(MassCovariance(c["m"]), c["L"], lr.QuadratureSpec(tol=c["tol"]), c["d"])
    cols = ("n", "bound", "abs_x", "violated")
    if c["input"]:
        x = _read_sequence(c["input"])
        rep = [(eps, lr.envelope_test(x, lr.EnvelopeParams(rho, eps, c["N"]))) for eps in c["epsilon"]]
        write_csv(out / "envelope.csv", cols, envelope_rows(x, lr.EnvelopeParams(rho, c["epsilon"][0], c["N"])))
        write_csv(out / "envelope_summary.csv", ("epsilon", "member", "violations", "last_violation", "checked"),
                  [(e, r.member, r.violation_count, r.last_violation if r.last_violation else "", r.checked)
                   for e, r in rep])
        return Outcome(["envelope.csv", "envelope_summary.csv"])

    N, length, count = c["N"], c["length"], c["count"]
    xs = np.sqrt(rho) * np.stack([lr.sample_stream(c["seed"], i).standard_normal(length) for i in range(count)])
    write_csv(out / "envelope.csv", cols, envelope_rows(xs[0], lr.EnvelopeParams(rho, c["epsilon"][0], N)))
    summary, decades, checks = [], [], {}
    n = np.arange(1, length + 1)
    for eps in c["epsilon"]:
        p = lr.EnvelopeParams(rho, eps, N)
        tail = n >= N
        inside = ~np.any(np.abs(xs[:, tail]) >= p.bound(n[tail]), axis=1)
        frac = float(inside.mean())
        lam = lr.envelope_probability(p, N, length)
        sigma = float(np.sqrt(lam * (1 - lam) / count))
        ok = abs(frac - lam) <= c["nsigma"] * sigma
        summary.append((eps, N, length, frac, lam, sigma, ok))
        checks[f"fraction_eps_{eps:g}"] = ok
        seq = [lr.envelope_probability(p, N, nm) for nm in c["decades"]]
        decades.extend((eps, nm, v) for nm, v in zip(c["decades"], seq))
        steps = np.diff(seq)
        if eps == 0:
            checks["decay_eps_0"] = bool(np.all(steps < 0))
        else:
            checks[f"stable_eps_{eps:g}"] = bool(np.all(np.abs(steps) < c["stab_tol"]))
    write_csv(out / "envelope_summary.csv", ("epsilon", "N", "N_max", "empirical", "Lambda", "sigma", "pass"),
              summary)
    write_csv(out / "envelope_decades.csv", ("epsilon", "N_max", "Lambda"), decades)
    return Outcome(["envelope.csv", "envelope_summary.csv", "envelope_decades.csv"], checks)


def run_discriminate(c, out: Path) -> Outcome:
    quad = lr.QuadratureSpec(tol=c["tol"])
    cols = ("candidate_m", "lambda_m_L", "lambda_hat", "z_score")
    if c["input"]:
        res = lr.discriminate_mass(_read_sequence(c["input"]), c["candidates"], c["L"], quad, c["d"])
        write_csv(out / "discriminate.csv", cols, res.rows())
        write_json(out / "discriminate.json", {"best": res.best, "score": res.score})
        return Outcome(["discriminate.csv", "discriminate.json"])
    fam = lr.ProbeFamily(c["m"], c["L"], c["d"], c["length"])
    M = lr.build_cov_matrix(MassCovariance(c["m"]), fam, quad)
    xs = lr.sample_probe_sequence(M, c["seed"], c["trials"])
    results = [lr.discriminate_mass(x, c["candidates"], c["L"], quad, c["d"]) for x in xs]
    write_csv(out / "discriminate.csv", cols, results[0].rows())
    write_csv(out / "trials.csv", ("trial", "best", "lambda_hat", "score", "correct"),
              [(i, r.best, r.lambda_hat, r.score, r.best == c["m"]) for i, r in enumerate(results)])
    accuracy = float(np.mean([r.best == c["m"] for r in results]))
    write_json(out / "discriminate.json", {"accuracy": accuracy, "trials": c["trials"]})
    return Outcome(["discriminate.csv", "trials.csv", "discriminate.json"],
                   {"accuracy": accuracy >= c["accuracy"]})


def monotone_beyond(shifts, exponents, start: float, rel_floor: float = 1e-12) -> bool:
    """Exponent non-increasing for shifts ``>= start``, up to a roundoff floor relative to its peak."""
    keep = shifts >= start
    e = exponents[keep]
    floor = rel_floor * np.max(np.abs(exponents))
    return bool(np.all(np.diff(e) <= floor))


def run_mixing(c, out: Path) -> Outcome:
    spec = _spec(c)
    cov = MassCovariance(c["m"])
    f = gaussian_bump(spec, c["width"])
    half = spec.length / 2
    shifts = c["shifts"] or list(np.linspace(half / 200, half, 200))
    curve = mixing_curve(cov, f, f, shifts, c["threshold"])
    write_csv(out / "mixing.csv", MIXING_COLUMNS, curve.rows())
    checks = {"monotone": monotone_beyond(curve.shifts, curve.exponents, 4 * c["width"]),
              "decayed": curve.decayed}
    files = ["mixing.csv"]
    if c["count"] > 0:
        batch = sample(cov, spec, c["seed"], c["count"], workers=c["workers"])
        ref = mixing_curve(cov, f, f, c["mc_shifts"], c["threshold"])
        rows, ok = [], True
        for y, exact in zip(ref.shifts, ref.correlations):
            est = mixing_correlation_mc(batch, f, f, y)
            good = abs(est.value - exact) <= max(c["nsigma"] * est.stderr, c["floor"])
            ok &= good
            rows.append((y, exact.real, est.value.real, est.value.imag, est.stderr, good))
        write_csv(out / "mixing_mc.csv", ("y", "analytic", "mc_re", "mc_im", "stderr", "pass"), rows)
        files.append("mixing_mc.csv")
        checks["monte_carlo"] = bool(ok)
    return Outcome(files, checks)


def run_minlos(c, out: Path) -> Outcome:
    cov = MassCovariance(c["m"])
    cases = [MinlosParams(c["alpha"], c["beta"]), MinlosParams(0.0, 0.0)]
    rows, values, mc_ok = [], {}, True
    for p in cases:
        for n in c["n_values"]:
            spec = LatticeSpec(c["d"], n, c["box"] / n)
            exact = expected_regularized_norm(cov, spec, p)
            batch = sample(cov, spec, c["seed"], c["count"], workers=c["workers"])
            norms = np.array([pair(g, g) for g in (minlos_regularize(cov, phi, p) for phi in batch.fields)])
            est = jackknife_mean(norms)
            ok = est.within(exact, c["nsigma"])
            mc_ok &= ok
            values[(p, n)] = exact
            rows.append((p.alpha, p.beta, n, spec.a, exact, est.value, est.stderr, ok))
    write_csv(out / "minlos.csv", ("alpha", "beta", "n", "a", "expected", "mc_mean", "stderr", "pass"), rows)
    lo, hi = c["n_values"][0], c["n_values"][-1]
    change = abs(values[(cases[0], hi)] / values[(cases[0], lo)] - 1)
    growth = values[(cases[1], hi)] / values[(cases[1], lo)] - 1
    write_json(out / "minlos.json", {"regularized_change": change, "unregularized_growth": growth,
                                     "in_support_regime": cases[0].in_support_regime(c["d"])})
    return Outcome(["minlos.csv", "minlos.json"], {"regularized_stable": change < c["max_change"],
                                                   "unregularized_grows": growth > c["min_growth"],
                                                   "monte_carlo": bool(mc_ok)})


RUNNERS = {"sample": run_sample, "verify-char": run_verify_char, "weyl": run_weyl, "rn-check": run_rn_check,
           "evolve": run_evolve, "conserve": run_conserve, "covmat": run_covmat, "lambda": run_lambda,
           "envelope": run_envelope, "discriminate": run_discriminate, "mixing": run_mixing,
           "minlos": run_minlos}


def _versions() -> dict:
    try:
        own = metadata.version("freefield")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"freefield": own, "numpy": np.__version__, "python": platform.python_version(),
            "scipy": scipy.__version__}


def run(config: ExperimentConfig) -> int:
    """Execute one subcommand, write its outputs and manifest, and return the exit status."""
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    outcome = RUNNERS[config.command](config.params, out)
    status = EXIT_OK if outcome.passed else EXIT_CHECK
    write_json(out / "run_manifest.json", {
        "command": config.command, "config": config.params, "seed": config.params.get("seed"),
        "versions": _versions(), "wall_time_s": time.perf_counter() - start,
        "outputs": outcome.outputs, "checks": outcome.checks, "exit_status": status,
    })
    return status


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        file_values = {}
        if config_path:
            file_values = json.loads(Path(config_path).read_text())
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
            named = file_values.pop("command", command)
            if named != command:
                raise ConfigError(f"config is for {named!r}, not {command!r}")
        config = resolve(command, file_values, args)
        return run(config)
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except (ConfigError, FreeFieldError, ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_CONFIG, exc)


if __name__ == "__main__":
    sys.exit(main())
