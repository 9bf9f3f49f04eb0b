"""Free scalar field on a periodic lattice: Gaussian vacuum measure, Klein-Gordon
dynamics, long-range probe statistics and mixing."""
from .errors import (Degenerate, EmptyBatch, FactorizationFailed, FreeFieldError, NonHermitianInput,
                     NotPositiveDefinite, NumericalError, QuadratureNotConverged, SpecMismatch, TooLarge)
from .lattice import (LatticeSpec, ScalarField, SpectralField, apply_multiplier, forward_transform,
                      inverse_transform, pair, read_field, write_field)
from .covariance import (MassCovariance, MinlosParams, apply_covariance, apply_inverse_covariance,
                         apply_power, covariance_form, expected_regularized_norm, minlos_regularize)
from .sampler import (Estimate, SampleBatch, characteristic_analytic, characteristic_mc, dense_covariance,
                      jackknife_mean, radon_nikodym, radon_nikodym_batch, read_batch, sample, sample_dense,
                      translated_characteristic_analytic, translated_characteristic_mc,
                      weyl_expectation_analytic, weyl_expectation_mc, write_batch)
from .dynamics import (PhasePoint, energy_norm, evolve, hamiltonian, kg_residual, phase_space_norm,
                       symplectic_form, test_function_flow)
from .longrange import (CovMatrix, Discrimination, EnvelopeParams, EnvelopeReport, ProbeFamily,
                        QuadratureSpec, build_cov_matrix, covariance_entry, discriminate_mass,
                        envelope_probability, envelope_test, hs_increments, hs_offdiag_norm, hs_witness,
                        lambda_L, read_cov_matrix, sample_probe_sequence, write_cov_matrix)
from .bumps import gaussian_bump
from .mixing import MixingCurve, mixing_correlation_analytic, mixing_correlation_mc, mixing_curve, translate

__version__ = "0.1.0"

__all__ = [
    "Degenerate",
    "EmptyBatch",
    "FactorizationFailed",
    "FreeFieldError",
    "NonHermitianInput",
    "NotPositiveDefinite",
    "NumericalError",
    "QuadratureNotConverged",
    "SpecMismatch",
    "TooLarge",
    "LatticeSpec",
    "ScalarField",
    "SpectralField",
    "apply_multiplier",
    "forward_transform",
    "inverse_transform",
    "pair",
    "read_field",
    "write_field",
    "MassCovariance",
    "MinlosParams",
    "apply_covariance",
    "apply_inverse_covariance",
    "apply_power",
    "covariance_form",
    "expected_regularized_norm",
    "minlos_regularize",
    "Estimate",
    "SampleBatch",
    "characteristic_analytic",
    "characteristic_mc",
    "dense_covariance",
    "jackknife_mean",
    "radon_nikodym",
    "radon_nikodym_batch",
    "read_batch",
    "sample",
    "sample_dense",
    "translated_characteristic_analytic",
    "translated_characteristic_mc",
    "weyl_expectation_analytic",
    "weyl_expectation_mc",
    "write_batch",
    "PhasePoint",
    "energy_norm",
    "evolve",
    "hamiltonian",
    "kg_residual",
    "phase_space_norm",
    "symplectic_form",
    "test_function_flow",
    "CovMatrix",
    "Discrimination",
    "EnvelopeParams",
    "EnvelopeReport",
    "ProbeFamily",
    "QuadratureSpec",
    "build_cov_matrix",
    "covariance_entry",
    "discriminate_mass",
    "envelope_probability",
    "envelope_test",
    "hs_increments",
    "hs_offdiag_norm",
    "hs_witness",
    "lambda_L",
    "read_cov_matrix",
    "sample_probe_sequence",
    "write_cov_matrix",
    "gaussian_bump",
    "MixingCurve",
    "mixing_correlation_analytic",
    "mixing_correlation_mc",
    "mixing_curve",
    "translate",
    "__version__",
]
