"""Numerical laboratory for principal eigenvalues of nonlocal cooperative systems.

The package discretizes operators of the form

    (K phi)_i = d_i * (integral_Omega J_i(x-y) phi_i(y) dy - phi_i(x)) + sum_j a_ij(x) phi_j(x)

on boxes with midpoint quadrature, computes certified principal eigenpairs,
and runs the asymptotic experiments (dispersal rate and dispersal range
sweeps, scaling invariance, domain monotonicity, rank-one counterexamples,
concentration studies) exposed by the ``nls`` command line tool.
"""

from nls.grids import Box, Grid, build_grid
from nls.kernels import (
    Kernel,
    KernelReport,
    gauss_cutoff_kernel,
    mollified_trapezoid_kernel,
    scale_kernel,
    second_moment,
    trapezoid_kernel,
    triangle_kernel,
    uniform_kernel,
    validate_kernel,
)
from nls.fields import (
    MatrixField,
    PointSpectrum,
    constant_field,
    counterexample_field,
    eval_lambda_bar,
    hypothesis_P_diagnostic,
    scalar_field,
    smooth_bump_field,
    sup_lambda_bar,
)
from nls.operators import (
    AssembledOperator,
    BlockVector,
    apply,
    assemble_convolution,
    assemble_K,
    assemble_K_sigma_m,
    mass_function,
)
from nls.spectra import (
    EigenReport,
    TestPairCertificate,
    full_spectrum_small,
    inverse_positivity_check,
    lambda_triple_consistency,
    principal_eigenpair,
    rayleigh,
    verify_test_pair_lower,
    verify_test_pair_upper,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Grid",
    "build_grid",
    "Kernel",
    "KernelReport",
    "uniform_kernel",
    "triangle_kernel",
    "trapezoid_kernel",
    "mollified_trapezoid_kernel",
    "gauss_cutoff_kernel",
    "validate_kernel",
    "second_moment",
    "scale_kernel",
    "MatrixField",
    "PointSpectrum",
    "constant_field",
    "counterexample_field",
    "scalar_field",
    "smooth_bump_field",
    "eval_lambda_bar",
    "sup_lambda_bar",
    "hypothesis_P_diagnostic",
    "AssembledOperator",
    "BlockVector",
    "assemble_convolution",
    "assemble_K",
    "assemble_K_sigma_m",
    "mass_function",
    "apply",
    "EigenReport",
    "TestPairCertificate",
    "principal_eigenpair",
    "full_spectrum_small",
    "rayleigh",
    "verify_test_pair_lower",
    "verify_test_pair_upper",
    "lambda_triple_consistency",
    "inverse_positivity_check",
]
