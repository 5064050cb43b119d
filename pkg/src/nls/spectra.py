"""Principal eigenpairs, Rayleigh quotients, test-pair certificates.

The principal eigenvalue is the negative of the largest eigenvalue of the
assembled symmetric matrix: the discrete form of the variational identity

    lambda_p = -sup_{||phi||_E = 1} <K phi, phi>.

Two independent routes compute it: shift-power iteration (default) and the
full cyclic-Jacobi decomposition (the oracle for sizes <= 600); tests hold
the two against each other. Certificates turn sub/supersolution pairs
(lambda, phi) into checked one-sided bounds on lambda_p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from nls.errors import (
    CapacityError,
    ConvergenceError,
    InapplicableError,
    PreconditionError,
)
from nls.jacobi import jacobi_eigh
from nls.operators import AssembledOperator, BlockVector

JACOBI_SIZE_CAP = 600


@dataclass(frozen=True)
class EigenReport:
    """Principal eigenpair with its accuracy evidence.

    eigenvector has unit E-norm and is sign-fixed (largest-magnitude entry
    positive); residual is the sup norm of K phi + lambda_p phi. For
    cooperative instances with J_i(0) > 0 the positivity margin (the
    smallest eigenvector entry) is positive by Perron-Frobenius.
    """

    lambda_p: float
    eigenvector: BlockVector
    residual: float
    positivity_margin: float
    iterations: int
    method: str  # power_shift | jacobi_full

    def json_dict(self) -> dict:
        return {
            "lambda_p": self.lambda_p,
            "residual": self.residual,
            "positivity_margin": self.positivity_margin,
            "iterations": self.iterations,
            "method": self.method,
        }


@dataclass(frozen=True)
class TestPairCertificate:
    """Checked one-sided bound lambda_p >= lambda (lower) or <= lambda (upper).

    slack is K phi + lambda phi; kappa = 1/min(phi) converts the tolerance
    into a bound perturbation: a passing lower certificate implies
    lambda_p >= lambda - tol * kappa.
    """

    lam: float
    direction: str  # lower | upper
    slack: BlockVector
    max_violation: float
    tolerance: float
    kappa: float
    passed: bool


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, AssembledOperator) else np.asarray(op, dtype=float)


def _finish_report(op: AssembledOperator, lam_p: float, flat: np.ndarray,
                   iterations: int, method: str) -> EigenReport:
    phi = BlockVector.from_flat(flat, op.n_species, op.weight).normalized().sign_fixed()
    resid_vec = op.matrix @ phi.flat() + lam_p * phi.flat()
    return EigenReport(
        lambda_p=float(lam_p),
        eigenvector=phi,
        residual=float(np.max(np.abs(resid_vec))),
        positivity_margin=phi.min_entry(),
        iterations=iterations,
        method=method,
    )


def _jacobi_principal(op: AssembledOperator, iterations: int) -> EigenReport:
    vals, vecs = jacobi_eigh(op.matrix)
    return _finish_report(op, -vals[0], vecs[:, 0], iterations, "jacobi_full")


def principal_eigenpair(op: AssembledOperator, tol: float = 1e-11,
                        max_iter: Optional[int] = None) -> EigenReport:
    """Shift-power iteration for the principal eigenvalue lambda_p = -mu_max.

    Iterates on K + s*I with s = 1 + max absolute row sum, which makes
    mu_max + s the dominant eigenvalue of a positive semidefinite matrix, so
    convergence from the positive start vector is guaranteed. Stops when the
    sup-norm residual of the E-normalized iterate is below
    tol * (1 + ||K||_inf). Falls back to the full Jacobi decomposition for
    sizes <= 600 when the iteration stalls; larger stalls raise a
    ConvergenceError carrying the best iterate.
    """
    if tol < 1e-13:
        raise PreconditionError(f"tol must be >= 1e-13, got {tol}")
    size = op.size
    if max_iter is None:
        max_iter = 200 * size
    norm_inf = op.sup_row_sum()
    shift = 1.0 + norm_inf
    b = op.matrix + shift * np.eye(size)
    sqrt_w = math.sqrt(op.weight)
    target = tol * (1.0 + norm_inf) * sqrt_w

    x = np.ones(size) / math.sqrt(size)
    best_res = math.inf
    best = (0.0, x)
    res = math.inf
    checkpoint_res = math.inf
    it = 0
    while it < max_iter:
        it += 1
        y = b @ x
        mu = float(x @ y)
        r = y - mu * x
        res = float(np.max(np.abs(r)))
        if res < best_res:
            best_res = res
            best = (mu, x)
        if res <= target:
            return _finish_report(op, -(mu - shift), x, it, "power_shift")
        ny = float(np.linalg.norm(y))
        if ny == 0.0:  # x in the kernel of B: restart deterministically
            x = np.ones(size) / math.sqrt(size)
            continue
        x = y / ny
        if it % 2000 == 0:
            # projected iterations from the measured contraction rate
            if checkpoint_res < math.inf and res > 0.0:
                rate = (res / checkpoint_res) ** (1.0 / 2000.0)
                stalled = rate >= 1.0 - 1e-12
                if not stalled:
                    projected = it + math.log(target / res) / math.log(rate)
                else:
                    projected = math.inf
                if (stalled or projected > max_iter) and size <= JACOBI_SIZE_CAP:
                    return _jacobi_principal(op, it)
            checkpoint_res = res

    if size <= JACOBI_SIZE_CAP:
        return _jacobi_principal(op, it)
    mu, x = best
    raise ConvergenceError(
        f"power iteration did not reach residual {target:.3e} in {max_iter} "
        f"iterations (best {best_res:.3e})",
        best=_finish_report(op, -(mu - shift), x, it, "power_shift"))


def full_spectrum_small(op) -> np.ndarray:
    """All eigenvalues of the assembled matrix, descending (size <= 600).

    The whole spectrum sits in (-inf, -lambda_p]: the containment the
    variational identity asserts, checked directly in the tests.
    """
    matrix = _as_matrix(op)
    if matrix.shape[0] > JACOBI_SIZE_CAP:
        raise CapacityError(
            f"size {matrix.shape[0]} exceeds the dense spectrum cap {JACOBI_SIZE_CAP}")
    vals, _ = jacobi_eigh(matrix)
    return vals


def rayleigh(op: AssembledOperator, phi: BlockVector) -> float:
    """<K phi, phi> / <phi, phi> with the weighted inner product.

    Never exceeds -lambda_p; equals it exactly on the principal eigenvector.
    """
    nrm2 = phi.e_dot(phi)
    if nrm2 == 0.0:
        raise PreconditionError("Rayleigh quotient of the zero vector")
    k_phi = BlockVector.from_flat(op.matrix @ phi.flat(), op.n_species, op.weight)
    return k_phi.e_dot(phi) / nrm2


def _slack(op: AssembledOperator, lam: float, phi: BlockVector) -> BlockVector:
    return BlockVector.from_flat(op.matrix @ phi.flat() + lam * phi.flat(),
                                 op.n_species, op.weight)


def verify_test_pair_lower(op: AssembledOperator, lam: float, phi: BlockVector,
                           tol: float) -> TestPairCertificate:
    """Certify lambda_p >= lam from a positive subsolution.

    Requires phi > 0 with margin 1e-12. Passes when K phi + lam phi <= tol
    at every node and species; a pass implies lambda_p >= lam - tol/min(phi).
    """
    min_phi = phi.min_entry()
    if min_phi < 1e-12:
        raise PreconditionError(
            f"lower test pair needs phi strictly positive (min {min_phi:.3e})")
    slack = _slack(op, lam, phi)
    worst = float(np.max(slack.values))
    return TestPairCertificate(
        lam=float(lam), direction="lower", slack=slack,
        max_violation=max(0.0, worst), tolerance=float(tol),
        kappa=1.0 / min_phi, passed=worst <= tol)


def verify_test_pair_upper(op: AssembledOperator, lam: float, phi: BlockVector,
                           tol: float) -> TestPairCertificate:
    """Certify lambda_p <= lam from a nonnegative supersolution.

    Requires phi >= 0 and phi not identically zero. Passes when
    K phi + lam phi >= -tol everywhere; for strictly positive phi a pass
    implies lambda_p <= lam + tol/min(phi).
    """
    min_phi = phi.min_entry()
    if min_phi < -1e-14 or float(np.max(phi.values)) <= 0.0:
        raise PreconditionError(
            "upper test pair needs phi >= 0 and not identically zero")
    slack = _slack(op, lam, phi)
    worst = float(np.min(slack.values))
    kappa = 1.0 / min_phi if min_phi > 0 else math.inf
    return TestPairCertificate(
        lam=float(lam), direction="upper", slack=slack,
        max_violation=max(0.0, -worst), tolerance=float(tol),
        kappa=kappa, passed=worst >= -tol)


@dataclass(frozen=True)
class TripleReport:
    """lambda_v with certified two-sided enclosure from the eigenvector."""

    lambda_v: float
    certified_lower: float
    certified_upper: float
    lower: TestPairCertificate
    upper: TestPairCertificate
    eigen: EigenReport

    @property
    def consistent(self) -> bool:
        gap = self.certified_upper - self.certified_lower
        budget = 100.0 * max(self.eigen.residual, 1e-15)
        return (self.lower.passed and self.upper.passed
                and self.certified_lower <= self.lambda_v <= self.certified_upper
                and gap <= budget)


def lambda_triple_consistency(op: AssembledOperator, tol: float = 1e-11) -> TripleReport:
    """Check that the three principal-eigenvalue characterizations agree.

    lambda_v comes from the eigensolve; the generalized values are enclosed
    by running the eigenvector as a test pair at lambda_v -+ 10*residual.
    All three coincide within 100*residual on cooperative instances.
    """
    eigen = principal_eigenpair(op, tol=tol)
    res = max(eigen.residual, 1e-14 * (1.0 + abs(eigen.lambda_p)))
    lo = eigen.lambda_p - 10.0 * res
    hi = eigen.lambda_p + 10.0 * res
    lower = verify_test_pair_lower(op, lo, eigen.eigenvector, tol=10.0 * res)
    upper = verify_test_pair_upper(op, hi, eigen.eigenvector, tol=10.0 * res)
    return TripleReport(lambda_v=eigen.lambda_p, certified_lower=lo,
                        certified_upper=hi, lower=lower, upper=upper, eigen=eigen)


@dataclass(frozen=True)
class InversePositivityReport:
    """Resolvent-column nonnegativity: the discrete maximum principle."""

    lambda_p: float
    columns: tuple[int, ...]
    min_entry: float
    per_column_min: tuple[float, ...]
    passed: bool


def inverse_positivity_check(op: AssembledOperator, samples: int = 8,
                             threshold: float = 1e-10) -> InversePositivityReport:
    """Check that (-K)^(-1) maps nonnegative data to nonnegative solutions.

    Applicable only when lambda_p > 1e-8, so -K is symmetric positive
    definite. Solves (-K) X = e_j by Gaussian elimination with partial
    pivoting (one LU factorization, one triangular solve per column) for
    evenly spaced unit right-hand sides. Columns of the resolvent dominate
    every nonnegative right-hand side by linearity, so nonnegative columns
    certify the full maximum principle at O(samples * n^2) extra cost.
    """
    eigen = principal_eigenpair(op)
    if eigen.lambda_p <= 1e-8:
        raise InapplicableError(
            f"maximum principle hypotheses unmet: lambda_p = {eigen.lambda_p:.3e} <= 1e-8")
    a = -op.matrix
    lu = lu_factor(a)
    size = op.size
    cols = np.unique(np.round(np.linspace(0, size - 1, samples)).astype(int))
    mins = []
    for j in cols:
        e = np.zeros(size)
        e[j] = 1.0
        x = lu_solve(lu, e)
        mins.append(float(np.min(x)))
    min_entry = min(mins)
    return InversePositivityReport(
        lambda_p=eigen.lambda_p,
        columns=tuple(int(c) for c in cols),
        min_entry=min_entry,
        per_column_min=tuple(mins),
        passed=min_entry >= -threshold)
