"""Cyclic Jacobi eigensolver for dense symmetric matrices.

Used in two places: the pointwise coupling matrices A(x) (tiny, N <= 8) and
the full-spectrum oracle for assembled operators (size <= 600). Rotations
sweep the strict upper triangle row by row in a fixed order, so the result
is deterministic across runs.
"""

from __future__ import annotations

import numpy as np

from nls.errors import AsymmetryError, ConvergenceError


def offdiag_frobenius(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.sqrt(np.sum(a[mask] ** 2)))


def jacobi_eigh(a: np.ndarray, off_tol: float = 1e-12, max_sweeps: int = 60,
                symmetry_tol: float = 1e-12):
    """All eigenvalues and eigenvectors of a symmetric matrix.

    Returns (values, vectors) with values in descending order and vectors as
    columns aligned with values. Iterates cyclic sweeps until the off-diagonal
    Frobenius norm drops below ``off_tol`` (absolute), or below the floating
    floor ~eps*||A||_F when the matrix norm makes the absolute target
    unreachable.
    """
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    if a.shape != (m, m):
        raise AsymmetryError("matrix must be square")
    defect = float(np.max(np.abs(a - a.T))) if m else 0.0
    scale = float(np.max(np.abs(a))) if m else 0.0
    if defect > symmetry_tol * max(1.0, scale):
        raise AsymmetryError(f"symmetry defect {defect:.3e} exceeds budget")
    if m == 1:
        return a.copy().reshape(1), np.ones((1, 1))

    w = 0.5 * (a + a.T)  # exact symmetrization of representable defect
    v = np.eye(m)
    norm_f = float(np.linalg.norm(w))
    floor = 64.0 * np.finfo(float).eps * max(1.0, norm_f)
    target = max(off_tol, floor)
    skip = target / (4.0 * m)

    for _ in range(max_sweeps):
        off = offdiag_frobenius(w)
        if off <= target:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = w[p, q]
                if abs(apq) <= skip:
                    continue
                theta = 0.5 * (w[q, q] - w[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = w[p, p], w[q, q]
                rowp = w[p, :].copy()
                rowq = w[q, :].copy()
                w[p, :] = c * rowp - s * rowq
                w[q, :] = s * rowp + c * rowq
                w[:, p] = w[p, :]
                w[:, q] = w[q, :]
                w[p, p] = app - t * apq
                w[q, q] = aqq + t * apq
                w[p, q] = 0.0
                w[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = offdiag_frobenius(w)
        if off > 1e-8 * max(1.0, norm_f):
            raise ConvergenceError(
                f"Jacobi sweeps did not converge (off-diagonal {off:.3e})")

    vals = np.diag(w).copy()
    order = np.argsort(vals)[::-1]
    return vals[order], v[:, order]
