"""Dispersal kernels: presets, validation, scalings, moments.

A kernel must be nonnegative, even, continuous (up to the documented
half-value convention at jump points), have unit mass and a positive value
at the origin. Kernels carry a finite ``support_radius``: values vanish for
|z| > support_radius. Presets with unbounded analytic support (the truncated
Gaussian) must declare a cutoff whose neglected tail mass is <= 1e-12.

All kernels are immutable; evaluation is pure and vectorized over sample
batches, so validation quadrature may be sharded freely as long as the final
reduction runs in a fixed order (numpy sums do).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from nls.errors import InvalidParameterError, MissingCutoffError, PreconditionError

# Radius of the mollifier used by the smoothed trapezoid preset.
MOLLIFIER_RADIUS = 0.01


@dataclass(frozen=True)
class Kernel:
    """Dispersal kernel with precomputed metadata.

    profile maps displacement arrays of shape (..., dim) to values (...,),
    per unit volume. mass and second_moment are the declared values the
    validator checks by quadrature.
    """

    name: str
    dim: int
    profile: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    sup_norm: float
    mass: float = 1.0
    second_moment: float = float("nan")

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.dim == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        return self.profile(z)


@dataclass(frozen=True)
class KernelReport:
    """Measured kernel diagnostics with per-check verdicts."""

    kernel_name: str
    mass: float
    mass_ok: bool
    min_sample: float
    nonnegative: bool
    symmetry_defect: float
    symmetric: bool
    value_at_zero: float
    positive_at_zero: bool

    @property
    def passed(self) -> bool:
        return self.mass_ok and self.nonnegative and self.symmetric and self.positive_at_zero


def _quad_points(dim: int, radius: float, resolution: int):
    """Midpoint nodes and cell volume on [-radius, radius]^dim."""
    h = 2.0 * radius / resolution
    axis = -radius + (np.arange(resolution) + 0.5) * h
    if dim == 1:
        return axis[:, None], h
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()]), h * h


def _require_finite_support(kernel: Kernel):
    if not math.isfinite(kernel.support_radius):
        raise MissingCutoffError(
            f"kernel {kernel.name!r} has unbounded support and no cutoff")


def kernel_mass(kernel: Kernel, quad_resolution: int = 1024) -> float:
    _require_finite_support(kernel)
    pts, vol = _quad_points(kernel.dim, kernel.support_radius, quad_resolution)
    return float(np.sum(kernel.profile(pts)) * vol)


def validate_kernel(kernel: Kernel, quad_resolution: int = 256, tol: float = 1e-3) -> KernelReport:
    """Check condition (J): nonnegativity, evenness, unit mass, J(0) > 0.

    Failures are reported, not raised.
    """
    if quad_resolution < 64:
        raise PreconditionError("quad_resolution must be at least 64")
    _require_finite_support(kernel)
    pts, vol = _quad_points(kernel.dim, kernel.support_radius, quad_resolution)
    vals = kernel.profile(pts)
    mass = float(np.sum(vals) * vol)
    min_sample = float(np.min(vals))
    symmetry_defect = float(np.max(np.abs(vals - kernel.profile(-pts))))
    z0 = np.zeros((1, kernel.dim))
    value_at_zero = float(kernel.profile(z0)[0])
    return KernelReport(
        kernel_name=kernel.name,
        mass=mass,
        mass_ok=abs(mass - 1.0) <= tol,
        min_sample=min_sample,
        nonnegative=min_sample >= -1e-14,
        symmetry_defect=symmetry_defect,
        symmetric=symmetry_defect <= tol,
        value_at_zero=value_at_zero,
        positive_at_zero=value_at_zero > 0.0,
    )


def second_moment(kernel: Kernel, quad_resolution: int = 4096):
    """Quadrature of integral J(z) |z|^2 dz over the kernel support.

    Returns (value, error_estimate); the estimate is the Richardson
    difference between the requested resolution and its half.
    """
    _require_finite_support(kernel)

    def at(res):
        pts, vol = _quad_points(kernel.dim, kernel.support_radius, res)
        r2 = np.sum(pts * pts, axis=-1)
        return float(np.sum(kernel.profile(pts) * r2) * vol)

    coarse = at(quad_resolution // 2)
    fine = at(quad_resolution)
    return fine, abs(fine - coarse) / 3.0


def scale_kernel(kernel: Kernel, sigma: float) -> Kernel:
    """The rescaled kernel J_sigma(z) = sigma^(-dim) J(z / sigma).

    Mass is preserved; the sup norm scales by sigma^(-dim), the support
    radius by sigma and the second moment by sigma^2.
    """
    sigma = float(sigma)
    if not sigma > 0.0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if sigma == 1.0:
        return kernel
    base = kernel.profile
    dim = kernel.dim
    amp = sigma ** (-dim)

    def profile(z, _base=base, _s=sigma, _a=amp):
        return _a * _base(np.asarray(z, dtype=float) / _s)

    return replace(
        kernel,
        name=f"{kernel.name}@sigma={sigma:g}",
        profile=profile,
        support_radius=kernel.support_radius * sigma,
        sup_norm=kernel.sup_norm * amp,
        second_moment=kernel.second_moment * sigma * sigma,
    )


def _with_measured_moment(kernel: Kernel) -> Kernel:
    resolution = 4096 if kernel.dim == 1 else 1024
    d2, _ = second_moment(kernel, resolution)
    return replace(kernel, second_moment=d2)


def _axis_factor(u: np.ndarray, half_width: float) -> np.ndarray:
    # indicator with value 1/2 exactly on the jump: the a.e.-equivalent even
    # representative that keeps lattice-aligned midpoint row sums exact.
    a = np.abs(u)
    return np.where(a < half_width, 1.0, np.where(a == half_width, 0.5, 0.0))


def uniform_kernel(dim: int = 1) -> Kernel:
    """Constant kernel on the unit-mass box [-1/2, 1/2]^dim."""

    def profile(z):
        z = np.asarray(z, dtype=float)
        out = _axis_factor(z[..., 0], 0.5)
        for k in range(1, dim):
            out = out * _axis_factor(z[..., k], 0.5)
        return out

    k = Kernel(
        name="uniform",
        dim=dim,
        profile=profile,
        support_radius=0.5 * math.sqrt(dim),
        sup_norm=1.0,
    )
    return _with_measured_moment(k)


def triangle_kernel(dim: int = 1) -> Kernel:
    """Tensor-product hat kernel (1 - |z_k|)_+ per axis; unit mass."""

    def profile(z):
        z = np.asarray(z, dtype=float)
        out = np.clip(1.0 - np.abs(z[..., 0]), 0.0, None)
        for k in range(1, dim):
            out = out * np.clip(1.0 - np.abs(z[..., k]), 0.0, None)
        return out

    k = Kernel(
        name="triangle",
        dim=dim,
        profile=profile,
        support_radius=math.sqrt(dim),
        sup_norm=1.0,
    )
    return _with_measured_moment(k)


def trapezoid_kernel(c: float) -> Kernel:
    """Plateau kernel for the counterexample system (1D).

    Value c on |z| <= 0.2, then linear to zero at W = 1/c - 0.2, which makes
    the mass exactly c*(W + 0.2) = 1. Requires 1 < c < 2.5 so that the ramp
    is nonempty (W > 0.2). On [-1/5, 1/5] the kernel is identically c, hence
    |J - 1| = c - 1 there.
    """
    c = float(c)
    if not c > 1.0:
        raise InvalidParameterError(f"plateau height must exceed 1, got {c}")
    w = 1.0 / c - 0.2
    if not w > 0.2:
        raise InvalidParameterError(
            f"plateau height {c} leaves no ramp (W = {w:.4f} <= 0.2)")

    def profile(z, _c=c, _w=w):
        a = np.abs(np.asarray(z, dtype=float)[..., 0])
        ramp = _c * (_w - a) / (_w - 0.2)
        return np.where(a <= 0.2, _c, np.clip(ramp, 0.0, None))

    k = Kernel(
        name=f"trapezoid({c:g})",
        dim=1,
        profile=profile,
        support_radius=w,
        sup_norm=c,
    )
    return _with_measured_moment(k)


def _bump_weights(radius: float, points: int = 64):
    """Midpoint discretization of the C^inf bump on [-radius, radius].

    Weights are normalized to sum to one against the same midpoint rule, so
    the discrete convolution preserves mass exactly.
    """
    h = 2.0 * radius / points
    t = -radius + (np.arange(points) + 0.5) * h
    u = t / radius
    w = np.exp(-1.0 / (1.0 - u * u))
    return t, w / np.sum(w)


def mollified_trapezoid_kernel(c: float, points: int = 64) -> Kernel:
    """Trapezoid kernel convolved with a C^inf bump of radius 0.01 (1D).

    Witnesses the smooth kernel class of the counterexample; mass is
    preserved by the normalized discrete mollifier.
    """
    base = trapezoid_kernel(c)
    t, w = _bump_weights(MOLLIFIER_RADIUS, points)

    def profile(z, _base=base.profile, _t=t, _w=w):
        z = np.asarray(z, dtype=float)
        shifted = z[..., 0][..., None] - _t  # (..., points)
        return np.sum(_base(shifted[..., None]) * _w, axis=-1)

    k = Kernel(
        name=f"mollified_trapezoid({c:g})",
        dim=1,
        profile=profile,
        support_radius=base.support_radius + MOLLIFIER_RADIUS,
        sup_norm=float(c),
    )
    return _with_measured_moment(k)


def gauss_cutoff_kernel(s: float, radius: float, dim: int = 1) -> Kernel:
    """Gaussian of width s truncated at |z| = radius.

    The neglected tail mass must not exceed 1e-12; otherwise the cutoff is
    rejected, since condition (J) requires unit mass and assembly needs
    finite support.
    """
    s = float(s)
    radius = float(radius)
    if s <= 0.0 or radius <= 0.0:
        raise InvalidParameterError("gauss_cutoff needs s > 0 and radius > 0")
    if dim == 1:
        tail = math.erfc(radius / (s * math.sqrt(2.0)))
    else:
        tail = math.exp(-radius * radius / (2.0 * s * s))
    if tail > 1e-12:
        raise MissingCutoffError(
            f"cutoff radius {radius} leaves tail mass {tail:.2e} > 1e-12")
    norm = (2.0 * math.pi * s * s) ** (-dim / 2.0)

    def profile(z, _n=norm, _s=s, _r=radius):
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)
        return np.where(r2 <= _r * _r, _n * np.exp(-r2 / (2.0 * _s * _s)), 0.0)

    k = Kernel(
        name=f"gauss_cutoff({s:g},{radius:g})",
        dim=dim,
        profile=profile,
        support_radius=radius,
        sup_norm=norm,
    )
    return _with_measured_moment(k)


#: Preset constructors addressable from CLI configs, with argument names.
KERNEL_PRESETS = {
    "uniform": (uniform_kernel, ()),
    "triangle": (triangle_kernel, ()),
    "trapezoid": (trapezoid_kernel, ("c",)),
    "mollified_trapezoid": (mollified_trapezoid_kernel, ("c",)),
    "gauss_cutoff": (gauss_cutoff_kernel, ("s", "R")),
}


def kernel_from_name(text: str, dim: int = 1) -> Kernel:
    """Build a preset kernel from its config name, e.g. ``trapezoid(1.05)``.

    An optional ``@sigma`` suffix pre-scales the preset, e.g.
    ``triangle@3`` builds scale_kernel(triangle, 3).
    """
    text = text.strip()
    sigma = 1.0
    if "@" in text:
        text, sig_text = text.rsplit("@", 1)
        sigma = float(sig_text)
    if "(" in text:
        if not text.endswith(")"):
            raise InvalidParameterError(f"malformed kernel name {text!r}")
        name, arg_text = text[:-1].split("(", 1)
        args = [float(a) for a in arg_text.split(",") if a.strip()]
    else:
        name, args = text, []
    name = name.strip()
    if name not in KERNEL_PRESETS:
        raise InvalidParameterError(f"unknown kernel preset {name!r}")
    ctor, params = KERNEL_PRESETS[name]
    if name in ("uniform", "triangle"):
        kernel = ctor(dim)
    else:
        if len(args) != len(params):
            raise InvalidParameterError(
                f"kernel {name!r} expects parameters {params}, got {args}")
        if name == "gauss_cutoff":
            kernel = ctor(*args, dim=dim)
        else:
            kernel = ctor(*args)
    return scale_kernel(kernel, sigma)
