"""Dense assembly of the discrete nonlocal operators.

The block matrix realizes

    K = D (M - I) + A        (dispersal-rate form), or
    K = sigma^(-m) (M_sigma - I) + A   (dispersal-range form),

species-major: row/column index i*n + p addresses species i at node p.
Off-diagonal species blocks are diagonal matrices (pointwise coupling), and
midpoint quadrature with one constant weight keeps every block exactly
symmetric. Storage is dense: desk-scale kernels have wide support, so
fill-in is near total; n is capped at 4096 nodes per species.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from nls.errors import (
    CapacityError,
    InvalidResolutionError,
    PreconditionError,
    ShapeMismatchError,
)
from nls.fields import MatrixField
from nls.grids import Grid
from nls.kernels import Kernel, scale_kernel

MAX_NODES_PER_SPECIES = 4096
RESOLUTION_FACTOR = 8  # kernel support must span >= this many cells


@dataclass(frozen=True)
class BlockVector:
    """N species components over n nodes with the weighted E inner product.

    values has shape (N, n); the squared E-norm is weight * sum(values^2).
    """

    values: np.ndarray
    weight: float

    @property
    def n_species(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]

    def e_dot(self, other: "BlockVector") -> float:
        return float(self.weight * np.sum(self.values * other.values))

    def e_norm(self) -> float:
        return math.sqrt(self.weight * float(np.sum(self.values ** 2)))

    def normalized(self) -> "BlockVector":
        nrm = self.e_norm()
        if nrm == 0.0:
            raise PreconditionError("cannot normalize the zero vector")
        return BlockVector(self.values / nrm, self.weight)

    def sign_fixed(self) -> "BlockVector":
        flat = self.values.ravel()
        k = int(np.argmax(np.abs(flat)))
        if flat[k] < 0:
            return BlockVector(-self.values, self.weight)
        return self

    def min_entry(self) -> float:
        return float(np.min(self.values))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @staticmethod
    def from_flat(flat: np.ndarray, n_species: int, weight: float) -> "BlockVector":
        return BlockVector(np.asarray(flat, dtype=float).reshape(n_species, -1), weight)


@dataclass(frozen=True)
class AssembledOperator:
    """Dense symmetric realization of K with its quadrature metadata.

    mass[i] holds the per-species row sums k_i(x_p) of the convolution
    matrices (the quadrature of integral J_i(x-y) dy over the domain).
    Immutable; apply() is safe for concurrent readers.
    """

    matrix: np.ndarray
    grid: Grid
    kernels: tuple[Kernel, ...]
    field: MatrixField
    rates: np.ndarray
    mass: np.ndarray
    scaling: Optional[tuple[float, float]] = None  # (sigma, m)

    @property
    def n_species(self) -> int:
        return len(self.kernels)

    @property
    def n_nodes(self) -> int:
        return self.grid.n_nodes

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def weight(self) -> float:
        return self.grid.weight

    def sup_row_sum(self) -> float:
        return float(np.max(np.sum(np.abs(self.matrix), axis=1)))

    def apply(self, phi: BlockVector) -> BlockVector:
        return apply(self, phi)

    def block_vector(self, values) -> BlockVector:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_species, self.n_nodes):
            raise ShapeMismatchError(
                f"expected shape {(self.n_species, self.n_nodes)}, got {values.shape}")
        return BlockVector(values, self.grid.weight)

    def ones(self) -> BlockVector:
        return BlockVector(np.ones((self.n_species, self.n_nodes)), self.grid.weight)


def assemble_convolution(kernel: Kernel, grid: Grid) -> np.ndarray:
    """M[p, q] = weight * J(x_p - x_q).

    The kernel is evaluated on the upper triangle only and mirrored, so the
    result is symmetric bit for bit regardless of the profile's rounding.
    """
    if kernel.dim != grid.dim:
        raise ShapeMismatchError(
            f"kernel dimension {kernel.dim} != grid dimension {grid.dim}")
    diff = grid.nodes[:, None, :] - grid.nodes[None, :, :]
    m = grid.weight * kernel.profile(diff)
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def mass_function(kernel: Kernel, grid: Grid) -> np.ndarray:
    """k(x_p) = row sums of the convolution matrix; the boundary mass deficit
    1 - k(x) near the edge of the domain enters several certified bounds."""
    return np.sum(assemble_convolution(kernel, grid), axis=1)


def _check_shapes(kernels: Sequence[Kernel], field: MatrixField, rates: np.ndarray):
    n_species = len(kernels)
    if field.n_species != n_species:
        raise ShapeMismatchError(
            f"field has {field.n_species} species, kernels give {n_species}")
    if rates.shape != (n_species,):
        raise ShapeMismatchError(
            f"rates must have shape ({n_species},), got {rates.shape}")


def _check_capacity(grid: Grid):
    if grid.n_nodes > MAX_NODES_PER_SPECIES:
        raise CapacityError(
            f"{grid.n_nodes} nodes per species exceeds the dense cap "
            f"{MAX_NODES_PER_SPECIES}")


def _field_diagonals(field: MatrixField, grid: Grid) -> np.ndarray:
    return field.matrices(grid)  # (n, N, N)


def _assemble_blocks(diag_blocks, coupling, grid):
    """Fill the species-major dense matrix from per-species diagonal blocks
    and the pointwise coupling diagonals."""
    n = grid.n_nodes
    n_species = len(diag_blocks)
    size = n_species * n
    k = np.zeros((size, size))
    for i in range(n_species):
        k[i * n:(i + 1) * n, i * n:(i + 1) * n] = diag_blocks[i]
    for i in range(n_species):
        for j in range(n_species):
            if i == j:
                continue
            idx = np.arange(n)
            k[i * n + idx, j * n + idx] = coupling[:, i, j]
    return k


def assemble_K(rates, kernels: Sequence[Kernel], field: MatrixField,
               grid: Grid) -> AssembledOperator:
    """Assemble K = D (M - I) + A on the grid.

    Requires a cooperative field (positive off-diagonal coupling on every
    node) and nonnegative rates; d_i = 0 is admitted so the multiplication
    operator limit D -> 0 is available as an exact reference.
    """
    kernels = tuple(kernels)
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    _check_shapes(kernels, field, rates)
    _check_capacity(grid)
    if np.any(rates < 0.0):
        raise PreconditionError(f"dispersal rates must be nonnegative: {rates}")
    if not field.is_cooperative(grid):
        raise PreconditionError(
            f"field {field.name!r} is not cooperative on this grid")

    coupling = _field_diagonals(field, grid)
    n = grid.n_nodes
    mass = np.empty((len(kernels), n))
    diag_blocks = []
    for i, kernel in enumerate(kernels):
        m = assemble_convolution(kernel, grid)
        mass[i] = np.sum(m, axis=1)
        block = rates[i] * (m - np.eye(n))
        block[np.arange(n), np.arange(n)] += coupling[:, i, i]
        diag_blocks.append(block)
    matrix = _assemble_blocks(diag_blocks, coupling, grid)
    matrix.setflags(write=False)
    return AssembledOperator(matrix=matrix, grid=grid, kernels=kernels,
                             field=field, rates=rates, mass=mass)


def required_counts(sigma: float, kernels: Sequence[Kernel], grid: Grid):
    """Minimum per-axis counts for the under-resolution guard."""
    support = min(k.support_radius for k in kernels)
    return tuple(
        max(2, math.ceil((b - a) * RESOLUTION_FACTOR / (sigma * support)))
        for a, b in zip(grid.box.lo, grid.box.hi))


def assemble_K_sigma_m(sigma: float, m: float, kernels: Sequence[Kernel],
                       field: MatrixField, grid: Grid) -> AssembledOperator:
    """Assemble K_{sigma,m} + A = sigma^(-m) (M_sigma - I) + A.

    M_sigma uses the rescaled kernels J_{sigma,i}; the grid must resolve the
    scaled support with at least 8 cells, otherwise small-sigma sweeps would
    silently aggregate the kernel into too few samples.
    """
    kernels = tuple(kernels)
    sigma = float(sigma)
    m = float(m)
    if sigma <= 0.0:
        raise PreconditionError(f"sigma must be positive, got {sigma}")
    if not (0.0 <= m <= 2.0):
        raise PreconditionError(f"m must lie in [0, 2], got {m}")
    rates = np.full(len(kernels), sigma ** (-m))
    _check_shapes(kernels, field, rates)
    _check_capacity(grid)
    if not field.is_cooperative(grid):
        raise PreconditionError(
            f"field {field.name!r} is not cooperative on this grid")

    spacings = grid.spacings
    for kernel in kernels:
        limit = sigma * kernel.support_radius / RESOLUTION_FACTOR
        if any(h > limit for h in spacings):
            raise InvalidResolutionError(
                f"grid spacing {max(spacings):.4g} under-resolves kernel "
                f"{kernel.name!r} at sigma={sigma:g} (need <= {limit:.4g})",
                required_counts=required_counts(sigma, kernels, grid))

    coupling = _field_diagonals(field, grid)
    n = grid.n_nodes
    amp = sigma ** (-m)
    mass = np.empty((len(kernels), n))
    diag_blocks = []
    for i, kernel in enumerate(kernels):
        m_sigma = assemble_convolution(scale_kernel(kernel, sigma), grid)
        mass[i] = np.sum(m_sigma, axis=1)
        block = amp * (m_sigma - np.eye(n))
        block[np.arange(n), np.arange(n)] += coupling[:, i, i]
        diag_blocks.append(block)
    matrix = _assemble_blocks(diag_blocks, coupling, grid)
    matrix.setflags(write=False)
    return AssembledOperator(matrix=matrix, grid=grid, kernels=kernels,
                             field=field, rates=rates, mass=mass,
                             scaling=(sigma, m))


def apply(op: AssembledOperator, phi: BlockVector) -> BlockVector:
    """Matrix-vector product in species-major layout (deterministic order)."""
    if phi.values.shape != (op.n_species, op.n_nodes):
        raise ShapeMismatchError(
            f"vector shape {phi.values.shape} does not match operator "
            f"{(op.n_species, op.n_nodes)}")
    out = op.matrix @ phi.flat()
    return BlockVector.from_flat(out, op.n_species, phi.weight)


def dump_matrix(op: AssembledOperator, path: str, binary: bool = False):
    """Write the assembled matrix for external inspection.

    Text format: '#'-prefixed header lines (size, layout), then one
    row per line, entries in row-major order (species-major blocks),
    17 significant digits. Binary format: numpy .npy.
    """
    if binary:
        np.save(path, op.matrix)
        return
    with open(path, "w") as fh:
        fh.write("# assembled operator, dense, row-major\n")
        fh.write(f"# species-major blocks: index = species * n_nodes + node\n")
        fh.write(f"# n_species={op.n_species} n_nodes={op.n_nodes} "
                 f"weight={op.weight!r}\n")
        for row in op.matrix:
            fh.write(" ".join(format(v, ".16e") for v in row))
            fh.write("\n")
