"""Box domains and uniform midpoint-rule grids.

The midpoint rule with one constant weight per grid is used everywhere: a
constant weight keeps every assembled convolution matrix exactly symmetric,
which the discrete self-adjointness arguments rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nls.errors import InvalidParameterError, InvalidResolutionError, SetupError


@dataclass(frozen=True)
class Box:
    """Axis-aligned box domain in dimension 1 or 2.

    ``lo`` and ``hi`` are per-axis bounds in domain units.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise InvalidParameterError("lo and hi must have the same length")
        if len(lo) not in (1, 2):
            raise InvalidParameterError("only dimensions 1 and 2 are supported")
        for a, b in zip(lo, hi):
            if not (a < b):
                raise InvalidParameterError(f"empty axis: [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        v = 1.0
        for a, b in zip(self.lo, self.hi):
            v *= b - a
        return v

    def scaled(self, sigma: float) -> "Box":
        """The stretched box sigma*Omega."""
        return Box(tuple(sigma * a for a in self.lo), tuple(sigma * b for b in self.hi))

    def contains(self, box: "Box") -> bool:
        return all(a1 <= a2 and b2 <= b1 for a1, a2, b1, b2 in
                   zip(self.lo, box.lo, self.hi, box.hi))


def interval(lo: float, hi: float) -> Box:
    """1D box shorthand."""
    return Box((lo,), (hi,))


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid of cell midpoints over a box.

    nodes has shape (n, dim) in lexicographic order over axes; weight is the
    cell volume (product of spacings), the single quadrature weight.
    Immutable after construction; safe to share.
    """

    box: Box
    counts: tuple[int, ...]
    nodes: np.ndarray
    weight: float

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple((b - a) / c for a, b, c in zip(self.box.lo, self.box.hi, self.counts))

    def axis_nodes(self, k: int) -> np.ndarray:
        a, b = self.box.lo[k], self.box.hi[k]
        h = (b - a) / self.counts[k]
        return a + (np.arange(self.counts[k]) + 0.5) * h


def build_grid(box: Box, counts) -> Grid:
    """Midpoint grid with the given per-axis node counts.

    Node ordering is lexicographic over axes (axis 0 slowest), which makes
    every downstream reduction order deterministic.
    """
    if np.isscalar(counts):
        counts = (int(counts),)
    counts = tuple(int(c) for c in counts)
    if len(counts) != box.dim:
        raise InvalidParameterError("counts must give one entry per axis")
    if any(c < 2 for c in counts):
        raise InvalidResolutionError(f"need at least 2 nodes per axis, got {counts}")
    axes = []
    weight = 1.0
    for k, c in enumerate(counts):
        a, b = box.lo[k], box.hi[k]
        h = (b - a) / c
        axes.append(a + (np.arange(c) + 0.5) * h)
        weight *= h
    if box.dim == 1:
        nodes = axes[0][:, None]
    else:
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        nodes = np.column_stack([xx.ravel(), yy.ravel()])
    nodes.setflags(write=False)
    return Grid(box=box, counts=counts, nodes=nodes, weight=weight)


def subgrid_indices(outer: Grid, inner: Grid, tol: float = 1e-12) -> np.ndarray:
    """Indices mapping each node of ``inner`` to the coinciding node of ``outer``.

    Raises SetupError unless every inner node matches an outer node within
    ``tol`` (the node-subset precondition of the domain-monotonicity lemma).
    """
    if outer.dim != inner.dim:
        raise SetupError("grids have different dimensions")
    if abs(outer.weight - inner.weight) > tol * max(outer.weight, inner.weight):
        raise SetupError("grids have different cell volumes; nodes cannot be nested")
    idx = np.empty(inner.n_nodes, dtype=int)
    # nodes are lexicographically sorted, so a merge scan would do; sizes are
    # desk-scale so a direct distance check per node is fine and clearer.
    for i, x in enumerate(inner.nodes):
        d = np.max(np.abs(outer.nodes - x[None, :]), axis=1)
        j = int(np.argmin(d))
        if d[j] > tol:
            raise SetupError(
                f"inner node {x} is not a node of the outer grid (gap {d[j]:.3e})")
        idx[i] = j
    return idx
