"""Coupling matrix fields A(x) and their pointwise Perron eigenstructure.

A field evaluates to a symmetric N x N matrix at each point. Cooperative
means all off-diagonal entries are strictly positive on the sampled nodes
(diagonal entries may have any sign; shifts by c*I occur throughout the
asymptotic arguments). A strict mode additionally requires positive
diagonals.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from nls.errors import (
    InvalidParameterError,
    PreconditionError,
    UnsupportedDimensionError,
)
from nls.grids import Box, Grid, build_grid
from nls.jacobi import jacobi_eigh

MAX_SPECIES = 8


@dataclass(frozen=True)
class MatrixField:
    """x -> A(x), symmetric N x N.

    eval takes a node (shape (dim,)) and returns an (N, N) array. Evaluation
    is pure; node-parallel use is safe.
    """

    name: str
    n_species: int
    eval: Callable[[np.ndarray], np.ndarray]

    def matrices(self, grid: Grid) -> np.ndarray:
        """A(x) at every grid node, shape (n, N, N), in node order."""
        n = grid.n_nodes
        out = np.empty((n, self.n_species, self.n_species))
        for p in range(n):
            out[p] = self.eval(grid.nodes[p])
        return out

    def is_cooperative(self, grid: Grid, strict: bool = False) -> bool:
        """Strict positivity of off-diagonal entries on all grid nodes.

        With strict=True the diagonal entries must be positive as well.
        """
        mats = self.matrices(grid)
        if self.n_species == 1:
            off_ok = True
        else:
            mask = ~np.eye(self.n_species, dtype=bool)
            off_ok = bool(np.all(mats[:, mask] > 0.0))
        if not strict:
            return off_ok
        diag = mats[:, np.arange(self.n_species), np.arange(self.n_species)]
        return off_ok and bool(np.all(diag > 0.0))

    def shifted(self, c: float) -> "MatrixField":
        """The field x -> A(x) + c*I."""
        base = self.eval
        eye = np.eye(self.n_species)

        def eval_shifted(x, _b=base, _c=float(c), _i=eye):
            return _b(x) + _c * _i

        return MatrixField(name=f"{self.name}+{c:g}I", n_species=self.n_species,
                           eval=eval_shifted)


@dataclass(frozen=True)
class PointSpectrum:
    """Full spectrum of A(x) at one node, eigenvalues descending."""

    x: np.ndarray
    eigenvalues: np.ndarray
    top_eigenvector: np.ndarray

    @property
    def lambda_bar(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class HypPReport:
    """Heuristic diagnostic of Hypothesis (P) on a 1D field.

    The hypothesis cannot be decided from finitely many samples; the verdict
    is three-valued and the raw evidence (exponent fit, divergence trend of
    the quadrature sums of 1/(nu - lambda_1)) is reported alongside.
    """

    x0: float
    nu: float
    exponent: float
    divergence_trend: tuple[float, ...]
    verdict: str  # holds | fails | inconclusive
    constant_field: bool


def _sign_fix(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    return -vec if vec[k] < 0 else vec


def eval_lambda_bar(field: MatrixField, x) -> PointSpectrum:
    """Pointwise spectrum of A(x) by cyclic Jacobi, top eigenvector sign-fixed.

    The largest eigenvalue is the Perron-Frobenius value lambda_bar(A(x))
    whenever the off-diagonal entries are nonnegative.
    """
    if field.n_species > MAX_SPECIES:
        raise PreconditionError(f"species count {field.n_species} exceeds {MAX_SPECIES}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = np.asarray(field.eval(x), dtype=float)
    vals, vecs = jacobi_eigh(a)
    return PointSpectrum(x=x, eigenvalues=vals, top_eigenvector=_sign_fix(vecs[:, 0]))


def sup_lambda_bar(field: MatrixField, grid: Grid):
    """(nu, x0, index): the maximum of lambda_bar(A(x)) over the grid nodes.

    Ties break toward the smallest node index.
    """
    best_val = -math.inf
    best_idx = 0
    lam = lambda_bar_on_grid(field, grid)
    best_idx = int(np.argmax(lam))  # argmax returns the first maximizer
    best_val = float(lam[best_idx])
    return best_val, grid.nodes[best_idx].copy(), best_idx


def lambda_bar_on_grid(field: MatrixField, grid: Grid) -> np.ndarray:
    """lambda_bar(A(x)) at every node."""
    out = np.empty(grid.n_nodes)
    for p in range(grid.n_nodes):
        a = np.asarray(field.eval(grid.nodes[p]), dtype=float)
        out[p] = jacobi_eigh(a)[0][0]
    return out


def eigenpair_field(field: MatrixField, grid: Grid):
    """Continuous selection (lambda_1(x_p), e(x_p)) along the grid.

    Each node's top eigenvector is sign-aligned with its predecessor
    (positive inner product) so the selection is continuous wherever the top
    eigenvalue stays simple; the bump builder consumes this.
    """
    n = grid.n_nodes
    lams = np.empty(n)
    vecs = np.empty((n, field.n_species))
    prev = None
    for p in range(n):
        a = np.asarray(field.eval(grid.nodes[p]), dtype=float)
        vals, v = jacobi_eigh(a)
        e = v[:, 0]
        if prev is None:
            e = _sign_fix(e)
        elif float(np.dot(e, prev)) < 0.0:
            e = -e
        lams[p] = vals[0]
        vecs[p] = e
        prev = e
    return lams, vecs


def hypothesis_P_diagnostic(field: MatrixField, grid: Grid, refinements: int = 3) -> HypPReport:
    """Probe Hypothesis (P2) by refining the quadrature of 1/(nu - lambda_1).

    Constant fields hold outright (Perron-Frobenius). Otherwise the verdict
    is driven by the growth of the partial sums w * sum 1/(nu - lambda_1)
    under grid doubling: unbounded-looking growth (>= 10% per refinement)
    reads as divergence (holds); a converged trend (<= 1% relative change at
    the last refinement) reads as an integrable singularity (fails);
    anything else is inconclusive. The exponent p of nu - lambda_1(x) ~
    c |x - x0|^p is fitted by least squares in log-log coordinates.
    """
    if grid.dim != 1:
        raise UnsupportedDimensionError("the diagnostic runs on 1D grids only")
    if refinements < 3:
        raise PreconditionError("need at least 3 refinement levels")

    levels = [build_grid(grid.box, (grid.counts[0] * 2 ** r,)) for r in range(refinements)]
    lams = [lambda_bar_on_grid(field, g) for g in levels]

    scale = max(1.0, max(float(np.max(np.abs(l))) for l in lams))
    spread = max(float(np.max(l) - np.min(l)) for l in lams)
    constant = spread <= 1e-12 * scale

    nu = max(float(np.max(l)) for l in lams)
    finest = levels[-1]
    idx0 = int(np.argmax(lams[-1]))
    x0 = float(finest.nodes[idx0, 0])

    trend = []
    for g, l in zip(levels, lams):
        gap = nu - l
        keep = gap > 1e-12
        trend.append(float(np.sum(g.weight / gap[keep])))

    # local exponent fit on the finest level
    gap = nu - lams[-1]
    dist = np.abs(finest.nodes[:, 0] - x0)
    keep = (gap > 1e-12) & (dist > 0)
    if np.count_nonzero(keep) >= 2:
        lx = np.log(dist[keep])
        ly = np.log(gap[keep])
        slope = np.polyfit(lx, ly, 1)[0]
        exponent = float(slope)
    else:
        exponent = float("nan")

    if constant:
        verdict = "holds"
    else:
        growth = [trend[r + 1] / trend[r] - 1.0 for r in range(len(trend) - 1)]
        if all(g >= 0.10 for g in growth):
            verdict = "holds"
        elif abs(growth[-1]) <= 0.01:
            verdict = "fails"
        else:
            verdict = "inconclusive"

    return HypPReport(x0=x0, nu=nu, exponent=exponent,
                      divergence_trend=tuple(trend), verdict=verdict,
                      constant_field=constant)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def constant_field(matrix) -> MatrixField:
    a = np.asarray(matrix, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError("constant field needs a square matrix")
    if np.max(np.abs(a - a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise InvalidParameterError("constant field matrix must be symmetric")
    a = 0.5 * (a + a.T)
    a.setflags(write=False)
    return MatrixField(name="constant", n_species=a.shape[0], eval=lambda x, _a=a: _a)


_COUNTEREXAMPLE_BLOCK = np.array([[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]])


def counterexample_field() -> MatrixField:
    """The two-species field (1 - sqrt(x)) * [[2/3, 1/3], [1/3, 2/3]].

    The coupling block has eigenvalues 1 and 1/3, so lambda_bar(A(x)) =
    1 - sqrt(x) with top eigenvector (1, 1)/sqrt(2): continuous but not
    Lipschitz at x = 0, the sharp failure mode for eigenfunction existence.
    """

    def eval_a(x):
        s = math.sqrt(max(float(x[0]), 0.0))
        return (1.0 - s) * _COUNTEREXAMPLE_BLOCK

    return MatrixField(name="counterexample_2sp", n_species=2, eval=eval_a)


def lipschitz_contrast_field() -> MatrixField:
    """Two-species contrast field (1 - x) * [[2/3, 1/3], [1/3, 2/3]].

    Same structure as the counterexample but with a Lipschitz eigenvalue
    branch, so Hypothesis (P) holds on (0, 1/5).
    """

    def eval_a(x):
        return (1.0 - float(x[0])) * _COUNTEREXAMPLE_BLOCK

    return MatrixField(name="contrast_2sp", n_species=2, eval=eval_a)


def smooth_bump_field(base_matrix, amplitude: float, center, width: float) -> MatrixField:
    """B + amplitude * exp(-|x - center|^2 / width^2) * I."""
    b = np.asarray(base_matrix, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InvalidParameterError("smooth_bump needs a square base matrix")
    b = 0.5 * (b + b.T)
    center = np.atleast_1d(np.asarray(center, dtype=float))
    width = float(width)
    if width <= 0:
        raise InvalidParameterError("bump width must be positive")
    eye = np.eye(b.shape[0])

    def eval_a(x, _b=b, _a=float(amplitude), _c=center, _w=width, _i=eye):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r2 = float(np.sum((x - _c) ** 2))
        return _b + _a * math.exp(-r2 / (_w * _w)) * _i

    return MatrixField(name="smooth_bump", n_species=b.shape[0], eval=eval_a)


# --- tiny expression language for N = 1 scalar coefficients ----------------

_ALLOWED_CALLS = {"sqrt": np.sqrt, "abs": np.abs}
_ALLOWED_BINOPS = {ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow}
_ALLOWED_UNARY = {ast.UAdd, ast.USub}


def _compile_expr(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile an arithmetic expression in x with sqrt and abs.

    Only numbers, the name x, +, -, *, /, ** and the two whitelisted calls
    are accepted; anything else is rejected at parse time.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise InvalidParameterError(f"cannot parse expression {text!r}: {exc}") from exc

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _ALLOWED_UNARY:
            check(node.operand)
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_CALLS
                    and len(node.args) == 1 and not node.keywords):
                raise InvalidParameterError(f"call not allowed in expression {text!r}")
            check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id != "x":
                raise InvalidParameterError(f"unknown name {node.id!r} in {text!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise InvalidParameterError(f"non-numeric constant in {text!r}")
        else:
            raise InvalidParameterError(f"disallowed syntax in expression {text!r}")

    check(tree)
    code = compile(tree, "<field-expression>", "eval")
    env = dict(_ALLOWED_CALLS)

    def fn(x, _code=code, _env=env):
        return eval(_code, {"__builtins__": {}}, {**_env, "x": x})  # noqa: S307

    return fn


def scalar_field(expression: str) -> MatrixField:
    """N = 1 field from an expression in x over {x, sqrt(x), abs(x), polynomials}."""
    fn = _compile_expr(expression)

    def eval_a(x, _f=fn):
        return np.array([[float(_f(float(np.atleast_1d(x)[0])))]])

    return MatrixField(name=f"scalar({expression})", n_species=1, eval=eval_a)


FIELD_PRESETS = ("constant", "counterexample_2sp", "contrast_2sp", "scalar", "smooth_bump")


def field_from_config(spec) -> MatrixField:
    """Build a field from its CLI configuration entry.

    Accepts either a preset name string such as ``"counterexample_2sp"`` or
    ``"scalar(1 - sqrt(x))"`` or an object form
    ``{"preset": "constant", "matrix": [[...]]}``.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if "(" in text:
            name, inner = text[:-1].split("(", 1) if text.endswith(")") else (None, None)
            if name is None:
                raise InvalidParameterError(f"malformed field name {spec!r}")
            name = name.strip()
            if name == "scalar":
                return scalar_field(inner)
            raise InvalidParameterError(
                f"preset {name!r} takes structured parameters; use the object form")
        if text == "counterexample_2sp":
            return counterexample_field()
        if text == "contrast_2sp":
            return lipschitz_contrast_field()
        raise InvalidParameterError(f"unknown field preset {spec!r}")
    preset = spec.get("preset")
    if preset == "constant":
        return constant_field(spec["matrix"])
    if preset == "scalar":
        return scalar_field(spec["expression"])
    if preset == "smooth_bump":
        return smooth_bump_field(spec["matrix"], spec["amplitude"],
                                 spec["center"], spec["width"])
    if preset == "counterexample_2sp":
        return counterexample_field()
    if preset == "contrast_2sp":
        return lipschitz_contrast_field()
    raise InvalidParameterError(f"unknown field preset {preset!r}")
