"""Exception hierarchy shared by all modules."""


class NlsError(Exception):
    """Base class for errors raised by this package."""


class InvalidResolutionError(NlsError):
    """Grid too coarse for the requested object.

    Carries ``required_counts`` when a kernel's resolution guard computed
    the minimum admissible per-axis node counts.
    """

    def __init__(self, message, required_counts=None):
        super().__init__(message)
        self.required_counts = required_counts


class InvalidParameterError(NlsError):
    """A numeric parameter is outside its admissible range."""


class MissingCutoffError(NlsError):
    """Kernel has unbounded support and no adequate numeric cutoff."""


class AsymmetryError(NlsError):
    """A matrix that must be symmetric exceeds the symmetry defect budget."""


class ShapeMismatchError(NlsError):
    """Species counts or array shapes of the inputs do not agree."""


class UnsupportedDimensionError(NlsError):
    """Operation only defined in one spatial dimension."""


class CapacityError(NlsError):
    """Dense-solver size cap exceeded."""


class ConvergenceError(NlsError):
    """Iteration did not converge; carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class PreconditionError(NlsError):
    """An operation's documented precondition is violated."""


class InapplicableError(NlsError):
    """Hypotheses of the requested check are not met by the instance."""


class InvalidPotentialError(NlsError):
    """Scalar potential is positive somewhere; must satisfy a(x) <= 0."""


class BracketingError(NlsError):
    """Root bracketing failed; carries diagnostic values."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SetupError(NlsError):
    """Experiment inputs are inconsistent (grids, nesting, kernel closeness)."""
