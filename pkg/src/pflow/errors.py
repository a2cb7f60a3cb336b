"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own class;
anything else raises ValueError/TypeError as usual.
"""


class PflowError(Exception):
    """Base class for package-specific failures."""


class NonZeroMeanSource(PflowError):
    """Elliptic source has a nonzero mean on a periodic grid (incompatible)."""


class NoConvergence(PflowError):
    """Iterative solver exhausted its budget.

    Carries the iteration count and the final residual so the caller can
    decide whether to retry with a larger regularization.
    """

    def __init__(self, iterations, residual, message=""):
        self.iterations = int(iterations)
        self.residual = float(residual)
        text = message or "no convergence after %d iterations (residual %.3e)" % (
            self.iterations,
            self.residual,
        )
        super().__init__(text)


class CflViolation(PflowError):
    """Advective Courant number exceeds the scheme's stability bound."""


class DtTooLarge(PflowError):
    """Requested time step exceeds an explicit diffusion stability cap."""


class CurveNotClosed(PflowError):
    """Line-integral operation requires a closed tracer curve."""


class InvalidRegime(PflowError):
    """Parameter combination leaves the validity region of a formula."""


class DegenerateVelocity(PflowError):
    """Pointwise tensor map is requested where the velocity vanishes everywhere."""


class InsufficientSeries(PflowError):
    """Time series is too short for the requested stencil or shift."""


class ParseError(PflowError):
    """Config text could not be parsed. Carries the 1-based line number."""

    def __init__(self, line, message):
        self.line = int(line)
        super().__init__("line %d: %s" % (self.line, message))


class ValidationError(PflowError):
    """Config parsed but a value violates a constraint. Carries the key."""

    def __init__(self, key, constraint):
        self.key = key
        self.constraint = constraint
        super().__init__("%s: %s" % (key, constraint))


class BadMagic(PflowError):
    """Snapshot file does not start with the expected magic bytes."""


class UnsupportedVersion(PflowError):
    """Snapshot file has an unknown format version."""


class TruncatedFile(PflowError):
    """Snapshot file is shorter than its header promises."""


class ShapeMismatch(PflowError):
    """Snapshot payload disagrees with the target grid shape."""
