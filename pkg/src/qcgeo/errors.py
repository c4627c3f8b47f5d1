"""Exception hierarchy shared across the package.

Every error raised by the library derives from :class:`QcgeoError`, so callers
can catch one base class at API boundaries (the CLI maps subfamilies to exit
codes).
"""

from __future__ import annotations


class QcgeoError(Exception):
    """Base class for all library errors."""


# --- expression / metric definition errors ---------------------------------

class ExprSyntaxError(QcgeoError):
    """Malformed source text; carries the character offset of the problem."""

    def __init__(self, position: int, message: str):
        super().__init__(f"syntax error at offset {position}: {message}")
        self.position = position
        self.message = message


class UnknownIdentifier(QcgeoError):
    def __init__(self, name: str, position: int = -1):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name
        self.position = position


class ArityError(QcgeoError):
    pass


class CompileError(QcgeoError):
    """Aggregates per-component errors raised while compiling a metric."""

    def __init__(self, failures: list[tuple[str, Exception]]):
        lines = [f"g[{key}]: {err}" for key, err in failures]
        super().__init__("metric compilation failed:\n  " + "\n  ".join(lines))
        self.failures = failures


# --- evaluation errors ------------------------------------------------------

class DomainError(QcgeoError):
    """Evaluation left the mathematical domain (log/sqrt of a negative,
    division by zero, point outside the chart box)."""


class DegenerateMetric(QcgeoError):
    def __init__(self, point, min_eig: float):
        super().__init__(
            f"metric not positive definite at {tuple(point)} "
            f"(smallest eigenvalue {min_eig:.3e})"
        )
        self.point = point
        self.min_eig = min_eig


class DegeneratePlane(QcgeoError):
    pass


# --- point analysis ---------------------------------------------------------

class NearIsotropic(QcgeoError):
    """H and N too close: quantities with (H-N) denominators are singular."""


class SignAlignmentFailure(QcgeoError):
    """The line field could not be coherently oriented over a stencil/step."""


class StencilClassificationChange(QcgeoError):
    """A finite-difference stencil straddles a classification change."""


# --- immersion construction -------------------------------------------------

class NonpositiveOperand(QcgeoError):
    """H + kappa <= 0: no codimension-one immersion data exists there."""


class InvalidMu(QcgeoError):
    pass


class NoCap(QcgeoError):
    """No hyperspherical cap exists for nonpositive boundary curvature."""


class FlatAmbient(QcgeoError):
    """Raised for kappa = 0 where a hyperbolic-ambient formula was requested;
    carries the elementary Euclidean value."""

    def __init__(self, euclidean_value: float):
        super().__init__(
            f"flat ambient (kappa=0): Euclidean branch value {euclidean_value!r}"
        )
        self.euclidean_value = euclidean_value


class InvalidLambda(QcgeoError):
    pass


class ProfileDomainError(QcgeoError):
    def __init__(self, r: float, message: str):
        super().__init__(f"profile not real at r={r!r}: {message}")
        self.r = r


class NotUnitNormal(QcgeoError):
    pass


class NotTangent(QcgeoError):
    pass


# --- leaf / flow tracing ----------------------------------------------------

class LeftQCRegion(QcgeoError):
    """A trace stepped onto a point that no longer classifies as QC."""

    def __init__(self, point, step_index: int, partial=None):
        super().__init__(
            f"left the QC region at step {step_index}, point {tuple(point)}"
        )
        self.point = point
        self.step_index = step_index
        self.partial = partial


class StepTooLarge(QcgeoError):
    pass


# --- catalog ----------------------------------------------------------------

class UnknownCatalogName(QcgeoError):
    pass


class BadParams(QcgeoError):
    pass


class BadDelta(QcgeoError):
    pass


class JunctionMismatch(QcgeoError):
    pass


class NonpositiveWarp(QcgeoError):
    pass
