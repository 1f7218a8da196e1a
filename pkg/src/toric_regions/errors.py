"""Exception types shared across the package."""


class ToricRegionsError(Exception):
    """Base class for all package-specific errors."""


class ZeroGenerator(ToricRegionsError):
    """(p, q) = (0, 0) does not define a line."""


class NonPositiveDelta(ToricRegionsError):
    """The inclusion radius delta must be strictly positive."""


class ParallelGenerators(ToricRegionsError):
    """Two generators define the same line through the origin."""


class AmbiguousClassification(ToricRegionsError):
    """Point sits within tolerance of a strip boundary; use the brute force."""


class NotASubfan(ToricRegionsError):
    """Sub-fan generators are not a subset of the fan's generators."""


class NoCrossing(ToricRegionsError):
    """A ray does not cross the requested boundary curve inside the positive quadrant."""


class ConstructionFailed(ToricRegionsError):
    """A polyline step could not be completed (delta too small for this fan)."""

    def __init__(self, step: str, reason: str):
        super().__init__(f"{step}: {reason}")
        self.step = step
        self.reason = reason


class ArcsDontMeet(ToricRegionsError):
    """Closing arcs do not meet between their terminals (delta too small)."""


class DeltaTooSmall(ToricRegionsError):
    """Construction or its validation battery failed at this delta."""

    def __init__(self, check: str, detail: str = ""):
        super().__init__(f"{check}" + (f": {detail}" if detail else ""))
        self.check = check
        self.detail = detail


class UnsupportedFan(ToricRegionsError):
    """Fan violates the slope-class assumption and matches no special case."""


class OutOfBand(ToricRegionsError):
    """Point does not lie in the queried band of nested convex regions."""


class MonomialOverflow(ToricRegionsError):
    """A monomial exponent exceeded the configured log-magnitude cap."""


class NegativeStoichiometry(ToricRegionsError):
    """Reaction vertex encoding rejected for a negative-exponent complex."""


class StepCollapse(ToricRegionsError):
    """Integrator step fell below the minimum without passing validation."""


class WitnessFailed(ToricRegionsError):
    """A reachability witness leg failed velocity validation."""

    def __init__(self, leg: str, detail: str = ""):
        super().__init__(f"{leg}" + (f": {detail}" if detail else ""))
        self.leg = leg
        self.detail = detail
