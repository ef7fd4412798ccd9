"""Exception types raised across the package."""


class HarmstabError(Exception):
    """Base class for all package errors."""


class ZeroNumerator(HarmstabError):
    pass


class DegenerateMoebius(HarmstabError):
    pass


class ReducibleMap(HarmstabError):
    pass


class PoleHit(HarmstabError):
    pass


class TangencyViolation(HarmstabError):
    pass


class AmplitudeTooLarge(HarmstabError):
    pass


class HypothesisViolated(HarmstabError):
    pass


class NonFiniteSample(HarmstabError):
    """An integrand returned inf/nan; ``node`` is the offending point."""

    def __init__(self, node, message=None):
        self.node = node
        super().__init__(message or f"non-finite integrand value at z={node!r}")


class ToleranceNotMet(HarmstabError):
    """Adaptive quadrature stopped before reaching its tolerance.

    The best available result is attached as ``result``.
    """

    def __init__(self, result, message=None):
        self.result = result
        super().__init__(message or f"tolerance not met (err_est={result.err_est!r})")


class IllConditioned(HarmstabError):
    pass


class NotConverged(HarmstabError):
    def __init__(self, result, message=None):
        self.result = result
        super().__init__(message or "projection did not converge")


class SingularModel(HarmstabError):
    pass
