"""Numerics for degree-2 harmonic maps from the plane to the sphere.

Rational maps and their stereographic lifts, adaptive quadrature on the
plane, the ten kernel fields of the degree-2 family and their Gram matrix,
large-r asymptotic oracles, the non-uniform stability counterexample and a
Gauss-Newton projector onto the family.
"""

__version__ = "0.1.0"

from .errors import HarmstabError, NotConverged, ToleranceNotMet  # noqa: E402,F401
from .rational_maps import ComplexPoly, Moebius, RationalMap  # noqa: E402,F401
