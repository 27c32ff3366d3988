"""Exception hierarchy.

Every error raised by the library derives from ``ShapeconeError``.  The CLI
maps ``TooLarge`` to exit status 3, ``InvariantViolation`` to 4 and
everything else to 2.
"""


class ShapeconeError(Exception):
    """Base class for all library errors."""

    code = "error"

    def record(self) -> dict:
        return {"error": self.code, "message": str(self)}


def _make(name: str, code: str, doc: str):
    cls = type(name, (ShapeconeError,), {"code": code, "__doc__": doc})
    return cls


# numeric
NotSymmetric = _make("NotSymmetric", "not_symmetric", "Matrix is not symmetric within tolerance.")
Infeasible = _make("Infeasible", "infeasible", "Linear system has no solution within tolerance.")

# config
RankDeficient = _make("RankDeficient", "rank_deficient", "Vectors do not span the ambient space.")
InvalidConfiguration = _make(
    "InvalidConfiguration", "invalid_configuration",
    "Zero vector or two vectors that are positive multiples of each other.")
TooLarge = _make("TooLarge", "too_large", "Input exceeds a configured size cap.")
ZeroDualVector = _make("ZeroDualVector", "zero_dual_vector", "Some Gale dual vector vanishes.")

# cones
NotInterior = _make("NotInterior", "not_interior", "Point is not interior to the required domain.")
NotAFacet = _make("NotAFacet", "not_a_facet", "Index does not name a facet of the cone.")

# polytope
Empty = _make("Empty", "empty", "The polyhedron is empty.")
OutsideSupport = _make("OutsideSupport", "outside_support", "Direction outside the support of the normal fan.")
LowDimensional = _make("LowDimensional", "low_dimensional", "Polytope is not full-dimensional.")
NotAWall = _make("NotAWall", "not_a_wall", "Cone is not shared by two maximal cones.")
NotPolytopal = _make("NotPolytopal", "not_polytopal", "Fan is not the normal fan of a polytope.")
TooDeep = _make("TooDeep", "too_deep", "Truncation removes a vertex outside the face.")
SupportMismatch = _make("SupportMismatch", "support_mismatch", "Fans have different supports.")
NotSimple = _make("NotSimple", "not_simple", "Polytope is not simple.")
NotAWeight = _make("NotAWeight", "not_a_weight", "Edge weights violate the closure condition.")
NonConvex = _make("NonConvex", "non_convex", "Reconstructed support vector is not convex on the fan.")

# forms
DegenerateSum = _make("DegenerateSum", "degenerate_sum", "Interpolation system is ill-conditioned.")
UnsupportedBall = _make("UnsupportedBall", "unsupported_ball", "Unit ball bodies are only supported for d = 3 and d = 4.")
NotSpanning = _make("NotSpanning", "not_spanning", "Vectors are not positively spanning.")
NotSimplicial = _make("NotSimplicial", "not_simplicial", "Fan is not simplicial.")

# hyperbolic
WrongSignature = _make("WrongSignature", "wrong_signature", "Form does not have Lorentzian signature.")
NotTimelike = _make("NotTimelike", "not_timelike", "Point is not timelike for the form.")
BadAngles = _make("BadAngles", "bad_angles", "Angle list does not describe a convex polygon.")
HypothesisFail = _make("HypothesisFail", "hypothesis_fail", "Preconditions of the check are not met.")


class Unbounded(ShapeconeError):
    """The polyhedron is unbounded; ``recession`` holds a basis of recession directions."""

    code = "unbounded"

    def __init__(self, message: str, recession=None, polytope=None):
        super().__init__(message)
        self.recession = recession
        self.polytope = polytope


class InvariantViolation(ShapeconeError):
    """An internal cross-check failed. Always a bug, never an input problem."""

    code = "invariant_violation"


class InputError(ShapeconeError):
    """Malformed CLI input."""

    code = "input_error"
