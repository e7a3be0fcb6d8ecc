"""
Exception hierarchy for critspec.

Every failure raised by a service is a CritspecError carrying a short machine code
and a details dict; the pipeline records these per stage instead of aborting.
"""

from typing import Any, Dict, Optional


class CritspecError(Exception):
    """Base exception for all critspec errors."""

    code = "critspec_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}


class InvalidMapError(CritspecError, ValueError):
    """Rational map violates its invariants (degree, common roots, coefficients)."""
    code = "invalid_map"


class IndeterminateError(InvalidMapError):
    """0/0 at a point: numerator and denominator share a root there."""
    code = "indeterminate"


class PoleError(CritspecError, ValueError):
    """Derivative requested at a pole of the map."""
    code = "pole"

    def __init__(self, z: complex):
        super().__init__("derivative undefined at pole", {"z": [z.real, z.imag]})


class RootFindingError(CritspecError, ArithmeticError):
    """Simultaneous iteration did not converge within its budget."""
    code = "root_finding"

    def __init__(self, message: str, worst_residual: float):
        self.worst_residual = worst_residual
        super().__init__(message, {"worst_residual": worst_residual})


class PreconditionError(CritspecError, ValueError):
    """An operation precondition does not hold; names the first violated condition."""
    code = "precondition"

    def __init__(self, condition: str, message: Optional[str] = None, **details: Any):
        self.condition = condition
        super().__init__(message or f"precondition violated: {condition}",
                         {"condition": condition, **details})


class NormalizationError(PreconditionError):
    """Moebius normalization requested with non-fixed or coincident points."""
    code = "normalization"


class KernelPoleError(CritspecError, ValueError):
    """Evaluation point inside an exclusion disk of a kernel or atom."""
    code = "kernel_pole"

    def __init__(self, z: complex, pole: complex, radius: float):
        super().__init__(
            "kernel pole",
            {"z": [z.real, z.imag], "pole": [pole.real, pole.imag], "radius": radius},
        )


class BranchCollisionError(CritspecError, ValueError):
    """A preimage branch meets a critical point, so R'(y) vanishes."""
    code = "branch_collision"

    def __init__(self, z: complex, depth: int):
        self.depth = depth
        super().__init__("branch collision", {"z": [z.real, z.imag], "depth": depth})


class WeightValidationError(CritspecError, ValueError):
    """Nörlund weights rejected."""
    code = "invalid_weights"

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"invalid Nörlund weights: {reason}", {"reason": reason})


class QuadratureError(CritspecError, ArithmeticError):
    """Quadrature did not stabilize between refinement levels."""
    code = "quadrature"


class ProjectiveClassError(CritspecError, ValueError):
    """Identically zero measures have no projective class."""
    code = "projective_class"

    def __init__(self) -> None:
        super().__init__("projective class undefined")


class ConfigError(CritspecError, ValueError):
    """Run configuration failed schema validation."""
    code = "config"
