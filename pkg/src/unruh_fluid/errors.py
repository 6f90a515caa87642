"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the documented domain of an operation."""


class InstabilityError(ArithmeticError):
    """The Bogoliubov spectrum is unstable (f^2 <= 0 somewhere)."""

    def __init__(self, message, zeta=None):
        super().__init__(message)
        self.zeta = zeta


class TruncationError(RuntimeError):
    """A harmonic sum did not certify its truncation within the term budget."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CutoffError(RuntimeError):
    """Oracle integration cutoffs left too much mass at the boundary."""

    def __init__(self, message, boundary_fraction=None):
        super().__init__(message)
        self.boundary_fraction = boundary_fraction


class QuadratureError(RuntimeError):
    """A quadrature failed to reach its target; carries the achieved residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PhysicalConstraintError(ValueError):
    """Laboratory parameters violate a physical constraint."""

    code = "physical_constraint"
    constraint = ""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value

    def to_dict(self):
        return {"error": self.code, "constraint": self.constraint,
                "message": str(self), "value": self.value}


class SuperluminalOrbitError(PhysicalConstraintError):
    code = "superluminal_orbit"
    constraint = "v = R*Omega/c0 < 1"


class CollapseError(PhysicalConstraintError):
    code = "attractive_collapse"
    constraint = "g0_eff > 0"
