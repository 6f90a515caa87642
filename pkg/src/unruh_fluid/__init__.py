"""Transition rates of a circularly moving impurity in a quasi-2D dipolar condensate."""
from ._backend import backend_name
from .errors import (
    CollapseError,
    CutoffError,
    DomainError,
    InstabilityError,
    PhysicalConstraintError,
    QuadratureError,
    SuperluminalOrbitError,
    TruncationError,
)

__version__ = "0.1.0"
