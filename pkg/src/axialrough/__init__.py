"""Quantum and classical precision limits for axial roughness of point-source distributions."""

__version__ = "0.1.0"

from .errors import InvalidArgumentError, SingularParametrizationError, UnidentifiableError
from .optics import OpticalConfig
from .sources import MomentKind, MomentVector, SourceDistribution

__all__ = [
    "InvalidArgumentError",
    "MomentKind",
    "MomentVector",
    "OpticalConfig",
    "SingularParametrizationError",
    "SourceDistribution",
    "UnidentifiableError",
    "__version__",
]
