"""Critical speeds, traveling waves and spreading for an age-structured
equation with nonlocal dispersal."""

__version__ = "0.1.0"

from .errors import AgewaveError, NumericalCheckError, ValidationError  # noqa: E402
from .model import AgeGrid, ModelSpec, SpaceGrid, reference_model, validate_assumptions  # noqa: E402
from .spectral import DispersionReport, dispersion_report  # noqa: E402

__all__ = [
    "AgeGrid", "AgewaveError", "DispersionReport", "ModelSpec", "NumericalCheckError", "SpaceGrid",
    "ValidationError", "__version__", "dispersion_report", "reference_model", "validate_assumptions",
]
