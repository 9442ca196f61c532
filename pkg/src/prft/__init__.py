"""Photon-resolved Floquet toolkit.

Semiclassical propagation of periodically driven matter systems with
counting fields on the drive modes, photon full-counting statistics via
two-point tomographic measurements, quasiprobability extraction, and
validation against exact truncated-Fock-space dynamics.
"""

from . import applications, core, counting, floquet, fock_oracle, semiclassical
from ._kernel import KERNEL_NAME
from .core import (
    AliasingWarning,
    BranchError,
    CommensurabilityError,
    CountingGrid,
    CoverageError,
    DegenerateQuasienergyError,
    DrivenSystem,
    IntegrationError,
    LeakageError,
    MatterState,
    ModeSpec,
    PhotonicInitialState,
    PRFTError,
    ToleranceError,
    ValidationError,
    WindowError,
    build_driven_system,
    spin_half_operators,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "KERNEL_NAME",
    "core",
    "semiclassical",
    "floquet",
    "counting",
    "fock_oracle",
    "applications",
    "PRFTError",
    "ValidationError",
    "CommensurabilityError",
    "DegenerateQuasienergyError",
    "CoverageError",
    "WindowError",
    "LeakageError",
    "IntegrationError",
    "BranchError",
    "ToleranceError",
    "AliasingWarning",
    "ModeSpec",
    "DrivenSystem",
    "MatterState",
    "PhotonicInitialState",
    "CountingGrid",
    "build_driven_system",
    "spin_half_operators",
]
