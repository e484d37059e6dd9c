"""Input decoupling of Lagrangian systems through actuation coordinates.

Test whether a configuration-dependent actuation matrix admits actuation
coordinates (an integrable passive output), build the coordinate chart
that reduces the generalized force to [I; 0] u, and exercise the
regulators that this structure enables on tendon-driven models.
"""

from .core import (
    ActuationModel,
    ConfigState,
    MechanicalModel,
    forward_dynamics,
    hamiltonian,
    hamiltonian_rate,
    power_balance_residual,
    sample_box,
)
from .charts import (
    CoordinateChart,
    IntegrabilityReport,
    PathIntegrator,
    build_chart,
    check_integrability,
    integrate_passive_output,
    transform_force,
    verify_power_invariance,
)
from .control import (
    Gains,
    IntegralState,
    PDFeedforwardController,
    PSatIDController,
    QSpacePDController,
    ThetaView,
    equilibrium_config,
    equilibrium_unactuated,
    p_sat_i_d,
    pd_plus_feedforward,
    pd_plus_q_space,
)
from .errors import (
    AssumptionViolatedError,
    CollodynError,
    DivergedError,
    NotCollocatedError,
    SingularConfigurationError,
    SingularInertiaError,
)
from .simulate import (
    ReferenceSchedule,
    Trajectory,
    export_csv,
    integrate,
    load_csv,
    online_theta,
)
from . import models

__version__ = "0.1.0"

__all__ = [
    "ActuationModel",
    "ConfigState",
    "MechanicalModel",
    "forward_dynamics",
    "hamiltonian",
    "hamiltonian_rate",
    "power_balance_residual",
    "sample_box",
    "CoordinateChart",
    "IntegrabilityReport",
    "PathIntegrator",
    "build_chart",
    "check_integrability",
    "integrate_passive_output",
    "transform_force",
    "verify_power_invariance",
    "Gains",
    "IntegralState",
    "PSatIDController",
    "PDFeedforwardController",
    "QSpacePDController",
    "ThetaView",
    "equilibrium_config",
    "equilibrium_unactuated",
    "p_sat_i_d",
    "pd_plus_feedforward",
    "pd_plus_q_space",
    "ReferenceSchedule",
    "Trajectory",
    "integrate",
    "online_theta",
    "export_csv",
    "load_csv",
    "CollodynError",
    "NotCollocatedError",
    "SingularConfigurationError",
    "SingularInertiaError",
    "AssumptionViolatedError",
    "DivergedError",
    "models",
]
