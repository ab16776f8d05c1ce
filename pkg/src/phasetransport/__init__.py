"""Momentum-affine parallel transport of particle worldlines.

A transport kernel affine in momentum — a momentum-independent block
plus a momentum-linear block — covers free fall (the linear block built
from metric derivatives) and the Lorentz force (the constant block
e times the field strength) in one integrator.  Curvature contractions
and potential-closure checks validate the field inputs; a small CLI
runs bundled scenarios against closed-form references.
"""

from .connection import (
    NonLinearConnection,
    Particle,
    electromagnetic_connection,
    eval_connection,
    gravitational_connection,
    superpose,
    zero_connection,
)
from .curvature import (
    bianchi_residual,
    christoffel,
    closure_residual,
    einstein_tensor,
    faraday_field_of,
    faraday_from_potential,
    ricci,
    scalar_curvature,
)
from .errors import (
    IncompatibleChecker,
    MalformedFaraday,
    NonMonotoneTime,
    OutsideDomain,
    ParseError,
    SingularMetric,
    StepRejected,
    TransportError,
    ValidationError,
    VarianceMismatch,
)
from .fields import (
    FaradayField,
    VectorPotential,
    axial_magnetic_potential_spherical,
    coulomb_potential,
    eb_from_matrix,
    matrix_from_eb,
    uniform_faraday,
    uniform_field_potential,
    zero_potential,
)
from .metrics import minkowski, schwarzschild, weak_field, without_closed_form
from .tensor import (
    DomainGuard,
    FourVector,
    MetricField,
    SpacetimeEvent,
    Tensor2,
    Tensor3,
    Tensor4,
    Variance,
    flat_metric,
    lower_index,
    minkowski_norm,
    partial_derivative,
    raise_index,
)
from .report import CHECKERS, CSV_COLUMNS, RunReport, check, emit, run
from .scenarios import (
    Scenario,
    builtin_names,
    load_builtin,
    load_scenario,
    load_scenario_file,
)
from .transport import (
    IntegratorConfig,
    PhaseState,
    Trajectory,
    TrajectorySample,
    acceleration,
    acceleration_terms,
    coordinate_force,
    geodesic_integrate,
    integrate,
    minimal_substitution_trajectory,
    step,
)

__version__ = "0.1.0"
