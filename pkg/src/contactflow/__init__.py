"""Characteristic-strip engine for contact Hamilton-Jacobi hypersurfaces.

A hypersurface E in the space of contact elements over a line or circle
bundle U -> M is integrated by the method of characteristics; on top of the
strip integrator sit Legendre front propagation with caustic detection,
Noether checks, gauge transformations, wave diagrams with Legendre duality,
principal-symbol asymptotics, and phase-space holonomy.
"""

from .bundle import (ConnectionData, DiagramPoint, RelativisticScenario,
                     WaveDiagram, classify_characteristic,
                     constant_field_potential, gauge_transform,
                     hausdorff_distance, legendre_dual, lorentzian_metric,
                     null_norm, ray_alpha, relativistic_scenario,
                     strip_in_gauge, wave_diagram)
from .charts import (Chart, Covector, PolyField, ScalarField, TangentVector,
                     pair, random_polynomial)
from .errors import (BoundaryError, ConfigError, ContactFlowError,
                     ContractViolation, CrossingError, DataQualityError,
                     DegeneracyError, EmptyDiagramError, FitQualityError,
                     InternalConsistencyError, NoLiftError)
from .fronts import (CausticEvent, FrontHistory, FrontSpec, circle_front,
                     flat_front, front_action_function, legendre_lift,
                     propagate_front)
from .noether import (SymmetryField, VectorField, check_symmetry,
                      conservation_drift, conservation_series,
                      conserved_quantity, gauge_shifted_symmetry,
                      symmetry_residual)
from .operators import (LinearDiffOperator, PrincipalSymbol, ScalingReport,
                        eikonal_residual, equivariant_reduce,
                        fit_quadratic_phase, oscillatory_coefficients,
                        oscillatory_value, poly_phase, principal_symbol,
                        schrodinger_operator, symbol_scaling_check)
from .phase import (HolonomyResult, PhasePoint, SectionSpec, curvature_ratio,
                    holonomy, holonomy_convergence, phase_portrait,
                    square_loop, to_phase)
from .exprs import connection_components, momentum_names, scalar_field, symbol_surface
from .scenarios import Scenario, builtin
from .strips import (BatchItem, CharacteristicState, Fiber, IntegratorConfig,
                     Strip, SymbolSurface, action_increment, batch_propagate,
                     characteristic_field, propagate, sample_onshell)

__version__ = "0.1.0"
