"""Density propagation in the (solar angle, eccentricity) phase space.

Three cross-validating propagators for the planar solar-radiation-pressure
plus J2 long-term dynamics of high area-to-mass-ratio Earth satellites:
Monte Carlo binning, transport of density weights along characteristics,
and a split Gaussian mixture pushed through unscented transformations.
"""

from .analysis import (MomentSummary, StationaryPoint, TimingLedger,
                       classify_subdomain, contour_polylines,
                       find_stationary_points, hamiltonian_grid,
                       relative_errors, sample_moments, timing_ledger)
from .dynamics import (DEFAULT_CONSTANTS, CartesianPhaseState, OrbitParams,
                       PhysicalConstants, PolarPhaseState, compute_CW,
                       critical_eccentricity, density_log_rate, eom_cartesian,
                       eom_polar, hamiltonian, hamiltonian_cartesian,
                       to_cartesian, to_polar, wrap_angle)
from .errors import (ConfigError, DecompositionError, DegenerateInputError,
                     DomainError, GeometryError, InvalidParameterError,
                     InvalidScalingError, LibraryQualityError, OutOfRangeError,
                     PropagationError, SingularityError, StepBudgetError)
from .geometry import (InterpGrid, Triangulation, convex_hull_area, delaunay,
                       interp_linear, interp_to_grid, vertex_values)
from .gmmut import (GaussianComponent, GaussianMixture, GmmRunResult,
                    GmmSnapshot, SplitLibrary1D, UTConfig,
                    build_split_library, load_split_library, merge_moments,
                    mixture_marginal, mixture_pdf, run_gmmut,
                    save_split_library, sigma_points, split_gaussian,
                    ut_transform, ut_weights, validate_library)
from .histogram import (BinGrid, JointDensityGrid, MarginalDensity, dee_joint,
                        make_edges, marginal, mc_joint)
from .odeint import (BatchResult, IntegratorConfig, SnapshotPlan, integrate,
                     integrate_batch, integrate_characteristic)
from .propagators import (RunResult, SnapshotResult, WeightedSample,
                          dee_initial_weights, initial_cloud, run_dee, run_mc)
from .scenarios import (ScenarioConfig, builtin_scenarios, case_names,
                        desk_case, paper_case)
from .stochastics import Gaussian2D, RngStream, pdf_gaussian2d, sample_gaussian2d

__version__ = "0.1.0"
