"""Momentum-method optimizers with convergence certificates.

The package pairs every scheme it ships with the Lyapunov argument that
proves its convergence rate, so a run can be *certified* rather than just
observed: the certifiers recompute the energy along the trajectory (or an
ensemble of trajectories under noise) and check the proven per-step
contraction and endpoint bounds numerically.

Layout:

- ``objectives``: benchmark landscapes with projections onto their
  minimizer manifolds and closed-form condition constants.
- ``noise``: the gradient oracle (exact, or Gaussian with additive and
  multiplicative parts) with counter-keyed reproducible draws.
- ``optimizers``: gradient descent, accelerated gradient with constant and
  decreasing steps, its noise-adapted variant, and the damped second-order
  flow.
- ``lyapunov``: the certificates.
- ``geometry``: sampled estimates of the condition constants (gradient
  domination, strong convexity to the minimizer, quasar convexity,
  curvature range) plus landscape line probes.
- ``harness`` / ``cli``: config-driven experiment runner, artifact writer,
  and benchmark reproductions.
"""

from .config import ExperimentConfig, load_config, parse_config_text
from .geometry import (
    GeometryReport,
    LineProbe,
    MonotonicityReport,
    RegionSpec,
    check_projection_monotonicity,
    curvature_range,
    diagnose,
    line_probe,
    probe_negative_curvature,
    random_tube_curves,
)
from .harness import (
    CertifyResult,
    ConfigError,
    RunResult,
    THEOREMS,
    build_experiment,
    certify_theorem,
    default_region,
    run,
    write_json,
)
from .lyapunov import (
    LyapunovTrace,
    StatisticalPowerError,
    certify_descent_lemma,
    continuous_headline_ok,
    continuous_lyapunov,
    discrete_lyapunov_agnes,
    discrete_lyapunov_decreasing,
    discrete_lyapunov_nag,
    flow_integration_allowance,
    linear_recursion_bound,
    nag_lyapunov_coefficient,
)
from .noise import KeyedNormals, NoiseModel, estimate_gradient, verify_stochastic_identities
from .objectives import (
    ObjectiveDomainError,
    ObjectiveSpec,
    ProjectionSpec,
    get_objective,
    make_degenerate_quadratic,
    make_ellipse_quartic,
    make_oscillatory_1d,
    make_product_structure,
    make_squared_distance,
    oscillatory_constants,
)
from .optimizers import (
    DivergenceError,
    OptimizerParams,
    TrajectoryRecord,
    agnes_params,
    decreasing_schedule,
    gd_params,
    heavy_ball_params,
    nag_decreasing_params,
    nag_params,
    run_discrete,
    run_flow,
)
from .reproduce import example1_table, reproduce_fig2, reproduce_fig4

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # configs and harness
    "ExperimentConfig",
    "load_config",
    "parse_config_text",
    "ConfigError",
    "CertifyResult",
    "RunResult",
    "THEOREMS",
    "build_experiment",
    "certify_theorem",
    "default_region",
    "write_json",
    "run",
    # objectives
    "ObjectiveSpec",
    "ProjectionSpec",
    "get_objective",
    "make_degenerate_quadratic",
    "make_ellipse_quartic",
    "make_oscillatory_1d",
    "make_product_structure",
    "make_squared_distance",
    "oscillatory_constants",
    "ObjectiveDomainError",
    # noise
    "NoiseModel",
    "KeyedNormals",
    "estimate_gradient",
    "verify_stochastic_identities",
    # optimizers
    "OptimizerParams",
    "TrajectoryRecord",
    "DivergenceError",
    "gd_params",
    "nag_params",
    "agnes_params",
    "nag_decreasing_params",
    "heavy_ball_params",
    "decreasing_schedule",
    "run_discrete",
    "run_flow",
    # certificates
    "LyapunovTrace",
    "StatisticalPowerError",
    "continuous_lyapunov",
    "continuous_headline_ok",
    "flow_integration_allowance",
    "discrete_lyapunov_nag",
    "discrete_lyapunov_agnes",
    "discrete_lyapunov_decreasing",
    "certify_descent_lemma",
    "nag_lyapunov_coefficient",
    "linear_recursion_bound",
    # geometry
    "RegionSpec",
    "GeometryReport",
    "MonotonicityReport",
    "LineProbe",
    "diagnose",
    "curvature_range",
    "line_probe",
    "check_projection_monotonicity",
    "random_tube_curves",
    "probe_negative_curvature",
    # reproductions
    "reproduce_fig2",
    "reproduce_fig4",
    "example1_table",
]
