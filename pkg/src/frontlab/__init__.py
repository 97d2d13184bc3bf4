"""frontlab: transition fronts for inhomogeneous monostable reaction-diffusion.

Builds positive generalized eigenfunctions of the linearization at zero,
turns them into ordered sub- and super-solutions through profile transforms,
and certifies the resulting front sandwich with a monotone finite-difference
simulation of u_t = u_xx + f(x, u).
"""

__version__ = "0.1.0"

from .errors import (
    FrontlabError,
    InvalidSpecError,
    EnvelopeError,
    ThresholdError,
    WindowError,
    DomainExhaustedError,
    NoDecayingSolutionError,
    NormalizationError,
    ResolutionError,
    FrontAbsentError,
    BlowupError,
    ScenarioRejectedError,
)
from .reaction import (
    ReactionSpec,
    build_reaction,
    coefficient_field,
    lower_envelope,
    upper_envelope,
    validate_spec,
    threshold_rhs,
    alpha_for,
)
from .spectral import sup_spectrum, eigenfunction, doubling_length, superpose
from .linearized import LinearizedSolution, EnvelopeFields
from .profiles import (
    wave_speed,
    solve_super_profile,
    solve_sub_profile,
    build_transforms,
    ProfileTransforms,
)
from .simulate import (
    SimulationConfig,
    FrontSolution,
    Stepper,
    run,
    front_position,
    front_width,
    speed_estimate,
)
from .verify import CertificateReport, verify_run, width_bound
from .scenario import Scenario, parse_scenario, scenario_from_text
from .pipeline import (
    RunArtifact,
    Support,
    build_support,
    run_pipeline,
    verify_from_dir,
    sweep,
)

__all__ = [
    "FrontlabError",
    "InvalidSpecError",
    "EnvelopeError",
    "ThresholdError",
    "WindowError",
    "DomainExhaustedError",
    "NoDecayingSolutionError",
    "NormalizationError",
    "ResolutionError",
    "FrontAbsentError",
    "BlowupError",
    "ScenarioRejectedError",
    "ReactionSpec",
    "build_reaction",
    "coefficient_field",
    "lower_envelope",
    "upper_envelope",
    "validate_spec",
    "threshold_rhs",
    "alpha_for",
    "sup_spectrum",
    "eigenfunction",
    "doubling_length",
    "superpose",
    "LinearizedSolution",
    "EnvelopeFields",
    "wave_speed",
    "solve_super_profile",
    "solve_sub_profile",
    "build_transforms",
    "ProfileTransforms",
    "SimulationConfig",
    "FrontSolution",
    "Stepper",
    "run",
    "front_position",
    "front_width",
    "speed_estimate",
    "CertificateReport",
    "verify_run",
    "width_bound",
    "Scenario",
    "parse_scenario",
    "scenario_from_text",
    "RunArtifact",
    "Support",
    "build_support",
    "run_pipeline",
    "verify_from_dir",
    "sweep",
]
