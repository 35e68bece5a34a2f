"""Stochastic phase-field dynamics with a logarithmic double-well potential,
barrier-degenerate multiplicative noise, and quantitative separation
diagnostics."""

from .config import RunConfig, load_config, validate_config
from .diagnostics import (
    CertificateInput,
    TrajectoryRecord,
    certificate_audit,
    energy,
    exp_moment_estimate,
    separation_certificate,
    separation_layer,
)
from .ensemble import (
    EnsembleReport,
    StudyReport,
    convergence_study,
    initial_field,
    load_records,
    load_report,
    persist,
    run_ensemble,
)
from .errors import (
    BarrierError,
    ConfigError,
    ConvergenceError,
    DomainError,
    ParameterError,
    PhasesepError,
    SchemaVersionError,
)
from .grids import (
    Field,
    Grid,
    Spectrum,
    dirichlet_spectrum,
    holder_seminorm,
    integrate,
    laplacian_apply,
    norms,
    project,
)
from .noise import (
    NoiseConstants,
    NoiseFamily,
    apply_noise_increment,
    constants,
    make_polynomial_family,
    taylor_bound_check,
)
from .potential import (
    BarrierWeight,
    LogPotential,
    PotentialConstants,
    ResolventConfig,
    check_potential_hypotheses,
    eval_barrier,
    eval_potential,
    resolvent,
    resolvent_residual,
    resolvent_z,
    yosida_df,
)
from .solver import SchemeConfig, SolverState, WienerStream, run_trajectory

__version__ = "0.1.0"
