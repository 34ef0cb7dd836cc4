"""Spectral Galerkin simulation of a type-III phase-field system with
sliding-mode feedback, plus empirical reaching-time certificates."""

from .config import parse_config
from .dynamics import (
    ConfigError,
    SimulationError,
    SourceSpec,
    SourceTerm,
    State,
    SystemConfig,
    Trajectory,
    run_a_config,
    run_b_config,
    simulate,
    validate,
)
from .operators import PotentialSpec, YosidaParams
from .sliding import Certificate, certify, detect_reaching
from .spectral import Domain, Field, SpectralBasis, make_basis

__all__ = [
    "Certificate",
    "ConfigError",
    "Domain",
    "Field",
    "PotentialSpec",
    "SimulationError",
    "SourceSpec",
    "SourceTerm",
    "SpectralBasis",
    "State",
    "SystemConfig",
    "Trajectory",
    "YosidaParams",
    "certify",
    "detect_reaching",
    "make_basis",
    "parse_config",
    "run_a_config",
    "run_b_config",
    "simulate",
    "validate",
]

__version__ = "0.1.0"
