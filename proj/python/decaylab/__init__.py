"""Decay-rate preservation for perturbed scalar dynamics."""

from ._core import (
    DomainError,
    InverseFlow,
    Noise,
    Nonlinearity,
    Perturbation,
    SpecError,
    analyze_f,
    classify,
    compute_F,
    format_double,
    integrate_external,
    run_scenario,
    simulate_ensemble,
    verdict,
    verify,
)

__all__ = [
    "DomainError",
    "InverseFlow",
    "Noise",
    "Nonlinearity",
    "Perturbation",
    "SpecError",
    "analyze_f",
    "classify",
    "compute_F",
    "format_double",
    "integrate_external",
    "run_scenario",
    "simulate_ensemble",
    "verdict",
    "verify",
]
