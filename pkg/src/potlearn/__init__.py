"""Multi-agent learning lab for finite potential games.

Log-linear learners (single-updater, binary, partial-synchronous), tabular
Q-learners (first- and second-order), a brute-force stochastic-stability
oracle, Gaussian-mixture environment estimation with split/merge moves, and
a multi-robot coverage-control case study tying them together.
"""
from .games import (
    GameDefinition,
    JointAction,
    PotentialCertificate,
    best_response_set,
    construct_potential,
    expected_utility,
    improvement_path,
    is_pure_nash,
    logit_map,
    verify_potential,
)
from .dynamics import (
    ConstrainedActionMap,
    LoglinearState,
    RevisionPolicy,
    blll_step,
    lll_step,
    psblll_step,
    revision_probability,
    validate_constraints,
)
from .harness import ExperimentConfig, RunRecord, run_experiment, steady_state, sweep
from .worthfield import GaussianComponent, WorthField, generate_scenario

__version__ = "0.1.0"

__all__ = [
    "ConstrainedActionMap",
    "ExperimentConfig",
    "GameDefinition",
    "GaussianComponent",
    "JointAction",
    "LoglinearState",
    "PotentialCertificate",
    "RevisionPolicy",
    "RunRecord",
    "WorthField",
    "best_response_set",
    "blll_step",
    "construct_potential",
    "expected_utility",
    "generate_scenario",
    "improvement_path",
    "is_pure_nash",
    "lll_step",
    "logit_map",
    "psblll_step",
    "revision_probability",
    "run_experiment",
    "steady_state",
    "sweep",
    "validate_constraints",
    "verify_potential",
]
