"""Data-driven simulation and output matching for SISO flat nonlinear systems.

Recorded input/output data of a flat plant parameterizes all of its
trajectories through Hankel matrices of basis-function evaluations; the
package builds that parameterization, checks candidate trajectories
against it, simulates fresh inputs and computes tracking inputs, in
explicit-basis or kernelized form.
"""

from .basis import BasisSet, KernelSpec, named_basis
from .errors import FlatDdError
from .experiments import ExperimentConfig, run_example1, run_example2, run_generate, run_sweep
from .matching import MatchProblem, MatchResult, dd_match
from .membership import (
    MembershipVerdict,
    data_length_check,
    flat_membership,
    lti_membership,
)
from .plant import (
    FlatModel,
    NoiseSpec,
    collect_trajectory,
    example1_model,
    example2_model,
    generate_excitation,
    simulate,
)
from .signals import (
    HankelMatrix,
    IoTrajectory,
    Signal,
    build_hankel,
    pe_check,
    read_trajectory,
    write_trajectory,
)
from .simulation import SimProblem, SimResult, dd_simulate
from .solver import NonlinearResidualProblem, RidgeProblem, nonlinear_solve, ridge_solve

__version__ = "0.1.0"

__all__ = [
    "BasisSet",
    "ExperimentConfig",
    "FlatDdError",
    "FlatModel",
    "HankelMatrix",
    "IoTrajectory",
    "KernelSpec",
    "MatchProblem",
    "MatchResult",
    "MembershipVerdict",
    "NoiseSpec",
    "NonlinearResidualProblem",
    "RidgeProblem",
    "Signal",
    "SimProblem",
    "SimResult",
    "build_hankel",
    "collect_trajectory",
    "data_length_check",
    "dd_match",
    "dd_simulate",
    "example1_model",
    "example2_model",
    "flat_membership",
    "generate_excitation",
    "lti_membership",
    "named_basis",
    "nonlinear_solve",
    "pe_check",
    "read_trajectory",
    "ridge_solve",
    "run_example1",
    "run_example2",
    "run_generate",
    "run_sweep",
    "simulate",
    "write_trajectory",
]
