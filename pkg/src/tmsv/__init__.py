"""Dissipative preparation of two-mode squeezed vacuum: Lindblad simulation and analytic checks."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("tmsv")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .dynamics import (
    EvolveOptions,
    LindbladModel,
    Trajectory,
    dissipator,
    effective_model,
    evolve,
    rhs,
    steady_state,
    trace_distance,
    transformed_model,
)
from .fockspace import CompositeSpace, DensityMatrix, Ket, Operator, basis
from .model import EffectiveParams, SystemParams, circuit_to_params, effective_params
from .observables import epr_variance, fidelity, ideal_variance, populations
from .squeezing import select_cutoff, squeeze_operator, target_state, tmsv_state

__all__ = [
    "CompositeSpace", "DensityMatrix", "EffectiveParams", "EvolveOptions", "Ket", "LindbladModel",
    "Operator", "SystemParams", "Trajectory", "basis", "circuit_to_params", "dissipator",
    "effective_model", "effective_params", "epr_variance", "evolve", "fidelity", "ideal_variance",
    "populations", "rhs", "select_cutoff", "squeeze_operator", "steady_state", "target_state",
    "tmsv_state", "trace_distance", "transformed_model",
]
