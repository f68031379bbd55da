"""Contextuality of sequential measurement scenarios.

Scenarios and behaviours, finite hidden-variable models with operational
restriction checks, the contextual fraction by linear programming, and
quantum instrument realizations.
"""

from .empirical import EmpiricalBehaviour, check_compatibility_of_marginals, validate_behaviour
from .hvm import HiddenVariableModel, check_nd_hvm, random_restricted_hvm
from .polytope import contextual_fraction, is_noncontextual, nc_decomposition
from .quantum import QuantumInstrument, QuantumRealization, check_quantum_nd
from .scenario import MeasurementScenario, SequentialScenario, induce_sequential

__version__ = "0.1.0"

__all__ = [
    "EmpiricalBehaviour",
    "HiddenVariableModel",
    "MeasurementScenario",
    "QuantumInstrument",
    "QuantumRealization",
    "SequentialScenario",
    "check_compatibility_of_marginals",
    "check_nd_hvm",
    "check_quantum_nd",
    "contextual_fraction",
    "induce_sequential",
    "is_noncontextual",
    "nc_decomposition",
    "random_restricted_hvm",
    "validate_behaviour",
]
