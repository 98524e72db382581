"""Observational entropy of quantum states under random unitary evolution."""

from .concentration import (
    LEVY_CONSTANT,
    BoundParams,
    TailExperimentResult,
    design_tail_bound,
    empirical_tail,
    generic_tail_from_g,
    haar_tail_bound,
)
from .entropy import EntropyValue, LogBase, kl_divergence, observational_entropy, von_neumann_entropy
from .ensembles import UnitaryEnsemble, stream
from .macro import NotMacroscopic, is_macroscopic, macrostate_decomposition
from .qcore import DensityOperator, Povm, Unitary, ValidationError

__version__ = "0.1.0"
