"""Finite-horizon laboratory for orbits of linear operators.

Integer-set densities, weighted shifts, block-periodic operators, explicit
frequently hypercyclic vectors and exact operator identities.
"""

__version__ = "0.1.0"

from .density import (
    BlockVector,
    DensityProfile,
    IndexSet,
    density_profile,
    set_algebra,
    syndetic_gap,
    visit_set,
)
from .errors import (
    ArithmeticModeError,
    BudgetError,
    ConstructionError,
    DomainError,
    LindynError,
    ParameterError,
    RankError,
)
from .linop import SparseOperator

__all__ = [
    "ArithmeticModeError",
    "BlockVector",
    "BudgetError",
    "ConstructionError",
    "DensityProfile",
    "DomainError",
    "IndexSet",
    "LindynError",
    "ParameterError",
    "RankError",
    "SparseOperator",
    "density_profile",
    "set_algebra",
    "syndetic_gap",
    "visit_set",
]
