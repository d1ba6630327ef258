"""Exact lattice, Mukai-vector, slope and motive computations for supersingular surfaces."""
from .errors import InvariantError, PreconditionError, SupersingularError
from .lattice import IntLattice

__all__ = ["IntLattice", "InvariantError", "PreconditionError", "SupersingularError"]
__version__ = "0.1.0"
