"""Exact free-field realization of U_q(sl^(M|N)) on truncated Fock modules."""

from .scalars import (
    CriticalLevel,
    DeformationParams,
    FloatParams,
    NonRepresentableExponent,
    SingularCartan,
    cartan_matrix,
)
from .heisenberg import Oscillators, enumerate_basis, highest_weight_state
from .vertex import CosetMismatch, CurrentSpec, VertexSpec, apply_chain, current_mode_matrix
from .currents import Currents, ZeroCoefficient, coefficient_tables

__version__ = "0.1.0"
