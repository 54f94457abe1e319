"""Exact state-vector simulation of truncated SU(2) plaquette systems with
dynamical local tadpole improvement."""

from .paulis import CompiledOp, PauliString, PauliSum, StateVector, multiply, projector
from .models import ModelOps, TadpoleField
from .chain import (
    ChainSpec,
    alt_plaquette_op,
    basis_change_unitary,
    chain_tadpole_factor,
    electric_hamiltonian,
    magnetic_hamiltonian,
    plaquette_electric_energy_op,
    plaquette_op,
)
from .honeycomb import (
    HoneycombSpec,
    NeighborRing,
    NeighborSite,
    hex_electric_energy_op,
    hex_electric_hamiltonian,
    hex_magnetic_hamiltonian,
    hex_plaquette_op,
    hex_tadpole_factor,
    neighbors,
)

__version__ = "0.1.0"
