"""Periodic chain of SU(2) plaquettes truncated to two states per plaquette.

After truncating every link to j <= 1/2, each plaquette reduces to one qubit
(its upper link), and the loop operator becomes a controlled flip on the two
neighboring qubits:

    B_i = P0 X P0 + (1/2) P1 X P0 + (1/2) P0 X P1 + (1/4) P1 X P1,

with X on qubit i and the projectors on qubits (i-1) mod L and (i+1) mod L.
The electric energy is carried by projector products on adjacent qubits; the
rung links are fixed by the rails at this truncation and never appear as
independent qubits.  N_c = 2 and lattice spacing a = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import TADPOLE_LOWER, TADPOLE_UPPER, _BOUND_SLACK, _field_values
from .paulis import PauliString, PauliSum, StateVector, multiply, projector


@dataclass(frozen=True)
class ChainSpec:
    """Periodic plaquette chain: L plaquettes (one qubit each), coupling g."""

    L: int
    g: float

    def __post_init__(self):
        if self.L < 3:
            raise ValueError(f"chain needs L >= 3 so every plaquette has two distinct neighbors, got L={self.L}")
        if not self.g > 0:
            raise ValueError(f"coupling g must be positive, got {self.g}")

    @property
    def n_qubits(self) -> int:
        return self.L


def _check_plaquette(spec: ChainSpec, i: int) -> None:
    if not 0 <= i < spec.L:
        raise IndexError(f"plaquette {i} out of range for L={spec.L}")


def _controlled_flip(spec: ChainSpec, i: int, coeffs: tuple[float, float, float, float]) -> PauliSum:
    """sum_{a,b} c_{ab} P_a X_i P_b with projectors on the two neighbors of i."""
    n = spec.L
    left, right = (i - 1) % n, (i + 1) % n
    x_i = PauliSum.x(i, n)
    c00, c10, c01, c11 = coeffs
    op = PauliSum.zero(n)
    for (a, b), c in (((0, 0), c00), ((1, 0), c10), ((0, 1), c01), ((1, 1), c11)):
        op = op + c * multiply(multiply(projector(left, a, n), x_i), projector(right, b, n))
    return op


def plaquette_op(spec: ChainSpec, i: int) -> PauliSum:
    """Loop operator B_i; Hermitian, so B_i + B_i^dag = 2 B_i."""
    _check_plaquette(spec, i)
    return _controlled_flip(spec, i, (1.0, 0.5, 0.5, 0.25))


def alt_plaquette_op(spec: ChainSpec, i: int) -> PauliSum:
    """Alternative sign convention with negative cross terms; same spectrum."""
    _check_plaquette(spec, i)
    return _controlled_flip(spec, i, (1.0, -0.5, -0.5, 0.25))


def basis_change_unitary(spec: ChainSpec) -> PauliSum:
    """U = prod_k exp(-i (pi/4) (-1)^k Z_k Z_{k+1}) mapping between the two conventions.

    The alternating sign closes consistently around the periodic chain only
    for even L.
    """
    if spec.L % 2:
        raise ValueError(f"basis change requires even L under periodic boundaries, got L={spec.L}")
    n = spec.L
    c = 1.0 / math.sqrt(2.0)
    u = PauliSum.identity(n)
    for k in range(n):
        zz = PauliString((0), (1 << k) | (1 << ((k + 1) % n)))
        factor = PauliSum(n, [(c, PauliString(0, 0)), (-1.0j * c * (-1) ** k, zz)])
        u = multiply(u, factor)
    return u


def magnetic_hamiltonian(spec: ChainSpec, u) -> PauliSum:
    """H_B = (1/2g^2) sum_i [4 I - (1/u4_i)(B_i + B_i^dag)].

    ``u`` is a TadpoleField or an array of L positive u^4 values.
    """
    values = _field_values(u, spec.L)
    pref = 1.0 / (2.0 * spec.g**2)
    h = PauliSum.identity(spec.L, 4.0 * pref * spec.L)
    for i in range(spec.L):
        h = h + (-2.0 * pref / values[i]) * plaquette_op(spec, i)
    return h


def electric_hamiltonian(spec: ChainSpec) -> PauliSum:
    """H_E = (3g^2/8) sum_i [2 P1_i + P1_i P0_{i+1} + P0_i P1_{i+1}]."""
    n = spec.L
    pref = 3.0 * spec.g**2 / 8.0
    h = PauliSum.zero(n)
    for i in range(n):
        nxt = (i + 1) % n
        h = h + 2.0 * projector(i, 1, n)
        h = h + multiply(projector(i, 1, n), projector(nxt, 0, n))
        h = h + multiply(projector(i, 0, n), projector(nxt, 1, n))
    return pref * h


def plaquette_electric_energy_op(spec: ChainSpec, i: int) -> PauliSum:
    """Electric energy of plaquette i: all four of its links plus both its rungs.

    The rung terms are shared with the neighboring plaquettes, so the sum
    over i double-counts them relative to the total H_E; this matches the
    per-plaquette observable, not a partition of the total energy.
    """
    _check_plaquette(spec, i)
    n = spec.L
    pref = 3.0 * spec.g**2 / 8.0
    prv, nxt = (i - 1) % n, (i + 1) % n
    h = 2.0 * projector(i, 1, n)
    h = h + multiply(projector(i, 1, n), projector(nxt, 0, n))
    h = h + multiply(projector(i, 0, n), projector(nxt, 1, n))
    h = h + multiply(projector(prv, 1, n), projector(i, 0, n))
    h = h + multiply(projector(prv, 0, n), projector(i, 1, n))
    return pref * h


def chain_tadpole_factor(psi: StateVector, spec: ChainSpec, i: int) -> float:
    """u^4_i = 1 + <B_i + B_i^dag>/4 measured in ``psi``."""
    _check_plaquette(spec, i)
    value = 1.0 + 0.5 * plaquette_op(spec, i).expectation(psi)
    if not (TADPOLE_LOWER - _BOUND_SLACK <= value <= TADPOLE_UPPER + _BOUND_SLACK):
        raise RuntimeError(
            f"u^4 = {value!r} outside [1/2, 3/2]; the unit-norm bound on B_i was violated"
        )
    return value
