"""2+1D honeycomb lattice of SU(2) hex-plaquettes, truncated to one qubit per cell.

Cells are addressed by axial coordinates (i, j) with 0 <= i < Lx, 0 <= j < Ly
and mapped to qubit i + j*Lx.  The loop operator on a cell flips its qubit and
picks up a diagonal factor for each of the six cyclic nearest-neighbor pairs:

    B_(i,j) = X_(i,j) * prod_K [ a Z_K Z_{K+1} + b ],
    a = 1/2 - 1/(2 sqrt 2),  b = 1/2 + 1/(2 sqrt 2),

with K running over the ring (i+1,j-1), (i+1,j), (i,j+1), (i-1,j+1),
(i-1,j), (i,j-1).  Cells outside the grid are frozen in |0>: their Z factors
become +1 scalars and their excitation projectors vanish.  Edge length a = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import TADPOLE_LOWER, TADPOLE_UPPER, _BOUND_SLACK, _field_values
from .paulis import PauliSum, StateVector, multiply, projector

RING_OFFSETS = ((1, -1), (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1))

_ZZ_COEFF = 0.5 - 0.5 / math.sqrt(2.0)
_ID_COEFF = 0.5 + 0.5 / math.sqrt(2.0)


@dataclass(frozen=True)
class HoneycombSpec:
    """Open-boundary honeycomb patch: Lx * Ly hex cells, coupling g."""

    Lx: int
    Ly: int
    g: float

    def __post_init__(self):
        if self.Lx < 1 or self.Ly < 1:
            raise ValueError(f"grid sizes must be >= 1, got {self.Lx}x{self.Ly}")
        if not self.g > 0:
            raise ValueError(f"coupling g must be positive, got {self.g}")

    @property
    def n_qubits(self) -> int:
        return self.Lx * self.Ly

    def contains(self, i: int, j: int) -> bool:
        return 0 <= i < self.Lx and 0 <= j < self.Ly

    def qubit_index(self, i: int, j: int) -> int:
        if not self.contains(i, j):
            raise IndexError(f"cell ({i},{j}) outside {self.Lx}x{self.Ly} grid")
        return i + j * self.Lx

    def cells(self) -> list[tuple[int, int]]:
        """All cells in qubit-index order."""
        return [(i, j) for j in range(self.Ly) for i in range(self.Lx)]


@dataclass(frozen=True)
class NeighborSite:
    """One ring entry: its cell coordinate and qubit index (None when frozen)."""

    coord: tuple[int, int]
    qubit: int | None

    @property
    def frozen(self) -> bool:
        return self.qubit is None


@dataclass(frozen=True)
class NeighborRing:
    """The six nearest-neighbor sites of a cell, in cyclic order."""

    sites: tuple[NeighborSite, ...]

    def __post_init__(self):
        if len(self.sites) != 6:
            raise ValueError(f"a neighbor ring has exactly 6 sites, got {len(self.sites)}")

    def __iter__(self):
        return iter(self.sites)

    def __getitem__(self, k: int) -> NeighborSite:
        return self.sites[k]


def neighbors(spec: HoneycombSpec, i: int, j: int) -> NeighborRing:
    """Cyclic neighbor ring of cell (i, j); off-grid entries are tagged frozen."""
    if not spec.contains(i, j):
        raise IndexError(f"cell ({i},{j}) outside {spec.Lx}x{spec.Ly} grid")
    sites = []
    for di, dj in RING_OFFSETS:
        ci, cj = i + di, j + dj
        qubit = spec.qubit_index(ci, cj) if spec.contains(ci, cj) else None
        sites.append(NeighborSite((ci, cj), qubit))
    return NeighborRing(tuple(sites))


def hex_plaquette_op(spec: HoneycombSpec, i: int, j: int) -> PauliSum:
    """Loop operator B_(i,j); Hermitian with operator norm <= 1."""
    n = spec.n_qubits
    ring = neighbors(spec, i, j)
    op = PauliSum.x(spec.qubit_index(i, j), n)
    for k in range(6):
        s1, s2 = ring[k], ring[(k + 1) % 6]
        if s1.frozen and s2.frozen:
            # both Z factors are +1 scalars and a + b = 1
            continue
        zz = PauliSum.identity(n)
        if not s1.frozen:
            zz = multiply(zz, PauliSum.z(s1.qubit, n))
        if not s2.frozen:
            zz = multiply(zz, PauliSum.z(s2.qubit, n))
        factor = _ZZ_COEFF * zz + PauliSum.identity(n, _ID_COEFF)
        op = multiply(op, factor)
    return op


def hex_magnetic_hamiltonian(spec: HoneycombSpec, u) -> PauliSum:
    """H_B = (2/(3 sqrt3 g^2)) sum_(i,j) [4 I - (1/u6)(B + B^dag)].

    ``u`` is a TadpoleField or an array of Lx*Ly positive u^6 values in
    qubit-index order.
    """
    n_plaq = spec.Lx * spec.Ly
    values = _field_values(u, n_plaq)
    pref = 2.0 / (3.0 * math.sqrt(3.0) * spec.g**2)
    h = PauliSum.identity(spec.n_qubits, 4.0 * pref * n_plaq)
    for i, j in spec.cells():
        h = h + (-2.0 * pref / values[spec.qubit_index(i, j)]) * hex_plaquette_op(spec, i, j)
    return h


def hex_electric_hamiltonian(spec: HoneycombSpec) -> PauliSum:
    """H_E = (3 sqrt3 g^2/4) sum_(i,j) P1_(i,j) (3 - P1_fwd1 - P1_fwd2 - P1_fwd3).

    The three forward neighbors are (i+1,j-1), (i+1,j), (i,j+1); frozen ones
    contribute no excitation projector.
    """
    n = spec.n_qubits
    pref = 3.0 * math.sqrt(3.0) * spec.g**2 / 4.0
    h = PauliSum.zero(n)
    for i, j in spec.cells():
        p1 = projector(spec.qubit_index(i, j), 1, n)
        inner = PauliSum.identity(n, 3.0)
        for di, dj in RING_OFFSETS[:3]:
            if spec.contains(i + di, j + dj):
                inner = inner - projector(spec.qubit_index(i + di, j + dj), 1, n)
        h = h + multiply(p1, inner)
    return pref * h


def hex_electric_energy_op(spec: HoneycombSpec, i: int, j: int) -> PauliSum:
    """Electric energy of cell (i, j): all six of its links.

    (3 sqrt3 g^2/8) [ P1_(i,j) sum_K P0_K + P0_(i,j) sum_K P1_K ], where a
    frozen K contributes P0 = 1 and P1 = 0.
    """
    n = spec.n_qubits
    pref = 3.0 * math.sqrt(3.0) * spec.g**2 / 8.0
    ring = neighbors(spec, i, j)
    center = spec.qubit_index(i, j)
    sum_p0 = PauliSum.zero(n)
    sum_p1 = PauliSum.zero(n)
    for site in ring:
        if site.frozen:
            sum_p0 = sum_p0 + PauliSum.identity(n)
        else:
            sum_p0 = sum_p0 + projector(site.qubit, 0, n)
            sum_p1 = sum_p1 + projector(site.qubit, 1, n)
    h = multiply(projector(center, 1, n), sum_p0) + multiply(projector(center, 0, n), sum_p1)
    return pref * h


def hex_tadpole_factor(psi: StateVector, spec: HoneycombSpec, i: int, j: int) -> float:
    """u^6_(i,j) = 1 + <B_(i,j) + B^dag_(i,j)>/4 measured in ``psi``."""
    value = 1.0 + 0.5 * hex_plaquette_op(spec, i, j).expectation(psi)
    if not (TADPOLE_LOWER - _BOUND_SLACK <= value <= TADPOLE_UPPER + _BOUND_SLACK):
        raise RuntimeError(
            f"u^6 = {value!r} outside [1/2, 3/2]; the unit-norm bound on B was violated"
        )
    return value
