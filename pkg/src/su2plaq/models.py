"""Shared model-layer types and uniform access to the two lattice models.

``ModelOps`` wraps a chain or honeycomb spec and precompiles the pieces the
solvers need repeatedly: per-plaquette loop operators, the electric
Hamiltonian, and a fast recombination path for the improved Hamiltonian
H(u) = H_E + prefactor * sum_i [4 I - (2 / u_i^e) * plaquette_i].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .paulis import CompiledOp, PauliSum, StateVector

TADPOLE_LOWER = 0.5
TADPOLE_UPPER = 1.5
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class TadpoleField:
    """Per-plaquette improvement factors at one instant.

    ``values`` holds u^4 for the chain and u^6 for the honeycomb; the loop
    operators have unit norm, so measured entries always lie in [1/2, 3/2].
    """

    values: np.ndarray
    kind: str  # "chain" | "honeycomb"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.kind not in ("chain", "honeycomb"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if values.ndim != 1 or values.size == 0:
            raise ValueError("tadpole field must be a nonempty 1-D array")
        if np.any(values < TADPOLE_LOWER - _BOUND_SLACK) or np.any(values > TADPOLE_UPPER + _BOUND_SLACK):
            raise ValueError(
                f"tadpole entries outside [{TADPOLE_LOWER}, {TADPOLE_UPPER}]: "
                f"range [{values.min():g}, {values.max():g}]"
            )

    @property
    def exponent(self) -> int:
        """Power of u stored per entry: 4 (chain) or 6 (honeycomb)."""
        return 4 if self.kind == "chain" else 6

    def u_values(self) -> np.ndarray:
        """The bare link factors u_i, for reporting only."""
        return self.values ** (1.0 / self.exponent)

    @classmethod
    def uniform(cls, n_plaquettes: int, kind: str, value: float = 1.0) -> "TadpoleField":
        return cls(np.full(n_plaquettes, value), kind)

    def max_diff(self, other: "TadpoleField") -> float:
        return float(np.max(np.abs(self.values - other.values)))


def _field_values(u, n_plaquettes: int) -> np.ndarray:
    """Accept a TadpoleField or a bare positive array of u^e values."""
    values = u.values if isinstance(u, TadpoleField) else np.asarray(u, dtype=np.float64)
    if values.shape != (n_plaquettes,):
        raise ValueError(f"expected {n_plaquettes} tadpole entries, got shape {values.shape}")
    if np.any(values <= 0.0):
        raise ValueError("tadpole entries must be positive")
    return values


class ModelOps:
    """Precompiled operator bundle for one chain or honeycomb instance."""

    def __init__(self, spec):
        from . import chain, honeycomb  # local import; both models use this module

        self.spec = spec
        if isinstance(spec, chain.ChainSpec):
            self.kind = "chain"
            self.n_qubits = spec.L
            self.n_plaquettes = spec.L
            self.magnetic_prefactor = 1.0 / (2.0 * spec.g**2)
            self._plaquette_ops = [chain.plaquette_op(spec, i) for i in range(spec.L)]
            self._h_electric = chain.electric_hamiltonian(spec)
            self._energy_ops = [
                chain.plaquette_electric_energy_op(spec, i) for i in range(spec.L)
            ]
            self.plaquette_labels = [str(i) for i in range(spec.L)]
        elif isinstance(spec, honeycomb.HoneycombSpec):
            self.kind = "honeycomb"
            self.n_qubits = spec.Lx * spec.Ly
            self.n_plaquettes = spec.Lx * spec.Ly
            self.magnetic_prefactor = 2.0 / (3.0 * np.sqrt(3.0) * spec.g**2)
            cells = spec.cells()
            self._plaquette_ops = [honeycomb.hex_plaquette_op(spec, i, j) for i, j in cells]
            self._h_electric = honeycomb.hex_electric_hamiltonian(spec)
            self._energy_ops = [honeycomb.hex_electric_energy_op(spec, i, j) for i, j in cells]
            self.plaquette_labels = [f"({i},{j})" for i, j in cells]
        else:
            raise TypeError(f"unsupported model spec {type(spec).__name__}")
        self._identity = PauliSum.identity(self.n_qubits)

    # -- operator access ---------------------------------------------------

    def plaquette_ops(self) -> list[PauliSum]:
        return list(self._plaquette_ops)

    def electric_hamiltonian(self) -> PauliSum:
        return self._h_electric

    def electric_energy_ops(self) -> list[PauliSum]:
        return list(self._energy_ops)

    def uniform_field(self, value: float = 1.0) -> TadpoleField:
        return TadpoleField.uniform(self.n_plaquettes, self.kind, value)

    def hamiltonian(self, u) -> PauliSum:
        """H(u) = H_E + H_B(u) as a plain PauliSum."""
        values = _field_values(u, self.n_plaquettes)
        h = self._h_electric + PauliSum.identity(
            self.n_qubits, 4.0 * self.magnetic_prefactor * self.n_plaquettes
        )
        for i, op in enumerate(self._plaquette_ops):
            h = h + (-2.0 * self.magnetic_prefactor / values[i]) * op
        return h

    def compiled_hamiltonian(self, u) -> CompiledOp:
        """Fast H(u) assembly from precompiled parts (no sign-array rebuild)."""
        values = _field_values(u, self.n_plaquettes)
        parts = [
            (1.0, self._h_electric.compiled()),
            (4.0 * self.magnetic_prefactor * self.n_plaquettes, self._identity.compiled()),
        ]
        parts.extend(
            (-2.0 * self.magnetic_prefactor / values[i], op.compiled())
            for i, op in enumerate(self._plaquette_ops)
        )
        return CompiledOp.combine(parts)

    def hamiltonian_scale(self, u) -> float:
        """Coefficient 1-norm of H(u): the residual/identity scale for solvers."""
        values = _field_values(u, self.n_plaquettes)
        scale = self._h_electric.coefficient_norm()
        scale += 4.0 * self.magnetic_prefactor * self.n_plaquettes
        scale += sum(
            2.0 * self.magnetic_prefactor / values[i] * op.coefficient_norm()
            for i, op in enumerate(self._plaquette_ops)
        )
        return scale

    # -- measurements ------------------------------------------------------

    def measure_tadpoles(self, psi: StateVector) -> TadpoleField:
        """u^e_i = 1 + <plaquette_i + adjoint>/4 for every plaquette."""
        amps = psi.amplitudes
        values = np.empty(self.n_plaquettes)
        for i, op in enumerate(self._plaquette_ops):
            exp = op.compiled().expectation(amps)
            # loop operators are Hermitian: <P + P^dag> = 2 Re <P>
            values[i] = 1.0 + 0.5 * exp.real
        if np.any(values < TADPOLE_LOWER - _BOUND_SLACK) or np.any(values > TADPOLE_UPPER + _BOUND_SLACK):
            raise RuntimeError(
                "measured tadpole factor outside [1/2, 3/2]; "
                "the unit-norm bound on the loop operator was violated"
            )
        return TadpoleField(values, self.kind)

    def measure_electric_profile(self, psi: StateVector) -> np.ndarray:
        amps = psi.amplitudes
        return np.array([op.compiled().expectation(amps).real for op in self._energy_ops])


@lru_cache(maxsize=4)
def get_model_ops(spec) -> ModelOps:
    """Shared per-spec operator bundle; compiled arrays are large, so keep few."""
    return ModelOps(spec)
