"""Ground-state solvers and the self-consistent interacting vacuum.

The vacuum is the fixed point of: build H({u}), find its ground state, measure
the tadpole field in that state, feed it back.  Plain fixed-point iteration
from u = 1 converges in a handful of steps for the couplings studied here; an
optional mixing parameter is available as an escape hatch for oscillations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .models import ModelOps, TadpoleField, get_model_ops
from .paulis import CompiledOp, PauliSum, StateVector

GAP_WARN_THRESHOLD = 1e-8


class ConvergenceError(RuntimeError):
    """An iterative solve failed; carries the residual history."""

    def __init__(self, message: str, residual_history: list[float] | None = None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


@dataclass
class EigenOptions:
    """Knobs for :func:`lowest_eigenpair`."""

    dense_cutoff: int = 14        # qubit count up to which the dense path is used
    residual_factor: float = 1e-10  # required ||H v - E v|| relative to the coefficient norm
    arpack_tol: float = 1e-13
    maxiter: int | None = None
    ncv: int | None = None
    v0: np.ndarray | None = None  # warm-start vector for the iterative path


@dataclass
class EigenResult:
    energy: float
    state: StateVector
    residual: float
    gap: float | None
    degenerate: bool
    method: str

    @property
    def vector(self) -> np.ndarray:
        return self.state.amplitudes


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude amplitude real and positive."""
    k = int(np.argmax(np.abs(vec)))
    pivot = vec[k]
    if pivot == 0.0:
        return vec
    return vec * (np.conj(pivot) / abs(pivot))


def lowest_eigenpair(h: PauliSum, options: EigenOptions | None = None) -> EigenResult:
    """Ground-state energy and eigenvector of a Hermitian PauliSum.

    Dense diagonalization up to ``dense_cutoff`` qubits, implicitly
    restarted Lanczos above it.  The returned residual satisfies
    ``||H v - E v|| <= residual_factor * max(1, sum|coeffs|)`` or a
    :class:`ConvergenceError` is raised.
    """
    if not h.is_hermitian():
        raise ValueError("lowest_eigenpair requires a Hermitian operator")
    options = options or EigenOptions()
    scale = max(1.0, h.coefficient_norm())
    return _lowest_from_compiled(h.compiled(), h.n_qubits, scale, options)


def _lowest_from_compiled(
    compiled: CompiledOp, n_qubits: int, scale: float, options: EigenOptions
) -> EigenResult:
    dim = 1 << n_qubits
    if n_qubits <= options.dense_cutoff:
        mat = compiled.to_dense()
        top = min(1, dim - 1)
        evals, evecs = scipy.linalg.eigh(mat, subset_by_index=(0, top))
        energy = float(evals[0])
        vec = evecs[:, 0]
        gap = float(evals[top] - evals[0]) if top else None
        method = "dense"
    else:
        dtype = np.float64 if compiled.is_real() else np.complex128
        v0 = options.v0
        if v0 is not None and dtype == np.float64 and np.iscomplexobj(v0):
            v0 = np.ascontiguousarray(v0.real)
        op = LinearOperator((dim, dim), matvec=compiled.matvec, dtype=dtype)
        try:
            evals, evecs = eigsh(
                op,
                k=2,
                which="SA",
                v0=v0,
                ncv=options.ncv or min(dim - 1, 40),
                tol=options.arpack_tol,
                maxiter=options.maxiter,
            )
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
        order = np.argsort(evals)
        energy = float(evals[order[0]])
        vec = np.ascontiguousarray(evecs[:, order[0]])
        gap = float(evals[order[1]] - evals[order[0]])
        method = "lanczos"
    residual = float(np.linalg.norm(compiled.matvec(vec) - energy * vec))
    if residual > options.residual_factor * scale:
        raise ConvergenceError(
            f"eigenpair residual {residual:.3e} exceeds "
            f"{options.residual_factor:.1e} * scale ({scale:.3e})",
            [residual],
        )
    vec = _fix_phase(vec.astype(np.complex128))
    vec = vec / np.linalg.norm(vec)
    return EigenResult(
        energy=energy,
        state=StateVector(vec),
        residual=residual,
        gap=gap,
        degenerate=(gap is not None and gap < GAP_WARN_THRESHOLD),
        method=method,
    )


@dataclass
class VacuumResult:
    """Converged interacting vacuum of one model instance."""

    state: StateVector
    tadpole: TadpoleField
    total_energy: float
    energy_density: float
    iterations: int
    final_residual: float
    gap_estimate: float | None
    degenerate: bool
    residual_history: list[float] = field(default_factory=list)


def self_consistent_vacuum(
    spec,
    tol: float = 1e-10,
    max_iter: int = 200,
    mixing: float = 1.0,
    eigen_options: EigenOptions | None = None,
) -> VacuumResult:
    """Iterate H({u}) -> ground state -> measured {u} to a fixed point.

    Parameters
    ----------
    spec : ChainSpec | HoneycombSpec
        Model instance; the initial guess is u = 1 on every plaquette.
    tol : float
        Convergence threshold on the max-norm change of the tadpole field.
    max_iter : int
        Iteration budget; exceeding it raises :class:`ConvergenceError`.
    mixing : float
        Update fraction in (0, 1]; 1 is the plain fixed-point iteration.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not 0 < mixing <= 1:
        raise ValueError(f"mixing must lie in (0, 1], got {mixing}")
    ops = get_model_ops(spec)
    options = eigen_options or EigenOptions()
    u = ops.uniform_field()
    history: list[float] = []
    eig = None
    u_measured = u
    for iteration in range(1, max_iter + 1):
        compiled = ops.compiled_hamiltonian(u)
        options.v0 = eig.vector if eig is not None else None
        eig = _lowest_from_compiled(compiled, ops.n_qubits, ops.hamiltonian_scale(u), options)
        u_measured = ops.measure_tadpoles(eig.state)
        residual = u_measured.max_diff(u)
        history.append(residual)
        if residual <= tol:
            return VacuumResult(
                state=eig.state,
                tadpole=u_measured,
                total_energy=eig.energy,
                energy_density=eig.energy / ops.n_plaquettes,
                iterations=iteration,
                final_residual=residual,
                gap_estimate=eig.gap,
                degenerate=eig.degenerate,
                residual_history=history,
            )
        if len(history) >= 6 and all(
            history[-k] >= history[-k - 1] for k in range(1, 6)
        ):
            raise ConvergenceError(
                "tadpole residual non-decreasing for 5 consecutive iterations; "
                "retry with mixing < 1",
                history,
            )
        blended = mixing * u_measured.values + (1.0 - mixing) * u.values
        u = TadpoleField(blended, ops.kind)
    raise ConvergenceError(
        f"self-consistent vacuum did not reach {tol:g} in {max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        history,
    )
