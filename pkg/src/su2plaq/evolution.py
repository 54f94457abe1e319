"""Finite-time-step state evolution with dynamical local tadpole improvement.

Each step applies the full-Hamiltonian propagator exp(-i H dt) (no Trotter
splitting).  In dynamical mode the tadpole field entering H is iterated to
self-consistency within the step: propagate from psi(t) under H({u}), measure
{u'} at the end of the step, and repeat from psi(t) until the field stops
moving.  The unimproved (u = 1) and vacuum-improved (u = u_vacuum) baselines
propagate under a fixed Hamiltonian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .ground_state import ConvergenceError, VacuumResult
from .models import TadpoleField, get_model_ops
from .paulis import PauliSum, StateVector

MODES = ("dynamical", "unimproved", "vacuum")
NORM_DRIFT_TOL = 1e-10
DENSE_PROPAGATOR_CUTOFF = 12
MAX_HALVINGS = 10


class PropagationError(RuntimeError):
    """A propagation step could not be completed to tolerance."""


@dataclass
class EvolutionConfig:
    dt: float = 0.025
    t_max: float = 10.0
    mode: str = "dynamical"
    sc_tol: float = 1e-10
    sc_max_iter: int = 100
    propagator_tol: float = 1e-12
    krylov_dim: int = 30
    record_every: int = 1
    mixing: float = 1.0
    # Diagnostic hook: when set, the measured field in dynamical mode is
    # replaced by this constant, pinning the improvement factors.
    pin_field: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_max < self.dt:
            raise ValueError(f"t_max must be at least dt, got {self.t_max}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.sc_tol > 0:
            raise ValueError(f"sc_tol must be positive, got {self.sc_tol}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if not 0 < self.mixing <= 1:
            raise ValueError(f"mixing must lie in (0, 1], got {self.mixing}")


@dataclass
class TimeRecord:
    t: float
    electric: np.ndarray        # per-plaquette electric energy
    tadpole: np.ndarray         # measured u^4 / u^6 per plaquette
    iterations: int             # self-consistency passes (0 for fixed modes)
    residual: float | None      # final field residual (None for fixed modes)
    energy: float               # <H> under the instantaneous Hamiltonian
    norm: float


@dataclass
class TimeSeries:
    mode: str
    plaquette_labels: list[str]
    records: list[TimeRecord] = field(default_factory=list)
    # Residual sequence of every dynamical step, in step order.
    residual_traces: list[list[float]] = field(default_factory=list)
    final_state: StateVector | None = None

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquette_labels)

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def electric_matrix(self) -> np.ndarray:
        """Records x plaquettes array of electric energies."""
        return np.array([r.electric for r in self.records])

    def tadpole_matrix(self) -> np.ndarray:
        return np.array([r.tadpole for r in self.records])


# -- propagators -------------------------------------------------------------


def _lanczos_expm_once(matvec, v: np.ndarray, dt: float, tol: float, m_max: int):
    """One Krylov approximation of exp(-i dt H) v.

    Returns (vector, converged).  Convergence is declared when successive
    subspace enlargements change the result by less than ``tol`` in norm, or
    on Lanczos breakdown (invariant subspace).
    """
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0.0:
        return v.copy(), True
    basis = np.empty((m_max, v.size), dtype=np.complex128)
    basis[0] = v / beta0
    alphas: list[float] = []
    betas: list[float] = []
    previous = None
    for m in range(1, m_max + 1):
        w = matvec(basis[m - 1])
        w = np.asarray(w, dtype=np.complex128)
        alphas.append(float(np.vdot(basis[m - 1], w).real))
        w -= alphas[-1] * basis[m - 1]
        if m > 1:
            w -= betas[-1] * basis[m - 2]
        # full reorthogonalization against the current basis (one pass)
        w -= basis[:m].T @ (basis[:m].conj() @ w)
        evals, evecs = scipy.linalg.eigh_tridiagonal(alphas, betas)
        coeff = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
        result = beta0 * (basis[:m].T @ coeff)
        beta = float(np.linalg.norm(w))
        if previous is not None and float(np.linalg.norm(result - previous)) <= tol:
            return result, True
        if beta <= 1e-14 * max(1.0, max(abs(a) for a in alphas)):
            return result, True
        if m == m_max:
            return result, False
        betas.append(beta)
        basis[m] = w / beta
        previous = result


def _krylov_propagate(matvec, v, dt, tol, m_max, depth: int = 0) -> np.ndarray:
    result, converged = _lanczos_expm_once(matvec, v, dt, tol, m_max)
    if converged:
        return result
    if depth >= MAX_HALVINGS:
        raise PropagationError(
            f"Krylov propagator failed to reach {tol:g} at subspace size {m_max} "
            f"after {MAX_HALVINGS} dt halvings"
        )
    half = _krylov_propagate(matvec, v, dt / 2.0, tol, m_max, depth + 1)
    return _krylov_propagate(matvec, half, dt / 2.0, tol, m_max, depth + 1)


def _checked_norm(amps: np.ndarray) -> tuple[np.ndarray, float]:
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > NORM_DRIFT_TOL:
        raise PropagationError(
            f"state norm drifted to {norm!r} (beyond {NORM_DRIFT_TOL:g}) during propagation"
        )
    return amps / norm, norm


def step_propagate(
    psi: StateVector,
    h: PauliSum,
    dt: float,
    *,
    tol: float = 1e-12,
    krylov_dim: int = 30,
    method: str = "auto",
) -> StateVector:
    """exp(-i H dt)|psi>, renormalized against sub-tolerance drift.

    ``method="auto"`` uses the dense matrix exponential up to
    ``DENSE_PROPAGATOR_CUTOFF`` qubits and the Krylov propagator above;
    ``"dense"``/``"krylov"`` force one path.
    """
    if psi.n_qubits != h.n_qubits:
        raise ValueError(f"qubit count mismatch: state {psi.n_qubits}, operator {h.n_qubits}")
    if not h.is_hermitian():
        raise ValueError("step_propagate requires a Hermitian Hamiltonian")
    if dt == 0.0:
        return psi
    if method == "auto":
        method = "dense" if h.n_qubits <= DENSE_PROPAGATOR_CUTOFF else "krylov"
    if method == "dense":
        propagator = scipy.linalg.expm(-1j * dt * h.to_dense())
        amps = propagator @ psi.amplitudes
    elif method == "krylov":
        amps = _krylov_propagate(h.compiled().matvec, psi.amplitudes, dt, tol, krylov_dim)
    else:
        raise ValueError(f"unknown method {method!r}")
    amps, _ = _checked_norm(amps)
    return StateVector(amps)


# -- initial states ----------------------------------------------------------


def prepare_initial_state(kind: str, spec, vacuum: VacuumResult | None = None) -> StateVector:
    """psi1: one excited plaquette on the trivial vacuum (qubit 0 set).
    psi2: normalized image of the interacting vacuum under plaquette 0."""
    ops = get_model_ops(spec)
    if kind == "psi1":
        return StateVector.basis_state(ops.n_qubits, 1)
    if kind == "psi2":
        if vacuum is None:
            raise ValueError("psi2 requires a converged VacuumResult")
        image = ops.plaquette_ops()[0].apply(vacuum.state)
        norm = image.norm()
        if norm < 1e-12:
            raise RuntimeError("plaquette image of the vacuum has zero norm")
        return StateVector(image.amplitudes / norm)
    raise ValueError(f"unknown initial state kind {kind!r} (expected 'psi1' or 'psi2')")


# -- the time loop -----------------------------------------------------------


def evolve(
    psi0: StateVector,
    spec,
    vacuum: VacuumResult | None = None,
    config: EvolutionConfig | None = None,
    on_record=None,
) -> TimeSeries:
    """Propagate ``psi0`` under the configured mode and record observables.

    Dynamical mode self-consistently re-propagates each step from psi(t)
    until the end-of-step tadpole measurement reproduces the field used to
    build H; the converged field of step t seeds the iteration at t + dt.
    """
    cfg = config or EvolutionConfig()
    ops = get_model_ops(spec)
    if psi0.n_qubits != ops.n_qubits:
        raise ValueError(f"initial state has {psi0.n_qubits} qubits, model needs {ops.n_qubits}")
    if cfg.mode == "vacuum" and vacuum is None:
        raise ValueError("vacuum mode requires a converged VacuumResult")

    def measure_field(amps: np.ndarray) -> TadpoleField:
        if cfg.pin_field is not None:
            return ops.uniform_field(cfg.pin_field)
        return ops.measure_tadpoles(StateVector.raw(amps))

    fixed_compiled = None
    if cfg.mode == "unimproved":
        fixed_compiled = ops.compiled_hamiltonian(ops.uniform_field())
    elif cfg.mode == "vacuum":
        fixed_compiled = ops.compiled_hamiltonian(vacuum.tadpole)

    series = TimeSeries(mode=cfg.mode, plaquette_labels=list(ops.plaquette_labels))
    amps = psi0.amplitudes
    u_current = measure_field(amps)

    def record(t, amps, u_field, iterations, residual):
        psi = StateVector.raw(amps)
        compiled_h = (
            fixed_compiled if fixed_compiled is not None
            else ops.compiled_hamiltonian(u_field)
        )
        entry = TimeRecord(
            t=t,
            electric=ops.measure_electric_profile(psi),
            tadpole=u_field.values.copy(),
            iterations=iterations,
            residual=residual,
            energy=compiled_h.expectation(amps).real,
            norm=float(np.linalg.norm(amps)),
        )
        series.records.append(entry)
        if on_record is not None:
            on_record(entry)

    record(0.0, amps, u_current, 0, None)
    n_steps = int(math.floor(cfg.t_max / cfg.dt + 1e-9))
    for step in range(1, n_steps + 1):
        if fixed_compiled is not None:
            amps_new = _krylov_propagate(
                fixed_compiled.matvec, amps, cfg.dt, cfg.propagator_tol, cfg.krylov_dim
            )
            iterations, residual = 0, None
            u_new = measure_field(amps_new)
        else:
            u_guess = u_current
            trace: list[float] = []
            for iterations in range(1, cfg.sc_max_iter + 1):
                compiled = ops.compiled_hamiltonian(u_guess)
                amps_new = _krylov_propagate(
                    compiled.matvec, amps, cfg.dt, cfg.propagator_tol, cfg.krylov_dim
                )
                u_measured = measure_field(amps_new)
                residual = u_measured.max_diff(u_guess)
                trace.append(residual)
                if residual <= cfg.sc_tol:
                    break
                blended = cfg.mixing * u_measured.values + (1.0 - cfg.mixing) * u_guess.values
                u_guess = TadpoleField(blended, ops.kind)
            else:
                raise ConvergenceError(
                    f"step {step}: tadpole field not self-consistent after "
                    f"{cfg.sc_max_iter} passes (residual {trace[-1]:.3e})",
                    trace,
                )
            u_new = u_measured
            series.residual_traces.append(trace)
        amps, _ = _checked_norm(amps_new)
        u_current = u_new
        if step % cfg.record_every == 0:
            record(step * cfg.dt, amps, u_current, iterations, residual)
    series.final_state = StateVector(amps)
    return series
