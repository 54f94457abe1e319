"""Bit-mask Pauli-string algebra and state vectors.

Conventions used throughout the package:

* Qubit ``k`` is bit ``k`` of the basis index (little-endian), and ``|0>``
  is the +1 eigenstate of ``Z``.
* A term ``(coeff, PauliString(x, z))`` denotes ``coeff * X^x Z^z`` with the
  X factors standing to the left of the Z factors on each site.  A site with
  both bits set carries ``XZ = -iY``; any residual phase lives in the
  coefficient, never in the masks.
* Action on a basis state: ``X^x Z^z |b> = (-1)^popcount(z & b) |b ^ x>``.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

COEFF_PRUNE_TOL = 1e-15
HERMITIAN_IMAG_TOL = 1e-12
NORM_TOL = 1e-12
DENSE_QUBIT_LIMIT = 14

_INDEX_CACHE: dict[int, np.ndarray] = {}


def basis_indices(n_qubits: int) -> np.ndarray:
    """All basis indices 0..2^n-1 as a cached read-only int64 array."""
    idx = _INDEX_CACHE.get(n_qubits)
    if idx is None:
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        idx.flags.writeable = False
        _INDEX_CACHE[n_qubits] = idx
    return idx


def _z_signs(z_mask: int, n_qubits: int) -> np.ndarray:
    """(-1)**popcount(z_mask & b) over all basis indices b (float64)."""
    if z_mask == 0:
        return np.ones(1 << n_qubits)
    parity = np.bitwise_count(basis_indices(n_qubits) & z_mask).astype(np.int64) & 1
    return 1.0 - 2.0 * parity


def _xor_permuted(arr: np.ndarray, x_mask: int, n_qubits: int) -> np.ndarray:
    """View of ``arr`` reindexed as arr[b ^ x_mask] (axis flips, no copy)."""
    axes = tuple(n_qubits - 1 - k for k in range(n_qubits) if (x_mask >> k) & 1)
    flipped = np.flip(arr.reshape((2,) * n_qubits), axis=axes)
    return flipped.reshape(arr.shape)


class PauliString(NamedTuple):
    """A single Pauli string encoded as X/Z bit masks."""

    x_mask: int
    z_mask: int

    def weight(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()


def _mul_strings(a: PauliString, b: PauliString) -> tuple[int, PauliString]:
    """Product a*b up to sign: returns (sign, string). Sign from Z^z1 X^x2 reordering."""
    sign = -1 if (a.z_mask & b.x_mask).bit_count() & 1 else 1
    return sign, PauliString(a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask)


def _adjoint_sign(s: PauliString) -> int:
    # (X^x Z^z)^dag = Z^z X^x = (-1)^popcount(x & z) X^x Z^z
    return -1 if (s.x_mask & s.z_mask).bit_count() & 1 else 1


class PauliSum:
    """Canonicalized weighted sum of Pauli strings on a fixed qubit register.

    Instances are immutable after construction: arithmetic returns new
    objects, and the internal term table is never exposed mutably.  Terms
    with coefficient magnitude below ``COEFF_PRUNE_TOL`` are dropped during
    canonicalization.
    """

    __slots__ = ("n_qubits", "_terms", "_compiled")

    def __init__(self, n_qubits: int, terms: Iterable[tuple[complex, PauliString]] = ()):
        if n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {n_qubits}")
        self.n_qubits = int(n_qubits)
        table: dict[PauliString, complex] = {}
        limit = 1 << n_qubits
        for coeff, string in terms:
            if not isinstance(string, PauliString):
                string = PauliString(*string)
            if string.x_mask >= limit or string.z_mask >= limit or string.x_mask < 0 or string.z_mask < 0:
                raise ValueError(f"mask {string} out of range for {n_qubits} qubits")
            table[string] = table.get(string, 0.0) + complex(coeff)
        self._terms = {s: c for s, c in table.items() if abs(c) > COEFF_PRUNE_TOL}
        self._compiled: CompiledOp | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, [(coeff, PauliString(0, 0))])

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits, [])

    @classmethod
    def x(cls, site: int, n_qubits: int) -> "PauliSum":
        _check_site(site, n_qubits)
        return cls(n_qubits, [(1.0, PauliString(1 << site, 0))])

    @classmethod
    def z(cls, site: int, n_qubits: int) -> "PauliSum":
        _check_site(site, n_qubits)
        return cls(n_qubits, [(1.0, PauliString(0, 1 << site))])

    @classmethod
    def y(cls, site: int, n_qubits: int) -> "PauliSum":
        # Y = i * XZ
        _check_site(site, n_qubits)
        return cls(n_qubits, [(1.0j, PauliString(1 << site, 1 << site))])

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> tuple[tuple[complex, PauliString], ...]:
        """Canonical term list, deterministically ordered."""
        return tuple((self._terms[s], s) for s in sorted(self._terms))

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, string: PauliString) -> complex:
        return self._terms.get(string, 0.0)

    def coefficient_norm(self) -> float:
        """Sum of |coefficients|; cheap upper bound on the operator norm."""
        return float(sum(abs(c) for c in self._terms.values()))

    def is_real(self) -> bool:
        """True if every canonical coefficient is real (operator real in this basis)."""
        return all(abs(c.imag) <= COEFF_PRUNE_TOL * max(1.0, abs(c)) for c in self._terms.values())

    def adjoint(self) -> "PauliSum":
        return PauliSum(
            self.n_qubits,
            [(np.conj(c) * _adjoint_sign(s), s) for s, c in self._terms.items()],
        )

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Term-by-term comparison against the adjoint."""
        for s, c in self._terms.items():
            required = np.conj(c) * _adjoint_sign(s)
            if abs(c - required) > tol * max(1.0, abs(c)):
                return False
        return True

    # -- arithmetic --------------------------------------------------------

    def _require_same_register(self, other: "PauliSum") -> None:
        if self.n_qubits != other.n_qubits:
            raise ValueError(
                f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}"
            )

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._require_same_register(other)
        merged = dict(self._terms)
        for s, c in other._terms.items():
            merged[s] = merged.get(s, 0.0) + c
        return PauliSum(self.n_qubits, [(c, s) for s, c in merged.items()])

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __neg__(self) -> "PauliSum":
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return multiply(self, other)
        return PauliSum(self.n_qubits, [(c * other, s) for s, c in self._terms.items()])

    def __rmul__(self, scalar) -> "PauliSum":
        return PauliSum(self.n_qubits, [(c * scalar, s) for s, c in self._terms.items()])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self._terms)})"

    # -- numerics ----------------------------------------------------------

    def compiled(self) -> "CompiledOp":
        """x-mask-grouped form for fast application; cached per instance."""
        if self._compiled is None:
            self._compiled = CompiledOp.from_terms(self.n_qubits, self._terms.items())
        return self._compiled

    def apply(self, psi: "StateVector", chunk_size: int | None = None) -> "StateVector":
        """op|psi> without renormalization."""
        if psi.n_qubits != self.n_qubits:
            raise ValueError(
                f"qubit count mismatch: operator {self.n_qubits}, state {psi.n_qubits}"
            )
        return StateVector.raw(self.compiled().matvec(psi.amplitudes, chunk_size=chunk_size))

    def expectation(self, psi: "StateVector") -> complex | float:
        """<psi|op|psi>; the real part alone when the operator is Hermitian."""
        if psi.n_qubits != self.n_qubits:
            raise ValueError(
                f"qubit count mismatch: operator {self.n_qubits}, state {psi.n_qubits}"
            )
        value = complex(np.vdot(psi.amplitudes, self.compiled().matvec(psi.amplitudes)))
        if self.is_hermitian():
            scale = max(1.0, self.coefficient_norm())
            if abs(value.imag) > HERMITIAN_IMAG_TOL * scale:
                raise RuntimeError(
                    f"Hermitian operator produced imaginary expectation {value.imag:g}"
                )
            return value.real
        return value

    def to_dense(self) -> np.ndarray:
        """Explicit 2^n x 2^n complex matrix; refuses above DENSE_QUBIT_LIMIT qubits."""
        if self.n_qubits > DENSE_QUBIT_LIMIT:
            raise ValueError(
                f"to_dense refused for {self.n_qubits} qubits "
                f"(limit {DENSE_QUBIT_LIMIT}: the dense matrix would hold "
                f"4^{self.n_qubits} complex entries)"
            )
        dim = 1 << self.n_qubits
        idx = basis_indices(self.n_qubits)
        mat = np.zeros((dim, dim), dtype=complex)
        for s, c in self._terms.items():
            # column b maps to row b ^ x with sign from the Z mask
            mat[idx ^ s.x_mask, idx] += c * _z_signs(s.z_mask, self.n_qubits)
        return mat


def _check_site(site: int, n_qubits: int) -> None:
    if not 0 <= site < n_qubits:
        raise IndexError(f"site {site} out of range for {n_qubits} qubits")


def projector(site: int, which: int, n_qubits: int) -> PauliSum:
    """Projector onto |0> (which=0) or |1> (which=1) at one site: (I +/- Z)/2."""
    _check_site(site, n_qubits)
    if which not in (0, 1):
        raise ValueError(f"which must be 0 or 1, got {which}")
    sign = 1.0 if which == 0 else -1.0
    return PauliSum(
        n_qubits,
        [(0.5, PauliString(0, 0)), (0.5 * sign, PauliString(0, 1 << site))],
    )


def multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product with Pauli-algebra phase bookkeeping."""
    a._require_same_register(b)
    table: dict[PauliString, complex] = {}
    for sa, ca in a._terms.items():
        for sb, cb in b._terms.items():
            sign, s = _mul_strings(sa, sb)
            table[s] = table.get(s, 0.0) + ca * cb * sign
    return PauliSum(a.n_qubits, [(c, s) for s, c in table.items()])


try:  # the fused kernels are optional; every path has a NumPy fallback
    from . import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


class CompiledOp:
    """A PauliSum grouped by X mask for fast state-vector application.

    Row ``g`` of ``weights`` holds the diagonal coefficient array
    ``w[b] = sum_z c_{x,z} (-1)^popcount(z & b)`` of the group with X mask
    ``xs[g]``, so that ``(op v)[b ^ x] += w[b] v[b]``.  Weights stay float64
    whenever every coefficient is real, which halves memory traffic for the
    gauge Hamiltonians built here; application then runs through a fused
    multithreaded kernel when available.
    """

    __slots__ = ("n_qubits", "xs", "weights")

    def __init__(self, n_qubits: int, xs: np.ndarray, weights: np.ndarray):
        self.n_qubits = n_qubits
        self.xs = np.asarray(xs, dtype=np.int64)
        self.weights = weights

    @property
    def groups(self) -> tuple[tuple[int, np.ndarray], ...]:
        return tuple((int(x), self.weights[g]) for g, x in enumerate(self.xs))

    @classmethod
    def from_terms(cls, n_qubits: int, terms) -> "CompiledOp":
        by_x: dict[int, list[tuple[PauliString, complex]]] = {}
        for s, c in terms:
            by_x.setdefault(s.x_mask, []).append((s, c))
        xs = sorted(by_x)
        real = all(
            abs(c.imag) <= COEFF_PRUNE_TOL * max(1.0, abs(c))
            for members in by_x.values()
            for _, c in members
        )
        weights = np.zeros((len(xs), 1 << n_qubits), dtype=np.float64 if real else np.complex128)
        for g, x in enumerate(xs):
            for s, c in by_x[x]:
                weights[g] += (c.real if real else c) * _z_signs(s.z_mask, n_qubits)
        return cls(n_qubits, np.array(xs, dtype=np.int64), weights)

    @classmethod
    def combine(
        cls,
        parts: Sequence[tuple[complex, "CompiledOp"]],
        reuse: "CompiledOp | None" = None,
    ) -> "CompiledOp":
        """Weighted sum of compiled operators without re-deriving sign arrays.

        ``reuse`` may supply a previous result whose buffers are overwritten
        in place when the group layout matches (the assembly path of the
        self-consistency loops).
        """
        if not parts:
            raise ValueError("combine requires at least one part")
        n = parts[0][1].n_qubits
        coeffs: dict[int, list[tuple[complex, np.ndarray]]] = {}
        for coeff, op in parts:
            if op.n_qubits != n:
                raise ValueError("qubit count mismatch in combine")
            c = complex(coeff)
            if c == 0:
                continue
            for g, x in enumerate(op.xs):
                coeffs.setdefault(int(x), []).append((c, op.weights[g]))
        xs = np.array(sorted(coeffs), dtype=np.int64)
        complex_result = any(
            c.imag != 0.0 or np.iscomplexobj(w) for rows in coeffs.values() for c, w in rows
        )
        dtype = np.complex128 if complex_result else np.float64
        if (
            reuse is not None
            and reuse.weights.shape == (len(xs), 1 << n)
            and reuse.weights.dtype == dtype
            and np.array_equal(reuse.xs, xs)
        ):
            weights = reuse.weights
        else:
            weights = np.empty((len(xs), 1 << n), dtype=dtype)
        for g, x in enumerate(xs):
            rows = coeffs[int(x)]
            c0, w0 = rows[0]
            np.multiply(w0, c0 if complex_result else c0.real, out=weights[g])
            for c, w in rows[1:]:
                weights[g] += (c if complex_result else c.real) * w
        return cls(n, xs, weights)

    def is_real(self) -> bool:
        return not np.iscomplexobj(self.weights)

    def matvec(self, vec: np.ndarray, chunk_size: int | None = None) -> np.ndarray:
        dim = 1 << self.n_qubits
        if vec.shape != (dim,):
            raise ValueError(f"vector length {vec.shape} does not match {dim}")
        if chunk_size is not None:
            return self._matvec_chunked(vec, chunk_size)
        if (
            _kernels is not None
            and self.is_real()
            and vec.dtype in (np.float64, np.complex128)
            and vec.flags.c_contiguous
            and self.weights.flags.c_contiguous
        ):
            out = np.empty(dim, dtype=vec.dtype)
            if vec.dtype == np.float64:
                _kernels.apply_real(self.xs, self.weights, vec, out)
            else:
                _kernels.apply_real_complexvec(self.xs, self.weights, vec, out)
            return out
        return self.matvec_numpy(vec)

    def matvec_numpy(self, vec: np.ndarray) -> np.ndarray:
        """Pure-NumPy reference path (single pass per group)."""
        out_dtype = np.result_type(vec.dtype, self.weights.dtype)
        out = np.zeros(vec.size, dtype=out_dtype)
        for g, x in enumerate(self.xs):
            contrib = self.weights[g] * vec
            x = int(x)
            if x == 0:
                out += contrib
            elif x & (x - 1) == 0:
                # single flipped bit: swap the two halves along that axis
                k = x.bit_length() - 1
                c3 = contrib.reshape(-1, 2, 1 << k)
                o3 = out.reshape(-1, 2, 1 << k)
                o3[:, 0, :] += c3[:, 1, :]
                o3[:, 1, :] += c3[:, 0, :]
            else:
                out += _xor_permuted(contrib, x, self.n_qubits)
        return out

    def _matvec_chunked(self, vec: np.ndarray, chunk_size: int) -> np.ndarray:
        out_dtype = np.result_type(vec.dtype, self.weights.dtype)
        out = np.zeros(vec.size, dtype=out_dtype)
        idx = basis_indices(self.n_qubits)
        for lo in range(0, vec.size, chunk_size):
            sl = slice(lo, min(lo + chunk_size, vec.size))
            for g, x in enumerate(self.xs):
                out[idx[sl] ^ int(x)] += self.weights[g][sl] * vec[sl]
        return out

    def expectation(self, vec: np.ndarray) -> complex:
        return complex(np.vdot(vec, self.matvec(vec)))

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > DENSE_QUBIT_LIMIT:
            raise ValueError(f"to_dense refused for {self.n_qubits} qubits")
        dim = 1 << self.n_qubits
        idx = basis_indices(self.n_qubits)
        mat = np.zeros((dim, dim), dtype=self.weights.dtype)
        for g, x in enumerate(self.xs):
            mat[idx ^ int(x), idx] += self.weights[g]
        return mat


class StateVector:
    """Normalized complex amplitudes over the 2^n computational basis.

    ``StateVector(...)`` checks the norm (within ``NORM_TOL``); operator
    images and other intentionally unnormalized vectors go through
    :meth:`raw`.  Amplitudes are read-only once wrapped.
    """

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes: np.ndarray, *, _check: bool = True):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise ValueError(f"amplitude array of length {amps.size} is not 2^n, n >= 1")
        if amps is amplitudes or amps.base is not None:
            amps = amps.copy()
        n = amps.size.bit_length() - 1
        if _check:
            norm = float(np.linalg.norm(amps))
            if abs(norm - 1.0) > NORM_TOL:
                raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        amps.flags.writeable = False
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def raw(cls, amplitudes: np.ndarray) -> "StateVector":
        """Wrap without the unit-norm check (operator images, zero vectors)."""
        return cls(amplitudes, _check=False)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int) -> "StateVector":
        if not 0 <= index < (1 << n_qubits):
            raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def zero_state(cls, n_qubits: int) -> "StateVector":
        """The all-|0> product state."""
        return cls.basis_state(n_qubits, 0)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / norm)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"
