"""Truncated qubit(s) x oscillator Hilbert-space algebra on dense arrays.

Composite basis ordering is fixed everywhere in the package: qubit 1 is the
outermost tensor factor, qubit 2 (if present) comes next, the motional mode
is innermost, row-major.  The flat index of ``(q1, q2, n)`` is
``(2*q1 + q2) * N + n``.  Qubit levels are ordered ``0 = |e>``, ``1 = |g>``
so that the state vector ``(1, 0)`` is the excited state and
``sigma_z |e> = +|e>``.

Simulation units: hbar = 1, trap frequency nu = 1, ground-state width
DELTA = 1, hence ``x = DELTA * (a + a^dag)`` and
``p = i (a^dag - a) / (2 DELTA)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DELTA = 1.0  # ground-state width, sets the length unit

_QUBIT_KETS = {
    "e": np.array([1.0, 0.0], dtype=complex),
    "g": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    "y+": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
    "y-": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0),
}

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "+": np.array([[0, 1], [0, 0]], dtype=complex),  # |e><g|
    "-": np.array([[0, 0], [1, 0]], dtype=complex),  # |g><e|
}


@dataclass(frozen=True)
class HilbertSpace:
    """Composite space of ``n_qubits`` two-level ions sharing one motional mode.

    ``n_qubits = 0`` is allowed for mode-only spaces produced by partial
    traces; protocol spaces always use 1 or 2.
    """

    n_qubits: int
    fock_cutoff: int

    def __post_init__(self):
        if self.n_qubits not in (0, 1, 2):
            raise ValueError(f"n_qubits must be 0, 1 or 2, got {self.n_qubits}")
        if self.fock_cutoff < 2:
            raise ValueError(f"fock_cutoff must be >= 2, got {self.fock_cutoff}")

    @property
    def qubit_dim(self) -> int:
        return 2**self.n_qubits

    @property
    def total_dim(self) -> int:
        return self.qubit_dim * self.fock_cutoff

    def mode_space(self) -> "HilbertSpace":
        return HilbertSpace(0, self.fock_cutoff)


def _check_same_space(a, b):
    if a.space != b.space:
        raise ValueError(f"space mismatch: {a.space} vs {b.space}")


@dataclass(frozen=True)
class Operator:
    """Dense operator on a :class:`HilbertSpace`."""

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError(f"operator shape {m.shape} does not match dim {d}")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.matrix @ other.matrix)

    def commutator(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.matrix @ other.matrix - other.matrix @ self.matrix)


@dataclass(frozen=True)
class StateVector:
    """Pure state; normalized to 1 within 1e-10 at construction."""

    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (self.space.total_dim,):
            raise ValueError(
                f"state length {v.shape} does not match dim {self.space.total_dim}"
            )
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_unnormalized(cls, space: HilbertSpace, v) -> "StateVector":
        v = np.asarray(v, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(space, v / nrm)

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "StateVector") -> complex:
        _check_same_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state; trace 1 and Hermitian within ``tol`` at construction.

    Positivity is monitored (see :meth:`min_eigenvalue`), not enforced.
    """

    space: HilbertSpace
    matrix: np.ndarray
    tol: float = 1e-8

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError(f"density matrix shape {m.shape} does not match dim {d}")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.tol:
            raise ValueError(f"trace(rho) = {tr}, expected 1 within {self.tol}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > self.tol:
            raise ValueError(f"rho not Hermitian: max deviation {herm:.3e}")
        object.__setattr__(self, "matrix", m)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


# ---------------------------------------------------------------------------
# operator constructors
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _mode_annihilation(n: int) -> np.ndarray:
    a = np.zeros((n, n), dtype=complex)
    ns = np.arange(1, n)
    a[ns - 1, ns] = np.sqrt(ns)
    a.setflags(write=False)
    return a


def embed_mode_operator(space: HilbertSpace, mode_matrix: np.ndarray) -> np.ndarray:
    """Identity on all qubits, ``mode_matrix`` on the motional factor."""
    return np.kron(np.eye(space.qubit_dim, dtype=complex), mode_matrix)


def embed_qubit_operator(space: HilbertSpace, qubit_index: int, op2: np.ndarray) -> np.ndarray:
    """``op2`` on the (1-based) qubit ``qubit_index``, identity elsewhere."""
    if not 1 <= qubit_index <= space.n_qubits:
        raise ValueError(
            f"qubit_index {qubit_index} out of range for {space.n_qubits} qubit(s)"
        )
    mats = []
    for q in range(1, space.n_qubits + 1):
        mats.append(op2 if q == qubit_index else np.eye(2, dtype=complex))
    mats.append(np.eye(space.fock_cutoff, dtype=complex))
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim, dtype=complex))


def annihilation(space: HilbertSpace) -> Operator:
    """Mode annihilation operator a with <n-1|a|n> = sqrt(n)."""
    return Operator(space, embed_mode_operator(space, _mode_annihilation(space.fock_cutoff)))


def creation(space: HilbertSpace) -> Operator:
    return annihilation(space).dag()


def number_operator(space: HilbertSpace) -> Operator:
    n = np.diag(np.arange(space.fock_cutoff, dtype=complex))
    return Operator(space, embed_mode_operator(space, n))


def pauli(space: HilbertSpace, qubit_index: int, axis: str) -> Operator:
    """Pauli/ladder operator on the named qubit: axis in {x, y, z, +, -}."""
    if axis not in _PAULI:
        raise ValueError(f"unknown axis {axis!r}; expected one of {sorted(_PAULI)}")
    return Operator(space, embed_qubit_operator(space, qubit_index, _PAULI[axis]))


def position(space: HilbertSpace) -> Operator:
    """x = DELTA (a + a^dag)."""
    a = _mode_annihilation(space.fock_cutoff)
    return Operator(space, embed_mode_operator(space, DELTA * (a + a.conj().T)))


def momentum(space: HilbertSpace) -> Operator:
    """p = i (a^dag - a) / (2 DELTA)."""
    a = _mode_annihilation(space.fock_cutoff)
    return Operator(space, embed_mode_operator(space, 1j * (a.conj().T - a) / (2 * DELTA)))


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------


def qubit_ket(label) -> np.ndarray:
    """2-vector for a qubit label ('e','g','+','-','y+','y-') or a raw pair."""
    if isinstance(label, str):
        try:
            return _QUBIT_KETS[label].copy()
        except KeyError:
            raise ValueError(f"unknown qubit label {label!r}") from None
    v = np.asarray(label, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise ValueError("qubit ket must have length 2")
    return v / np.linalg.norm(v)


def fock_amplitudes(fock_cutoff: int, n: int) -> np.ndarray:
    if not 0 <= n < fock_cutoff:
        raise ValueError(f"Fock index {n} outside cutoff {fock_cutoff}")
    v = np.zeros(fock_cutoff, dtype=complex)
    v[n] = 1.0
    return v


def product_state(space: HilbertSpace, qubit_labels, mode) -> StateVector:
    """Tensor product of per-qubit kets and a mode ket.

    ``qubit_labels`` is a sequence of labels/2-vectors (len = n_qubits);
    ``mode`` is a Fock index or an amplitude vector of length fock_cutoff.
    """
    labels = list(qubit_labels)
    if len(labels) != space.n_qubits:
        raise ValueError(f"expected {space.n_qubits} qubit labels, got {len(labels)}")
    if isinstance(mode, (int, np.integer)):
        mode_vec = fock_amplitudes(space.fock_cutoff, int(mode))
    else:
        mode_vec = np.asarray(mode, dtype=complex).reshape(-1)
        if mode_vec.shape != (space.fock_cutoff,):
            raise ValueError("mode vector length does not match fock_cutoff")
    out = np.array([1.0], dtype=complex)
    for lab in labels:
        out = np.kron(out, qubit_ket(lab))
    out = np.kron(out, mode_vec)
    return StateVector.from_unnormalized(space, out)


# ---------------------------------------------------------------------------
# expectations, fidelity, reductions
# ---------------------------------------------------------------------------


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """Tr[rho op]."""
    _check_same_space(rho, op)
    return complex(np.trace(rho.matrix @ op.matrix))


def expectation_state(psi: StateVector, op: Operator) -> complex:
    """<psi| op |psi>."""
    _check_same_space(psi, op)
    return complex(np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes))


def fidelity(rho: DensityMatrix, psi: StateVector) -> float:
    """F = Tr[rho |psi><psi|] = <psi|rho|psi>, clipped to [0, 1]."""
    _check_same_space(rho, psi)
    val = np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes).real
    if val < -1e-10:
        raise ValueError(f"fidelity {val} below -1e-10; rho is not a valid state")
    return float(min(max(val, 0.0), 1.0))


def state_fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<psi|phi>|^2 for pure states."""
    return float(abs(psi.overlap(phi)) ** 2)


def _rho_as_tensor(rho_mat: np.ndarray, space: HilbertSpace) -> np.ndarray:
    q, n = space.qubit_dim, space.fock_cutoff
    return rho_mat.reshape(q, n, q, n)


def partial_trace_qubits(rho: DensityMatrix) -> DensityMatrix:
    """Trace out all qubits, keeping the motional mode."""
    t = _rho_as_tensor(rho.matrix, rho.space)
    mode = np.einsum("qnqm->nm", t)
    return DensityMatrix(rho.space.mode_space(), mode)


def partial_trace_mode(rho: DensityMatrix) -> np.ndarray:
    """Trace out the mode; returns the qubit-factor matrix (2^nq x 2^nq)."""
    t = _rho_as_tensor(rho.matrix, rho.space)
    return np.einsum("qnrn->qr", t)


def qubit_projector(space: HilbertSpace, qubit_index: int, ket) -> Operator:
    """|u><u| on one qubit, identity elsewhere."""
    u = qubit_ket(ket)
    return Operator(space, embed_qubit_operator(space, qubit_index, np.outer(u, u.conj())))


def project_qubit(rho: DensityMatrix, qubit_index: int, ket) -> np.ndarray:
    """Mode matrix <u|_q rho |u>_q with any remaining qubit traced out.

    The result is an unnormalized contraction whose trace is the probability
    weight of the |u> component; the frame-decoding rules build on it.
    """
    u = qubit_ket(ket)
    space = rho.space
    if not 1 <= qubit_index <= space.n_qubits:
        raise ValueError(f"qubit_index {qubit_index} out of range")
    n = space.fock_cutoff
    shape = (2,) * space.n_qubits + (n,)
    t = rho.matrix.reshape(shape + shape)
    if space.n_qubits == 1:
        return np.einsum("a,anbm,b->nm", u.conj(), t, u)
    if qubit_index == 1:
        return np.einsum("a,acnbcm,b->nm", u.conj(), t, u)
    return np.einsum("a,cancbm,b->nm", u.conj(), t, u)


# ---------------------------------------------------------------------------
# position-space reconstruction
# ---------------------------------------------------------------------------


def oscillator_eigenfunctions(n_max: int, x: np.ndarray, delta: float = DELTA) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions phi_0..phi_{n_max-1} on a grid.

    Uses the stable two-term recurrence of normalized Hermite functions;
    phi_n has width set by ``delta`` (ground state variance delta^2).
    Returns an array of shape (n_max, len(x)).
    """
    x = np.asarray(x, dtype=float)
    xi = x / (np.sqrt(2.0) * delta)
    out = np.zeros((n_max, x.size))
    h_prev = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    out[0] = h_prev
    if n_max > 1:
        h = np.sqrt(2.0) * xi * h_prev
        out[1] = h
        for n in range(1, n_max - 1):
            h, h_prev = xi * np.sqrt(2.0 / (n + 1)) * h - np.sqrt(n / (n + 1)) * h_prev, h
            out[n + 1] = h
    return out / np.sqrt(np.sqrt(2.0) * delta)


def position_distribution(rho: DensityMatrix, x_grid: np.ndarray) -> np.ndarray:
    """P(x) of the motional reduced state on a grid of positions.

    P(x) = sum_{n,m} rho~_{nm} phi_n(x) phi_m(x) with rho~ the qubit-traced
    mode matrix.  Small negative excursions from truncation are tolerated to
    -1e-9 and clipped.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if not np.all(np.isfinite(x_grid)):
        raise ValueError("x_grid must be finite")
    mode = rho.matrix if rho.space.n_qubits == 0 else partial_trace_qubits(rho).matrix
    phi = oscillator_eigenfunctions(rho.space.fock_cutoff, x_grid)
    p = np.einsum("nx,nm,mx->x", phi, mode, phi).real
    if p.min() < -1e-9:
        raise ValueError(f"position distribution negative beyond tolerance: {p.min():.3e}")
    return np.clip(p, 0.0, None)


def mode_position_distribution(mode_matrix: np.ndarray, x_grid: np.ndarray,
                               normalize: bool = False) -> np.ndarray:
    """P(x) for a bare mode matrix (possibly unnormalized contraction)."""
    x_grid = np.asarray(x_grid, dtype=float)
    phi = oscillator_eigenfunctions(mode_matrix.shape[0], x_grid)
    p = np.einsum("nx,nm,mx->x", phi, mode_matrix, phi).real
    if normalize:
        w = np.trace(mode_matrix).real
        if w > 0:
            p = p / w
    return p
