"""Master-equation integrator with heating, loss, dephasing and emission.

    drho/dt = -i [H(t), rho] + G_h L(a^dag) rho + G_c L(a) rho
              + sum_q [G_phi L(sigma^z_q) rho + G_- L(sigma^-_q) rho],

with L(X) rho = (2 X rho X^dag - X^dag X rho - rho X^dag X) / 2.  Qubit
channels act independently on every physical qubit present (per-qubit rate
overrides are available for sensitivity studies).

Integration is classic fixed-step 4th-order Runge-Kutta; the state is
re-Hermitized each step and trace/Hermiticity/positivity are monitored.
Two right-hand-side implementations exist: a generic dense one (reference,
accepts any Hamiltonian callable) and a structured one used when the
Hamiltonian is given as :class:`~ionparity.ion_model.CompiledDrives`, which
runs in O(dim^2) per evaluation.  Both are cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .hilbert import DensityMatrix, HilbertSpace, Operator, StateVector
from .ion_model import CompiledDrives, DeviceParams, NU

TWO_PI = 2.0 * math.pi

TRACE_TOL = 1e-8
POSITIVITY_FLOOR = -1e-6
HERMITICITY_DRIFT_TOL = 1e-6


class IntegratorError(RuntimeError):
    """Raised when a monitored state invariant is violated during a run."""


@dataclass(frozen=True)
class NoiseParams:
    """Decoherence rates in units of the trap frequency.

    ``qubit_phi_scale`` / ``qubit_minus_scale`` optionally rescale the
    dephasing / emission rate per qubit (1-based order); empty means the
    same rate on every qubit.
    """

    gamma_h: float = 0.0
    gamma_c: float = 0.0
    gamma_phi: float = 0.0
    gamma_minus: float = 0.0
    qubit_phi_scale: tuple[float, ...] = ()
    qubit_minus_scale: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("gamma_h", "gamma_c", "gamma_phi", "gamma_minus"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def from_device(cls, device: DeviceParams) -> "NoiseParams":
        return cls(device.gamma_h, device.gamma_c, device.gamma_phi, device.gamma_minus)

    @classmethod
    def zero(cls) -> "NoiseParams":
        return cls()

    def phi_rate(self, qubit_pos: int) -> float:
        if self.qubit_phi_scale:
            return self.gamma_phi * self.qubit_phi_scale[qubit_pos]
        return self.gamma_phi

    def minus_rate(self, qubit_pos: int) -> float:
        if self.qubit_minus_scale:
            return self.gamma_minus * self.qubit_minus_scale[qubit_pos]
        return self.gamma_minus

    def is_zero(self) -> bool:
        return (self.gamma_h == 0 and self.gamma_c == 0
                and self.gamma_phi == 0 and self.gamma_minus == 0)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``dt`` is the nominal step (the actual step is shortened to land exactly
    on sample times); it must not exceed 2 pi / 50 when a time-dependent
    (non-RWA) drive is active, and defaults to 2 pi / 200, which resolves
    the fastest counterrotating term at 2 nu.  ``sample_every`` is used when
    no explicit sample times are given; ``positivity_check_every`` counts
    sample points between eigenvalue checks.
    """

    dt: float = TWO_PI / 200.0
    sample_every: int = 200
    positivity_check_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.sample_every < 1 or self.positivity_check_every < 1:
            raise ValueError("sample_every and positivity_check_every must be >= 1")


@dataclass
class Trajectory:
    """Time-ordered master-equation samples."""

    times: np.ndarray
    states: list

    def __post_init__(self):
        if np.any(np.diff(self.times) < 0):
            raise ValueError("times must be non-decreasing")

    @property
    def final(self):
        return self.states[-1]

    def expectations(self, op: Operator) -> np.ndarray:
        return np.array([np.trace(s.matrix @ op.matrix) for s in self.states])


# ---------------------------------------------------------------------------
# dissipator and reference right-hand side
# ---------------------------------------------------------------------------


def _as_matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, Operator) else np.asarray(x, dtype=complex)


def dissipator(x, rho) -> np.ndarray:
    """L(X) rho = (2 X rho X^dag - X^dag X rho - rho X^dag X) / 2."""
    xm = _as_matrix(x)
    rm = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if xm.shape != rm.shape:
        raise ValueError(f"dimension mismatch: {xm.shape} vs {rm.shape}")
    xdx = xm.conj().T @ xm
    return xm @ rm @ xm.conj().T - 0.5 * (xdx @ rm + rm @ xdx)


@lru_cache(maxsize=None)
def _channel_matrices(space: HilbertSpace):
    """(label, qubit_pos | None, matrix) for every decoherence channel."""
    from .hilbert import annihilation, creation, pauli

    channels = [("heating", None, creation(space).matrix),
                ("loss", None, annihilation(space).matrix)]
    for q in range(1, space.n_qubits + 1):
        channels.append(("dephasing", q - 1, pauli(space, q, "z").matrix))
        channels.append(("emission", q - 1, pauli(space, q, "-").matrix))
    return tuple(channels)


def _channel_rate(label: str, qubit_pos, noise: NoiseParams) -> float:
    if label == "heating":
        return noise.gamma_h
    if label == "loss":
        return noise.gamma_c
    if label == "dephasing":
        return noise.phi_rate(qubit_pos)
    return noise.minus_rate(qubit_pos)


def master_rhs(h_of_t, noise: NoiseParams, rho: DensityMatrix, t: float) -> np.ndarray:
    """Reference Lindblad right-hand side (dense, unoptimized)."""
    rm = rho.matrix
    out = np.zeros_like(rm)
    hm = _hamiltonian_matrix(h_of_t, t)
    if hm is not None:
        out += -1j * (hm @ rm - rm @ hm)
    if noise is not None and not noise.is_zero():
        for label, qpos, xm in _channel_matrices(rho.space):
            g = _channel_rate(label, qpos, noise)
            if g != 0.0:
                out += g * dissipator(xm, rm)
    return out


def _hamiltonian_matrix(h_of_t, t: float):
    if h_of_t is None:
        return None
    if isinstance(h_of_t, Operator):
        return h_of_t.matrix
    if isinstance(h_of_t, CompiledDrives):
        return h_of_t.dense(t)
    if isinstance(h_of_t, np.ndarray):
        return h_of_t
    return np.asarray(h_of_t(t), dtype=complex)


# ---------------------------------------------------------------------------
# structured fast path
# ---------------------------------------------------------------------------


class _QubitViews:
    """Index helpers for one qubit inside the flattened composite basis."""

    def __init__(self, space: HilbertSpace, qubit: int):
        nq, n = space.n_qubits, space.fock_cutoff
        pos = qubit - 1
        self.left = 2**pos
        self.right = (2 ** (nq - 1 - pos)) * n
        d = space.total_dim
        bitlen = self.right
        idx = np.arange(d)
        self.e_mask = ((idx // bitlen) % 2 == 0)  # qubit in |e>


class _FastRHS:
    """O(dim^2) Lindblad right-hand side for drive-form Hamiltonians."""

    def __init__(self, space: HilbertSpace, drives: CompiledDrives | None,
                 noise: NoiseParams | None):
        self.space = space
        q, n, d = space.qubit_dim, space.fock_cutoff, space.total_dim
        self.q, self.n, self.d = q, n, d
        self.drives = drives
        self.sqrt_n = np.sqrt(np.arange(1.0, n))          # sqrt(1..n-1)
        self._drive_views = {}
        if drives is not None:
            for qq in drives.qubits:
                v = _QubitViews(space, qq)
                self._drive_views[qq] = (v.left, v.right)
        # dissipator precomputation
        self.kk = None
        self.zz = None
        self.jump_w_loss = None
        self.jump_w_heat = None
        self.emission = []       # (rate, left, right) per qubit
        noise = noise or NoiseParams.zero()
        self.noise = noise
        if not noise.is_zero():
            nvec = np.tile(np.arange(n, dtype=float), q)
            k = noise.gamma_h * (nvec + 1.0) / 2.0 + noise.gamma_c * nvec / 2.0
            zz_total = None
            for qq in range(1, space.n_qubits + 1):
                views = _QubitViews(space, qq)
                gphi = noise.phi_rate(qq - 1)
                gmin = noise.minus_rate(qq - 1)
                k = k + gphi / 2.0 + gmin / 2.0 * views.e_mask
                if gphi != 0.0:
                    z = np.where(views.e_mask, 1.0, -1.0)
                    zz = gphi * np.outer(z, z)
                    zz_total = zz if zz_total is None else zz_total + zz
                if gmin != 0.0:
                    self.emission.append((gmin, views.left, views.right))
            self.kk = k[:, None] + k[None, :]
            self.zz = zz_total
            w = np.outer(self.sqrt_n, self.sqrt_n)        # sqrt((n+1)(m+1))
            if noise.gamma_c != 0.0:
                self.jump_w_loss = (noise.gamma_c * w).reshape(1, n - 1, 1, n - 1)
            if noise.gamma_h != 0.0:
                self.jump_w_heat = (noise.gamma_h * w).reshape(1, n - 1, 1, n - 1)
            self._jtmp = np.empty((q, n - 1, q, n - 1), dtype=complex)

    def _apply_hamiltonian(self, t, rho, w):
        """w := H(t) rho using the per-qubit tridiagonal structure."""
        n, d = self.n, self.d
        s = self.sqrt_n[:, None]
        for qq in self._drive_views:
            c0, ca, cd = self.drives.coefficients(t, qq)
            left, right = self._drive_views[qq]
            rq = right // n
            rv = rho.reshape(left, 2, rq, n, d)
            wv = w.reshape(left, 2, rq, n, d)
            re, rg = rv[:, 0], rv[:, 1]
            we, wg = wv[:, 0], wv[:, 1]
            # sigma^+ (x) (c0 + ca a + cd a^dag) : |e> rows from |g> rows
            if c0 != 0.0:
                we += c0 * rg
                wg += np.conj(c0) * re
            if ca != 0.0:
                we[:, :, :-1, :] += ca * (s * rg[:, :, 1:, :])
                wg[:, :, 1:, :] += np.conj(ca) * (s * re[:, :, :-1, :])
            if cd != 0.0:
                we[:, :, 1:, :] += cd * (s * rg[:, :, :-1, :])
                wg[:, :, :-1, :] += np.conj(cd) * (s * re[:, :, 1:, :])

    def __call__(self, t, rho, out, w, tmp):
        n, q = self.n, self.q
        if self._drive_views:
            w[:] = 0.0
            self._apply_hamiltonian(t, rho, w)
            np.conjugate(w.T, out=tmp)
            np.subtract(w, tmp, out=w)
            np.multiply(w, -1j, out=out)
        else:
            out[:] = 0.0
        if self.kk is not None:
            np.multiply(self.kk, rho, out=tmp)
            out -= tmp
        if self.zz is not None:
            np.multiply(self.zz, rho, out=tmp)
            out += tmp
        rv = rho.reshape(q, n, q, n)
        ov = out.reshape(q, n, q, n)
        if self.jump_w_loss is not None:
            np.multiply(self.jump_w_loss, rv[:, 1:, :, 1:], out=self._jtmp)
            ov[:, :-1, :, :-1] += self._jtmp
        if self.jump_w_heat is not None:
            np.multiply(self.jump_w_heat, rv[:, :-1, :, :-1], out=self._jtmp)
            ov[:, 1:, :, 1:] += self._jtmp
        for gmin, left, right in self.emission:
            rr = rho.reshape(left, 2, right, left, 2, right)
            oo = out.reshape(left, 2, right, left, 2, right)
            oo[:, 1, :, :, 1, :] += gmin * rr[:, 0, :, :, 0, :]
        return out


class _GenericRHS:
    """Dense fallback for arbitrary Hamiltonian callables."""

    def __init__(self, space: HilbertSpace, h_of_t, noise: NoiseParams | None):
        self.space = space
        self.h_of_t = h_of_t
        self.noise = noise or NoiseParams.zero()
        self.channels = []
        if not self.noise.is_zero():
            k = np.zeros((space.total_dim, space.total_dim), dtype=complex)
            for label, qpos, xm in _channel_matrices(space):
                g = _channel_rate(label, qpos, self.noise)
                if g != 0.0:
                    self.channels.append((g, xm, xm.conj().T))
                    k += 0.5 * g * (xm.conj().T @ xm)
            self.k = k
        else:
            self.k = None

    def __call__(self, t, rho, out, w, tmp):
        hm = _hamiltonian_matrix(self.h_of_t, t)
        if hm is not None:
            np.matmul(hm, rho, out=w)
            np.conjugate(w.T, out=tmp)
            np.subtract(w, tmp, out=w)
            np.multiply(w, -1j, out=out)
        else:
            out[:] = 0.0
        if self.k is not None:
            out -= self.k @ rho + rho @ self.k
            for g, xm, xdm in self.channels:
                out += g * (xm @ rho @ xdm)
        return out


def _make_rhs(space, h_of_t, noise):
    if h_of_t is None or isinstance(h_of_t, CompiledDrives):
        return _FastRHS(space, h_of_t, noise)
    return _GenericRHS(space, h_of_t, noise)


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------


def _sample_grid(t_final, config, sample_times):
    if sample_times is None:
        if t_final == 0.0:
            return np.array([0.0])
        n_steps = max(1, math.ceil(t_final / config.dt))
        block = config.sample_every
        marks = list(np.arange(0, n_steps, block)) + [n_steps]
        marks = sorted(set(marks))
        return np.array(marks, dtype=float) * (t_final / n_steps)
    st = np.asarray(sample_times, dtype=float)
    if st.size == 0 or st[0] != 0.0:
        st = np.concatenate([[0.0], st])
    if np.any(np.diff(st) < 0):
        raise ValueError("sample_times must be increasing")
    if abs(st[-1] - t_final) > 1e-12 * max(1.0, t_final):
        raise ValueError("last sample time must equal t_final")
    return st


def integrate(h_of_t, noise: NoiseParams | None, rho0: DensityMatrix, t_final: float,
              config: IntegratorConfig | None = None,
              sample_times=None) -> Trajectory:
    """Evolve a density matrix under the master equation for time t_final.

    ``h_of_t`` may be None, a static :class:`Operator`, a dense callable
    ``t -> matrix``, or :class:`CompiledDrives` (fast path).  The state is
    re-Hermitized after every step; the run aborts with
    :class:`IntegratorError` if the trace drifts beyond 1e-8, the
    pre-Hermitization drift exceeds 1e-6, or an eigenvalue at a checked
    sample drops below -1e-6.
    """
    config = config or IntegratorConfig()
    space = rho0.space
    if isinstance(h_of_t, CompiledDrives) and not h_of_t.is_static:
        if config.dt > TWO_PI / 50.0 + 1e-15:
            raise ValueError("dt must be <= 2 pi / 50 when non-RWA drives are active")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    grid = _sample_grid(t_final, config, sample_times)
    rhs = _make_rhs(space, h_of_t, noise)

    d = space.total_dim
    rho = np.array(rho0.matrix, dtype=complex, order="C")
    k1, k2, k3, k4, y, w, tmp = (np.empty((d, d), dtype=complex) for _ in range(7))
    states = [DensityMatrix(space, rho.copy())]
    times = [0.0]
    t = 0.0
    for i_seg in range(1, grid.size):
        seg = grid[i_seg] - grid[i_seg - 1]
        if seg <= 0:
            states.append(DensityMatrix(space, rho.copy()))
            times.append(grid[i_seg])
            continue
        m = max(1, math.ceil(seg / config.dt - 1e-12))
        h = seg / m
        for _ in range(m):
            _rk4_step(rhs, t, h, rho, k1, k2, k3, k4, y, w, tmp)
            t += h
            # exact re-Hermitization; monitor the pre-Hermitization drift
            np.conjugate(rho.T, out=tmp)
            drift = np.max(np.abs(rho - tmp))
            if drift > HERMITICITY_DRIFT_TOL:
                raise IntegratorError(
                    f"Hermiticity drift {drift:.3e} at t = {t:.6g} exceeds "
                    f"{HERMITICITY_DRIFT_TOL:.0e}")
            rho += tmp
            rho *= 0.5
            tr_err = abs(np.trace(rho).real - 1.0)
            if tr_err > TRACE_TOL:
                raise IntegratorError(
                    f"trace drift {tr_err:.3e} at t = {t:.6g} exceeds {TRACE_TOL:.0e}")
        t = grid[i_seg]  # avoid accumulation of rounding in t
        states.append(DensityMatrix(space, rho.copy()))
        times.append(t)
        if (i_seg % config.positivity_check_every) == 0:
            lam = np.linalg.eigvalsh(rho)[0]
            if lam < POSITIVITY_FLOOR:
                raise IntegratorError(
                    f"negative eigenvalue {lam:.3e} at t = {t:.6g} below "
                    f"{POSITIVITY_FLOOR:.0e}")
    return Trajectory(np.array(times), states)


def _rk4_step(rhs, t, h, rho, k1, k2, k3, k4, y, w, tmp):
    rhs(t, rho, k1, w, tmp)
    np.multiply(k1, 0.5 * h, out=y)
    y += rho
    rhs(t + 0.5 * h, y, k2, w, tmp)
    np.multiply(k2, 0.5 * h, out=y)
    y += rho
    rhs(t + 0.5 * h, y, k3, w, tmp)
    np.multiply(k3, h, out=y)
    y += rho
    rhs(t + h, y, k4, w, tmp)
    # rho += h/6 (k1 + 2 k2 + 2 k3 + k4)
    k2 += k3
    k2 *= 2.0
    k1 += k4
    k1 += k2
    k1 *= h / 6.0
    rho += k1


@dataclass
class UnitaryTrajectory:
    times: np.ndarray
    states: list

    @property
    def final(self):
        return self.states[-1]


def integrate_unitary(h, psi0: StateVector, t_final: float,
                      config: IntegratorConfig | None = None,
                      sample_times=None) -> UnitaryTrajectory:
    """|psi(t)> = exp(-i H t) |psi0> for time-independent Hermitian H.

    Uses the scaled-Pade matrix exponential per sampling segment; the norm
    is preserved to 1e-10 (checked).
    """
    config = config or IntegratorConfig()
    if isinstance(h, CompiledDrives):
        h = h.static_operator()
    hm = h.matrix if isinstance(h, Operator) else np.asarray(h, dtype=complex)
    grid = _sample_grid(t_final, config, sample_times)
    space = psi0.space
    psi = psi0.amplitudes.copy()
    states = [psi0]
    cache: dict[float, np.ndarray] = {}
    for i in range(1, grid.size):
        seg = grid[i] - grid[i - 1]
        if seg > 0:
            u = cache.get(seg)
            if u is None:
                u = scipy.linalg.expm(-1j * hm * seg)
                cache[seg] = u
            psi = u @ psi
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-10:
            raise IntegratorError(f"unitary norm drift {abs(nrm - 1.0):.3e}")
        states.append(StateVector(space, psi.copy()))
    return UnitaryTrajectory(np.array(grid), states)


class _StateMatvec:
    """-i H(t) |psi> with the tridiagonal drive structure (O(dim) per call)."""

    def __init__(self, space: HilbertSpace, drives: CompiledDrives):
        self.drives = drives
        self.n = space.fock_cutoff
        self.sqrt_n = np.sqrt(np.arange(1.0, self.n))
        self.views = {q: _QubitViews(space, q) for q in drives.qubits}

    def __call__(self, t, psi):
        n = self.n
        s = self.sqrt_n
        out = np.zeros_like(psi)
        for qq, v in self.views.items():
            c0, ca, cd = self.drives.coefficients(t, qq)
            pv = psi.reshape(v.left, 2, v.right // n, n)
            ov = out.reshape(v.left, 2, v.right // n, n)
            pe, pg = pv[:, 0], pv[:, 1]
            oe, og = ov[:, 0], ov[:, 1]
            if c0 != 0.0:
                oe += c0 * pg
                og += np.conj(c0) * pe
            if ca != 0.0:
                oe[:, :, :-1] += ca * (s * pg[:, :, 1:])
                og[:, :, 1:] += np.conj(ca) * (s * pe[:, :, :-1])
            if cd != 0.0:
                oe[:, :, 1:] += cd * (s * pg[:, :, :-1])
                og[:, :, :-1] += np.conj(cd) * (s * pe[:, :, 1:])
        out *= -1j
        return out


def schrodinger_evolve(h_of_t, psi0: StateVector, t_final: float,
                       dt: float = TWO_PI / 200.0,
                       sample_times=None) -> UnitaryTrajectory:
    """RK4 state-vector evolution under a time-dependent Hamiltonian.

    Support path for noise-free non-RWA runs and the RWA-limit checks; the
    norm is monitored (RK4 is not exactly unitary) and re-normalized at
    sample points, with drift required below 1e-6.
    """
    space = psi0.space
    if isinstance(h_of_t, CompiledDrives):
        deriv = _StateMatvec(space, h_of_t)
    else:
        if isinstance(h_of_t, Operator):
            dense = lambda t: h_of_t.matrix  # noqa: E731
        else:
            dense = h_of_t
        deriv = lambda t, psi: -1j * (dense(t) @ psi)  # noqa: E731
    grid = _sample_grid(t_final, IntegratorConfig(dt=dt), sample_times)
    psi = psi0.amplitudes.copy()
    states = [psi0]
    t = 0.0
    for i in range(1, grid.size):
        seg = grid[i] - grid[i - 1]
        m = max(1, math.ceil(seg / dt - 1e-12))
        h = seg / m
        for _ in range(m):
            k1 = deriv(t, psi)
            k2 = deriv(t + 0.5 * h, psi + 0.5 * h * k1)
            k3 = deriv(t + 0.5 * h, psi + 0.5 * h * k2)
            k4 = deriv(t + h, psi + h * k3)
            psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = grid[i]
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-6:
            raise IntegratorError(f"state-vector norm drift {abs(nrm - 1.0):.3e}")
        psi /= nrm
        states.append(StateVector(space, psi.copy()))
    return UnitaryTrajectory(np.array(grid), states)
