"""Laser-ion interaction Hamiltonians in the Lamb-Dicke regime.

Covers the resonant (RWA) carrier and first red/blue sideband couplings, the
bichromatic sigma_x couplings they combine into, and the full first-order
time-dependent Hamiltonian of a drive, which keeps the off-resonant carrier
term (oscillating at +-nu) and the counterrotating sideband term (at +-2nu).

Phase bookkeeping: ``LaserDrive.phase`` is the field phase phi of the
time-dependent Hamiltonian

    H(t) = Omega sigma^+ [1 + i eta (a e^{-i nu t} + a^dag e^{i nu t})]
           e^{i (phi - delta t)} + H.c.

The resonant part of a sideband drive therefore carries an extra factor i:
a drive at delta = +nu reduces to a blue sideband with sideband phase
phi_b = phi + pi/2 (same for red).  :func:`bichromatic_pair` accepts the
sideband phases and emits drives with the shifted field phases, so RWA
reductions and lab evolutions of the same drive list describe the same
physical coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DELTA,
    HilbertSpace,
    Operator,
    _mode_annihilation,
    embed_mode_operator,
    expectation,
    number_operator,
)

NU = 1.0  # trap frequency, fixes the time unit

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class LaserDrive:
    """One laser tone addressing one ion.

    detuning and rabi are in units of nu; phase is the field phase in the
    lab-frame Hamiltonian (see module docstring).
    """

    target_qubit: int
    detuning: float
    rabi: float
    phase: float
    lamb_dicke: float

    def __post_init__(self):
        if self.rabi <= 0:
            raise ValueError(f"rabi must be > 0, got {self.rabi}")
        if self.lamb_dicke < 0:
            raise ValueError(f"lamb_dicke must be >= 0, got {self.lamb_dicke}")


@dataclass(frozen=True)
class DeviceParams:
    """Lamb-Dicke factor and decoherence rates (units of nu) of a setup."""

    eta: float
    gamma_h: float
    gamma_c: float
    gamma_phi: float
    gamma_minus: float
    label: str = ""

    def __post_init__(self):
        for name in ("gamma_h", "gamma_c", "gamma_phi", "gamma_minus"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


DEVICE_PRESETS = {
    "ca40_innsbruck": DeviceParams(
        eta=0.06, gamma_h=3.7e-7, gamma_c=3.7e-7, gamma_phi=6.2e-7,
        gamma_minus=3.7e-7, label="ca40_innsbruck",
    ),
    "be9_nist": DeviceParams(
        eta=0.3, gamma_h=3.7e-7, gamma_c=3.7e-7, gamma_phi=6.2e-7,
        gamma_minus=3.7e-7, label="be9_nist",
    ),
}


def device_preset(name: str) -> DeviceParams:
    try:
        return DEVICE_PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown device preset {name!r}; available: {sorted(DEVICE_PRESETS)}"
        ) from None


def lamb_dicke_diagnostic(eta: float, rho) -> float:
    """eta^2 (2<n> + 1), the squared Lamb-Dicke expansion parameter.

    Values above 0.1 mean the first-order treatment is strained; callers
    emit a warning based on this number.
    """
    nbar = expectation(rho, number_operator(rho.space)).real
    return eta**2 * (2.0 * nbar + 1.0)


# ---------------------------------------------------------------------------
# resonant (RWA) couplings
# ---------------------------------------------------------------------------


def _sigma_plus_times(space: HilbertSpace, qubit: int, mode_matrix: np.ndarray) -> np.ndarray:
    """sigma^+ on one qubit tensored with a mode matrix, embedded densely."""
    if not 1 <= qubit <= space.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {space.n_qubits} qubit(s)")
    q = space.qubit_dim
    n = space.fock_cutoff
    out = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    view = out.reshape(q, n, q, n)
    # sigma^+ = |e><g|: rows with qubit bit e take columns with qubit bit g
    bit = 1 << (space.n_qubits - qubit)
    for col in range(q):
        if col & bit:  # qubit in |g> on the ket side
            view[col & ~bit, :, col, :] = mode_matrix
    return out


def carrier(space: HilbertSpace, drive: LaserDrive) -> Operator:
    """Resonant carrier H_c = Omega (sigma^+ e^{i phi} + sigma^- e^{-i phi})."""
    eye = np.eye(space.fock_cutoff, dtype=complex)
    half = _sigma_plus_times(space, drive.target_qubit, drive.rabi * np.exp(1j * drive.phase) * eye)
    return Operator(space, half + half.conj().T)


def red_sideband(space: HilbertSpace, drive: LaserDrive) -> Operator:
    """H_r = eta Omega (a sigma^+ e^{i phi_r} + a^dag sigma^- e^{-i phi_r}).

    ``drive.phase`` plays the role of the sideband phase phi_r here.
    """
    a = _mode_annihilation(space.fock_cutoff)
    g = drive.lamb_dicke * drive.rabi * np.exp(1j * drive.phase)
    half = _sigma_plus_times(space, drive.target_qubit, g * a)
    return Operator(space, half + half.conj().T)


def blue_sideband(space: HilbertSpace, drive: LaserDrive) -> Operator:
    """H_b = eta Omega (a^dag sigma^+ e^{i phi_b} + a sigma^- e^{-i phi_b})."""
    adag = _mode_annihilation(space.fock_cutoff).conj().T
    g = drive.lamb_dicke * drive.rabi * np.exp(1j * drive.phase)
    half = _sigma_plus_times(space, drive.target_qubit, g * adag)
    return Operator(space, half + half.conj().T)


def sigma_x_p_coupling(space: HilbertSpace, qubit: int, g: float) -> Operator:
    """g sigma^x 2 DELTA p = i g sigma^x (a^dag - a), as a bichromatic pair.

    Built from simultaneous blue and red sidebands with sideband phases
    phi_b = pi/2, phi_r = -pi/2 and eta*Omega = g (phases shifted by pi for
    negative g).
    """
    flip = math.pi if g < 0 else 0.0
    mag = abs(g)
    if mag == 0.0:
        return Operator(space, np.zeros((space.total_dim, space.total_dim), dtype=complex))
    blue = LaserDrive(qubit, NU, mag, _HALF_PI + flip, 1.0)
    red = LaserDrive(qubit, -NU, mag, -_HALF_PI + flip, 1.0)
    return blue_sideband(space, blue) + red_sideband(space, red)


def sigma_x_x_coupling(space: HilbertSpace, qubit: int, g: float) -> Operator:
    """g sigma^x (a + a^dag) = g sigma^x x/DELTA, the phi_b = phi_r = 0 pair."""
    flip = math.pi if g < 0 else 0.0
    mag = abs(g)
    if mag == 0.0:
        return Operator(space, np.zeros((space.total_dim, space.total_dim), dtype=complex))
    blue = LaserDrive(qubit, NU, mag, flip, 1.0)
    red = LaserDrive(qubit, -NU, mag, flip, 1.0)
    return blue_sideband(space, blue) + red_sideband(space, red)


def bichromatic_pair(qubit: int, eta: float, rabi: float,
                     phi_b: float, phi_r: float) -> tuple[LaserDrive, LaserDrive]:
    """Blue+red drive pair whose resonant parts realize the given sideband phases.

    The emitted ``LaserDrive.phase`` values are the field phases
    phi = phi_sideband - pi/2 (see module docstring).
    """
    blue = LaserDrive(qubit, NU, rabi, phi_b - _HALF_PI, eta)
    red = LaserDrive(qubit, -NU, rabi, phi_r - _HALF_PI, eta)
    return blue, red


# ---------------------------------------------------------------------------
# time-dependent first-order Hamiltonian and its compiled form
# ---------------------------------------------------------------------------


class CompiledDrives:
    """Drive list compiled to per-qubit ladder coefficients.

    Every Hamiltonian in this package has the form

        H(t) = sum_q sigma^+_q (x) A_q(t) + H.c.,
        A_q(t) = c0_q(t) 1 + ca_q(t) a + cd_q(t) a^dag,

    with each coefficient a finite sum of harmonics z e^{-i w t}.  The
    integrator applies A_q(t) tridiagonally, which keeps the master-equation
    right-hand side at O(dim^2).
    """

    def __init__(self, space: HilbertSpace, terms):
        # terms: dict qubit -> {"c0"|"ca"|"cd": list[(z, w)]}
        self.space = space
        self.qubits = tuple(sorted(terms))
        self._z = {}
        self._w = {}
        for q, comps in terms.items():
            for key in ("c0", "ca", "cd"):
                zs = np.array([z for z, _ in comps.get(key, [])], dtype=complex)
                ws = np.array([w for _, w in comps.get(key, [])], dtype=float)
                self._z[q, key] = zs
                self._w[q, key] = ws

    @property
    def is_static(self) -> bool:
        return all(np.all(w == 0.0) for w in self._w.values())

    def coefficients(self, t: float, qubit: int) -> tuple[complex, complex, complex]:
        out = []
        for key in ("c0", "ca", "cd"):
            z = self._z[qubit, key]
            if z.size == 0:
                out.append(0.0 + 0.0j)
            else:
                w = self._w[qubit, key]
                out.append(complex(np.sum(z * np.exp(-1j * w * t))))
        return tuple(out)

    def dense(self, t: float) -> np.ndarray:
        """Full matrix H(t); reference path for tests and generic callers."""
        space = self.space
        n = space.fock_cutoff
        a = _mode_annihilation(n)
        eye = np.eye(n, dtype=complex)
        out = np.zeros((space.total_dim, space.total_dim), dtype=complex)
        for q in self.qubits:
            c0, ca, cd = self.coefficients(t, q)
            mode = c0 * eye + ca * a + cd * a.conj().T
            half = _sigma_plus_times(space, q, mode)
            out += half + half.conj().T
        return out

    def __call__(self, t: float) -> np.ndarray:
        return self.dense(t)

    def static_operator(self) -> Operator:
        if not self.is_static:
            raise ValueError("drive compilation is time-dependent")
        return Operator(self.space, self.dense(0.0))


def compile_drives(space: HilbertSpace, drives, rwa: bool = False) -> CompiledDrives:
    """Compile lab drives to the per-qubit harmonic form.

    With ``rwa=True`` only the resonant component of each drive is kept
    (delta = 0 carrier, delta = -+nu red/blue sideband); anything else has no
    static limit and is rejected.
    """
    terms: dict[int, dict[str, list]] = {}
    for d in drives:
        if not 1 <= d.target_qubit <= space.n_qubits:
            raise ValueError(f"drive targets qubit {d.target_qubit} outside the space")
        comps = terms.setdefault(d.target_qubit, {"c0": [], "ca": [], "cd": []})
        amp = d.rabi * np.exp(1j * d.phase)
        side = 1j * d.lamb_dicke * amp
        if rwa:
            if abs(d.detuning) < 1e-12:
                comps["c0"].append((amp, 0.0))
            elif abs(d.detuning - NU) < 1e-12:
                comps["cd"].append((side, 0.0))
            elif abs(d.detuning + NU) < 1e-12:
                comps["ca"].append((side, 0.0))
            else:
                raise ValueError(
                    f"drive at detuning {d.detuning} has no resonant (RWA) limit"
                )
        else:
            comps["c0"].append((amp, d.detuning))
            comps["ca"].append((side, d.detuning + NU))
            comps["cd"].append((side, d.detuning - NU))
    return CompiledDrives(space, terms)


def lab_hamiltonian(space: HilbertSpace, drives, t: float) -> Operator:
    """First-order Lamb-Dicke Hamiltonian of all drives at time t.

    H(t) = sum_d Omega_d sigma^+_d [1 + i eta (a e^{-i nu t} + a^dag e^{i nu t})]
    e^{i (phi_d - delta_d t)} + H.c.  No rotating-wave approximation: each
    sideband drive keeps its off-resonant carrier and counterrotating terms.
    """
    return Operator(space, compile_drives(space, drives, rwa=False).dense(t))


def rwa_hamiltonian(space: HilbertSpace, drives) -> Operator:
    """Resonant part of the drive list as a static operator."""
    return compile_drives(space, drives, rwa=True).static_operator()
