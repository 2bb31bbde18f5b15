"""Compile symmetry transformations into executable trapped-ion protocols.

A linear map between reference-frame coordinates (t, x) -> (t', x') with
coefficients alpha_ij is simulated on a doubled internal space whose spinor
components hold the even/odd combinations of the wavefunction in the two
frames.  The embedded generator is (alpha~_1 1 + alpha~_2 sigma^x) p with

    alpha~_{1,2} = [c (alpha_11 +- alpha_00) -+ alpha_10] / (2 alpha_11).

Each builder returns a :class:`ProtocolSpec` holding the initialization
stage (a conditional momentum kick of strength p0), the resonant evolution
generator, the laser drive lists realizing both stages without the
rotating-wave approximation, and the decoding rules back to the two frames.

Sign convention (fixed, see package README): the initialization unitary is
exp(+i p0 x sigma^x) on the kick qubit, realized with sideband phases
phi_b = phi_r = pi, and ancilla qubits are prepared in |+>.  This makes the
untransformed frame move as <x> = +c t and pins the sign of the
spatial-parity frame correlation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DELTA,
    DensityMatrix,
    HilbertSpace,
    Operator,
    position,
    project_qubit,
    _mode_annihilation,
)
from .ion_model import (
    LaserDrive,
    DeviceParams,
    bichromatic_pair,
    sigma_x_p_coupling,
    sigma_x_x_coupling,
    rwa_hamiltonian,
)

DEFAULT_FOCK_CUTOFF = 40

KINDS = ("time_parity", "spatial_parity", "galilean_boost", "general")

# Frame-correlation contraction on the embedding qubit, taken from the two
# measurement prescriptions: (sigma^x + 1) sigma^z and [[1, -1], [1, -1]].
# Both equal sigma^z - i sigma^y; each protocol stores its own copy.
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_CORR_TIME_PARITY = (_SX + np.eye(2)) @ _SZ
_CORR_SPATIAL_PARITY = np.array([[1, -1], [1, -1]], dtype=complex)


@dataclass(frozen=True)
class TransformSpec:
    """Galilean coordinate map x'_i = sum_j alpha_ij x_j with x_0 = t, x_1 = x."""

    alpha00: float
    alpha01: float
    alpha10: float
    alpha11: float
    c: float
    v: float = 0.0

    def __post_init__(self):
        if self.alpha11 == 0.0:
            raise ValueError("alpha11 must be nonzero (divides the embedding coefficients)")


def embedding_coefficients(transform: TransformSpec) -> tuple[float, float]:
    """(alpha~_1, alpha~_2) of the embedded generator (alpha~_1 1 + alpha~_2 sigma^x) p."""
    if transform.alpha01 != 0.0:
        warnings.warn(
            "alpha01 does not enter the embedding coefficients; it is carried unused",
            stacklevel=2,
        )
    c, a00, a10, a11 = transform.c, transform.alpha00, transform.alpha10, transform.alpha11
    a1 = (c * (a11 + a00) - a10) / (2.0 * a11)
    a2 = (c * (a11 - a00) + a10) / (2.0 * a11)
    return a1, a2


@dataclass(frozen=True)
class ProtocolSpec:
    """Executable protocol: initialization, evolution, drives, decode rules."""

    kind: str
    space: HilbertSpace
    c: float
    v: float
    p0: float
    eta: float
    omega_tilde: float            # sideband Rabi frequency of the main coupling
    alpha1: float                 # identity part of the embedded generator
    alpha2: float                 # sigma^x part
    t_init: float
    init_qubit_states: tuple[str, ...]
    init_conditional: bool        # kick conditioned on the decode qubit itself
    init_drives: tuple[LaserDrive, ...]
    main_drives: tuple[LaserDrive, ...]
    init_hamiltonian: Operator
    ideal_evolution: Operator
    correlation_matrix: np.ndarray
    decode_qubit: int = 1
    ancilla_qubit: int | None = None
    omega_tilde_2: float = 0.0    # signed second coupling (boost only)

    def main_duration(self, angle: float) -> float:
        """Evolution time for a rotation angle eta*Omega*t."""
        return angle / (self.eta * self.omega_tilde)


@dataclass(frozen=True)
class SimulatedFrames:
    """Decoded observables of the two simulated reference frames.

    ``mode_a``/``mode_b`` are the (unnormalized) mode-space contractions of
    the enlarged-space state; their traces are the frame weights (1 for
    ideal embedding states).
    """

    mode_a: np.ndarray
    mode_b: np.ndarray
    weight_a: float
    weight_b: float
    x_mean_a: float
    x_mean_b: float
    correlation: complex


def _init_stage(space, kick_qubit, eta, omega, p0):
    """Momentum-kick stage: U = exp(+i p0 x sigma^x_kick).

    Realized by the phi_b = phi_r = pi bichromatic pair, i.e. the coupling
    -eta*Omega sigma^x (a + a^dag), for a duration eta*Omega*t = p0*DELTA.
    """
    if p0 == 0.0:
        zero = Operator(space, np.zeros((space.total_dim, space.total_dim), dtype=complex))
        return 0.0, (), zero
    t_init = p0 * DELTA / (eta * omega)
    drives = bichromatic_pair(kick_qubit, eta, omega, math.pi, math.pi)
    hamiltonian = sigma_x_x_coupling(space, kick_qubit, -eta * omega)
    return t_init, drives, hamiltonian


def _check_rwa_consistency(spec: ProtocolSpec):
    """The resonant limit of the emitted drives must equal the ideal generators."""
    if spec.main_drives:
        got = rwa_hamiltonian(spec.space, spec.main_drives)
        if not np.allclose(got.matrix, spec.ideal_evolution.matrix, atol=1e-12):
            raise AssertionError("main drives do not reduce to the ideal evolution")
    if spec.init_drives:
        got = rwa_hamiltonian(spec.space, spec.init_drives)
        if not np.allclose(got.matrix, spec.init_hamiltonian.matrix, atol=1e-12):
            raise AssertionError("init drives do not reduce to the init Hamiltonian")


def build_time_parity(c: float, p0: float, device: DeviceParams,
                      fock_cutoff: int = DEFAULT_FOCK_CUTOFF) -> ProtocolSpec:
    """(t, x) -> (-t, x): two ions, embedded generator sigma^x_1 c p.

    Ion 1 carries the enlarged-space spinor, prepared in (1, 0)^T = |e>.
    Ion 2 is the kick ancilla in |+>; its drives are off during the main
    stage.  eta*Omega = c / (2 DELTA).
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    if p0 < 0:
        raise ValueError("p0 must be >= 0")
    space = HilbertSpace(2, fock_cutoff)
    eta = device.eta
    omega = c / (2.0 * DELTA * eta)
    ideal = sigma_x_p_coupling(space, 1, c / (2.0 * DELTA))
    main_drives = bichromatic_pair(1, eta, omega, math.pi / 2, -math.pi / 2)
    t_init, init_drives, init_ham = _init_stage(space, 2, eta, omega, p0)
    spec = ProtocolSpec(
        kind="time_parity", space=space, c=c, v=0.0, p0=p0, eta=eta,
        omega_tilde=omega, alpha1=0.0, alpha2=c,
        t_init=t_init, init_qubit_states=("e", "+"), init_conditional=False,
        init_drives=init_drives, main_drives=main_drives,
        init_hamiltonian=init_ham, ideal_evolution=ideal,
        correlation_matrix=_CORR_TIME_PARITY, decode_qubit=1, ancilla_qubit=2,
    )
    _check_rwa_consistency(spec)
    return spec


def build_spatial_parity(c: float, p0: float, device: DeviceParams,
                         fock_cutoff: int = DEFAULT_FOCK_CUTOFF) -> ProtocolSpec:
    """(t, x) -> (t, -x): one ion suffices.

    The kick is conditioned on the same qubit that carries the spinor, so the
    initial state is already the superposition of +-p0 momentum packets.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    if p0 < 0:
        raise ValueError("p0 must be >= 0")
    space = HilbertSpace(1, fock_cutoff)
    eta = device.eta
    omega = c / (2.0 * DELTA * eta)
    ideal = sigma_x_p_coupling(space, 1, c / (2.0 * DELTA))
    main_drives = bichromatic_pair(1, eta, omega, math.pi / 2, -math.pi / 2)
    t_init, init_drives, init_ham = _init_stage(space, 1, eta, omega, p0)
    spec = ProtocolSpec(
        kind="spatial_parity", space=space, c=c, v=0.0, p0=p0, eta=eta,
        omega_tilde=omega, alpha1=0.0, alpha2=c,
        t_init=t_init, init_qubit_states=("e",), init_conditional=True,
        init_drives=init_drives, main_drives=main_drives,
        init_hamiltonian=init_ham, ideal_evolution=ideal,
        correlation_matrix=_CORR_SPATIAL_PARITY, decode_qubit=1, ancilla_qubit=None,
    )
    _check_rwa_consistency(spec)
    return spec


def build_galilean_boost(c: float, v: float, p0: float, device: DeviceParams,
                         fock_cutoff: int = DEFAULT_FOCK_CUTOFF) -> ProtocolSpec:
    """(t, x) -> (t, x - v t): two ions.

    The identity part (c + v/2) 1 p acts through the ancilla prepared in
    |+>_2 (eta*Omega_1 = (c + v/2) / 2 DELTA); the sigma^x part -v/2 sigma^x_1 p
    runs on ion 1 (eta*Omega_2 = -v / 4 DELTA, sign via sideband phases).
    Initialization is the time-parity kick on the ancilla.  Any real v is
    accepted.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    if p0 < 0:
        raise ValueError("p0 must be >= 0")
    space = HilbertSpace(2, fock_cutoff)
    eta = device.eta
    g1 = (c + v / 2.0) / (2.0 * DELTA)    # eta*Omega_1
    g2 = -v / (4.0 * DELTA)               # eta*Omega_2 (signed)
    if g1 <= 0:
        raise ValueError("c + v/2 must be > 0 for the ancilla coupling")
    omega1 = g1 / eta
    omega2 = g2 / eta
    ideal = sigma_x_p_coupling(space, 2, g1) + sigma_x_p_coupling(space, 1, g2)
    main_drives = bichromatic_pair(2, eta, omega1, math.pi / 2, -math.pi / 2)
    if g2 != 0.0:
        flip = math.pi if g2 < 0 else 0.0
        main_drives = main_drives + bichromatic_pair(
            1, eta, abs(omega2), math.pi / 2 + flip, -math.pi / 2 + flip)
    t_init, init_drives, init_ham = _init_stage(space, 2, eta, omega1, p0)
    spec = ProtocolSpec(
        kind="galilean_boost", space=space, c=c, v=v, p0=p0, eta=eta,
        omega_tilde=omega1, omega_tilde_2=omega2,
        alpha1=c + v / 2.0, alpha2=-v / 2.0,
        t_init=t_init, init_qubit_states=("e", "+"), init_conditional=False,
        init_drives=init_drives, main_drives=main_drives,
        init_hamiltonian=init_ham, ideal_evolution=ideal,
        correlation_matrix=_CORR_TIME_PARITY, decode_qubit=1, ancilla_qubit=2,
    )
    _check_rwa_consistency(spec)
    return spec


def build_general(transform: TransformSpec, p0: float, device: DeviceParams,
                  fock_cutoff: int = DEFAULT_FOCK_CUTOFF) -> ProtocolSpec:
    """Any alpha_11 != 0 transform: generator (alpha~_1 1 + alpha~_2 sigma^x) p.

    Uses the boost layout (ancilla realizes the identity part).  The shipped
    momentum-kick initialization prepares (1,0)^T (x) psi_0 and therefore
    matches the embedding initial condition only for maps with x'(t=0) = x,
    i.e. alpha01 = 0 and alpha11 = 1; other transforms get the correct
    generator but should supply their own initialization.
    """
    a1, a2 = embedding_coefficients(transform)
    space = HilbertSpace(2, fock_cutoff)
    eta = device.eta
    if a1 == 0.0 and a2 == 0.0:
        raise ValueError("degenerate transform: both embedding coefficients vanish")
    omega_ref = max(abs(a1), abs(a2)) / (2.0 * DELTA * eta)
    ideal = sigma_x_p_coupling(space, 2, a1 / (2.0 * DELTA)) \
        + sigma_x_p_coupling(space, 1, a2 / (2.0 * DELTA))
    main_drives: tuple[LaserDrive, ...] = ()
    for qubit, g in ((2, a1 / (2.0 * DELTA)), (1, a2 / (2.0 * DELTA))):
        if g != 0.0:
            flip = math.pi if g < 0 else 0.0
            main_drives = main_drives + bichromatic_pair(
                qubit, eta, abs(g) / eta, math.pi / 2 + flip, -math.pi / 2 + flip)
    t_init, init_drives, init_ham = _init_stage(space, 2, eta, omega_ref, p0)
    spec = ProtocolSpec(
        kind="general", space=space, c=transform.c, v=transform.v, p0=p0, eta=eta,
        omega_tilde=omega_ref, alpha1=a1, alpha2=a2,
        t_init=t_init, init_qubit_states=("e", "+"), init_conditional=False,
        init_drives=init_drives, main_drives=main_drives,
        init_hamiltonian=init_ham, ideal_evolution=ideal,
        correlation_matrix=_CORR_TIME_PARITY, decode_qubit=1, ancilla_qubit=2,
    )
    _check_rwa_consistency(spec)
    return spec


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


def decode_frames(rho: DensityMatrix, spec: ProtocolSpec) -> SimulatedFrames:
    """Extract the two simulated frames from an enlarged-space state.

    Frame a is the (1, 1) spinor contraction, i.e. 2 <+|rho|+> on the decode
    qubit; frame b is the (1, 1) sigma^z contraction, 2 <-|rho|->.  Mode
    expectation values are normalized by the contraction weights.  The frame
    correlation is Tr[rho M (x) x] with M the protocol's contraction matrix
    (sigma^z - i sigma^y on the decode qubit).
    """
    if rho.space != spec.space:
        raise ValueError("state space does not match the protocol space")
    mode_a = 2.0 * project_qubit(rho, spec.decode_qubit, "+")
    mode_b = 2.0 * project_qubit(rho, spec.decode_qubit, "-")
    n = spec.space.fock_cutoff
    a = _mode_annihilation(n)
    x_mode = DELTA * (a + a.conj().T)
    w_a = float(np.trace(mode_a).real)
    w_b = float(np.trace(mode_b).real)
    x_a = float(np.trace(mode_a @ x_mode).real / w_a) if w_a > 1e-12 else float("nan")
    x_b = float(np.trace(mode_b @ x_mode).real / w_b) if w_b > 1e-12 else float("nan")
    corr_op = Operator(
        spec.space,
        (position(spec.space).matrix
         @ _embed_decode(spec, spec.correlation_matrix)),
    )
    correlation = complex(np.trace(rho.matrix @ corr_op.matrix))
    return SimulatedFrames(
        mode_a=mode_a, mode_b=mode_b, weight_a=w_a, weight_b=w_b,
        x_mean_a=x_a, x_mean_b=x_b, correlation=correlation,
    )


def _embed_decode(spec: ProtocolSpec, mat2: np.ndarray) -> np.ndarray:
    from .hilbert import embed_qubit_operator

    return embed_qubit_operator(spec.space, spec.decode_qubit, mat2)
