"""Two driven qubits with exchange J coupled to a common bath or to separate baths.

Matrices are in the computational basis |uu>, |ud>, |du>, |dd>. In the
frame rotating at the (shared) drive frequency the sector generator is

    H = sum_a (omega0_a + b_a - omega) S^z_a + omega1 (S^x_1 + S^x_2) + J S_1.S_2

with b_1 = b_2 for a common bath. Lab-frame propagators are
exp(-i omega t S^z_12) exp(-i H t).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import ID2, SX, SY, SZ, FieldConfig, TwoQubitState, ValidationError
from .sectors import SectorSpectrum
from .single import _check_time, _half_angle_terms, _unitaries

log = logging.getLogger(__name__)

S1 = [np.kron(s, ID2) for s in (SX, SY, SZ)]
S2 = [np.kron(ID2, s) for s in (SX, SY, SZ)]
SZ12 = S1[2] + S2[2]
SX12 = S1[0] + S2[0]
EXCHANGE = sum(a @ b for a, b in zip(S1, S2))

#: Columns are |1>_T, |0>_T, |-1>_T, |0>_S in the computational basis.
COUPLED_BASIS = np.array([
    [1, 0, 0, 0],
    [0, 1 / np.sqrt(2), 0, 1 / np.sqrt(2)],
    [0, 1 / np.sqrt(2), 0, -1 / np.sqrt(2)],
    [0, 0, 1, 0],
], dtype=complex)

_PAIR_BLOCK = 1 << 16


@dataclass(frozen=True)
class TwoQubitFieldConfig:
    """Local static fields and drive frequencies for each qubit, shared drive
    amplitude ``omega1`` and exchange ``J`` (either sign)."""

    omega0_1: float
    omega0_2: float
    omega_1: float
    omega_2: float
    omega1: float
    J: float = 0.0

    def __post_init__(self):
        for name in ("omega0_1", "omega0_2", "omega_1", "omega_2", "omega1", "J"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.omega1 < 0:
            raise ValidationError("omega1", f"must be >= 0, got {self.omega1}")

    @classmethod
    def common(cls, field: FieldConfig, J: float = 0.0) -> "TwoQubitFieldConfig":
        return cls(field.omega0, field.omega0, field.omega, field.omega, field.omega1, J)

    def site(self, which: int) -> FieldConfig:
        if which == 1:
            return FieldConfig(self.omega0_1, self.omega1, self.omega_1)
        if which == 2:
            return FieldConfig(self.omega0_2, self.omega1, self.omega_2)
        raise ValueError("site must be 1 or 2")

    @property
    def shared_frame(self) -> bool:
        return self.omega_1 == self.omega_2


@dataclass(frozen=True)
class EtaMatrix:
    matrix: np.ndarray
    shift: float
    rabi: float


def _generators(cfg: TwoQubitFieldConfig, shift1, shift2=None):
    """Stack of rotating-frame generators for broadcast shift arrays."""
    if not cfg.shared_frame:
        raise ValidationError("omega_1/omega_2", "a single rotating frame needs equal drive frequencies")
    shift1 = np.asarray(shift1, dtype=float)
    shift2 = shift1 if shift2 is None else np.asarray(shift2, dtype=float)
    d1 = cfg.omega0_1 + shift1 - cfg.omega_1
    d2 = cfg.omega0_2 + shift2 - cfg.omega_2
    d1, d2 = np.broadcast_arrays(d1, d2)
    static = cfg.omega1 * SX12 + cfg.J * EXCHANGE
    h = static + d1[..., None, None] * S1[2] + d2[..., None, None] * S2[2]
    return h.real  # every term is real in this basis


def rotating_frame_hamiltonian(cfg: TwoQubitFieldConfig, shift: float, shift2: float | None = None) -> np.ndarray:
    """Time-independent 4x4 generator for one bath sector (or sector pair)."""
    return _generators(cfg, shift, shift2).astype(complex)


def _frame(cfg: TwoQubitFieldConfig, t: float) -> np.ndarray:
    """exp(-i t (omega_1 S^z_1 + omega_2 S^z_2)) as its diagonal."""
    return np.exp(-1j * t * (cfg.omega_1 * np.diag(S1[2]).real + cfg.omega_2 * np.diag(S2[2]).real))


def _propagators(cfg: TwoQubitFieldConfig, t: float, shift1, shift2=None) -> np.ndarray:
    h = _generators(cfg, shift1, shift2)
    vals, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * vals * t)[..., None, :]) @ np.swapaxes(vecs, -1, -2)
    return _frame(cfg, t)[:, None] * u


def sector_unitary_2q(cfg: TwoQubitFieldConfig, shift: float, t: float, shift2: float | None = None) -> np.ndarray:
    """Lab-frame propagator for one sector, from the exact eigendecomposition."""
    return _propagators(cfg, float(_check_time(t)), shift, shift2)


def transition_probabilities_free(cfg: TwoQubitFieldConfig, t: float) -> tuple[float, float]:
    """(|<dd|U|uu>|^2, |<du|U|ud>|^2) without bath coupling."""
    u = sector_unitary_2q(cfg, 0.0, t)
    return float(abs(u[3, 0]) ** 2), float(abs(u[2, 1]) ** 2)


def transition_probabilities_free_formula(J: float, omega1: float, t):
    """Resonant closed forms: (1 - cos w1 t)^2 / 4 and |1 - e^{iJt} cos w1 t|^2 / 4."""
    t = np.asarray(t, dtype=float)
    p_dd = 0.25 * (1 - np.cos(omega1 * t)) ** 2
    p_du = 0.25 * np.abs(1 - np.exp(1j * J * t) * np.cos(omega1 * t)) ** 2
    return p_dd, p_du


def _evolve_mixture(us: np.ndarray, weights: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    for start in range(0, weights.size, _PAIR_BLOCK):
        blk = slice(start, start + _PAIR_BLOCK)
        u = us[blk]
        rho += np.einsum("i,iab,idb->ad", weights[blk], u @ rho0, u.conj(), optimize=True)
    return (rho + rho.conj().T) / 2


def _as_matrix(rho0) -> np.ndarray:
    return rho0.matrix if isinstance(rho0, TwoQubitState) else np.asarray(rho0, dtype=complex)


def reduced_state_2q_common(cfg: TwoQubitFieldConfig, spectrum: SectorSpectrum, rho0, t: float) -> TwoQubitState:
    """Both qubits see the same shift b_i: sum_i w_i U_i rho0 U_i^dagger."""
    t = float(_check_time(t))
    us = _propagators(cfg, t, spectrum.shifts)
    return TwoQubitState(_evolve_mixture(us, spectrum.weights, _as_matrix(rho0)))


def _rz(angle):
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(np.shape(angle) + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1
    return out


def _eta_stack(local_field: FieldConfig, shifts, t: float) -> np.ndarray:
    """Bloch rotations R_z(omega t) M_i(t) for an array of sector shifts.

    M_i rotates by Omega_i t about (omega1, 0, -Delta_i)/Omega_i; written out
    (times Omega^2, with C = cos Omega t, S = sin Omega t, V = 2 sin^2(Omega t/2)):

        [ w1^2 + D^2 C      D Omega S       -D w1 V      ]
        [ -D Omega S        Omega^2 C       -w1 Omega S  ]
        [ -D w1 V           w1 Omega S      D^2 + w1^2 C ]
    """
    shifts = np.asarray(shifts, dtype=float)
    delta, rabi, c, ds, f = _half_angle_terms(local_field, shifts, t)
    # Built from the half-angle quaternion (c, f, 0, -ds) so Omega = 0 stays finite.
    cos_full = c * c - (ds * ds + f * f)
    m = np.empty(shifts.shape + (3, 3))
    m[..., 0, 0] = c * c - ds * ds + f * f
    m[..., 0, 1] = 2 * c * ds
    m[..., 0, 2] = -2 * ds * f
    m[..., 1, 0] = -2 * c * ds
    m[..., 1, 1] = cos_full
    m[..., 1, 2] = -2 * c * f
    m[..., 2, 0] = -2 * ds * f
    m[..., 2, 1] = 2 * c * f
    m[..., 2, 2] = c * c + ds * ds - f * f
    return _rz(local_field.omega * t) @ m


def eta_matrix(local_field: FieldConfig, shift: float, t: float) -> EtaMatrix:
    """Heisenberg map sigma_m(t) = sum_n eta[m, n] sigma_n for one sector."""
    t = float(_check_time(t))
    _, rabi, *_ = _half_angle_terms(local_field, shift, t)
    return EtaMatrix(_eta_stack(local_field, shift, t), float(shift), float(rabi))


def averaged_eta(local_field: FieldConfig, spectrum: SectorSpectrum, t: float) -> np.ndarray:
    """Bath average sum_i w_i eta_i, a contraction of the Bloch ball."""
    t = float(_check_time(t))
    return np.einsum("i,imn->mn", spectrum.weights, _eta_stack(local_field, spectrum.shifts, t))


def evolve_separate_baths_bell(cfg: TwoQubitFieldConfig, spectra, rho0, t: float) -> TwoQubitState:
    """J = 0 evolution with independent baths through the averaged eta maps.

    P_a(t) = eta_a P_a(0) and Pi(t) = eta_1 Pi(0) eta_2^T; exact because
    the sector pair weights factorize.
    """
    if cfg.J != 0:
        log.info("J=%g != 0: routing to evolve_separate_baths_general", cfg.J)
        return evolve_separate_baths_general(cfg, spectra, rho0, t)
    state = rho0 if isinstance(rho0, TwoQubitState) else TwoQubitState(rho0)
    eta1 = averaged_eta(cfg.site(1), spectra[0], t)
    eta2 = averaged_eta(cfg.site(2), spectra[1], t)
    return TwoQubitState.from_polarizations(eta1 @ state.p1, eta2 @ state.p2, eta1 @ state.tensor @ eta2.T)


def separate_bath_path(cfg: TwoQubitFieldConfig) -> str:
    """Which propagator route evolve_separate_baths_general takes."""
    if cfg.shared_frame:
        return "rotating-frame"
    if cfg.J == 0:
        return "product"
    return "stepped"


SPLUS = np.array([[0, 1], [0, 0]], dtype=complex)
FLIP_FLOP = np.kron(SPLUS, SPLUS.T)  # S+_1 S-_2


def _stepped_propagators(cfg: TwoQubitFieldConfig, times, shift1, shift2):
    """Fixed-step RK4 propagators when the drive frequencies differ and J != 0.

    Integration runs in the frame rotating at each qubit's own drive
    frequency, where only the flip-flop part of the exchange stays time
    dependent, with phase (omega_1 - omega_2) t. ``times`` must be sorted;
    one pass from 0 serves all of them and the result has shape
    (len(times), n_pairs, 4, 4).
    """
    shift1, shift2 = np.broadcast_arrays(np.asarray(shift1, float), np.asarray(shift2, float))
    d1 = cfg.omega0_1 + shift1 - cfg.omega_1
    d2 = cfg.omega0_2 + shift2 - cfg.omega_2
    diag = d1[..., None] * np.diag(S1[2]).real + d2[..., None] * np.diag(S2[2]).real
    static = cfg.omega1 * SX12 + cfg.J * (S1[2] @ S2[2])
    beat = cfg.omega_1 - cfg.omega_2

    def generator(tau):
        ff = 0.5 * cfg.J * np.exp(1j * beat * tau) * FLIP_FLOP
        return static + ff + ff.conj().T + diag[..., None] * np.eye(4)

    fastest = np.max(np.abs(d1)) + np.max(np.abs(d2)) + 2 * cfg.omega1 + abs(cfg.J) + abs(beat)
    u = np.broadcast_to(np.eye(4, dtype=complex), shift1.shape + (4, 4)).copy()
    out = np.empty((len(times),) + u.shape, dtype=complex)
    now = 0.0
    for k, target in enumerate(times):
        if target < now:
            raise ValidationError("t", "stepped propagation needs non-decreasing times")
        steps = int(np.ceil((target - now) * fastest / (2e-3 * np.pi)))
        dt = (target - now) / steps if steps else 0.0
        for j in range(steps):
            tau = now + j * dt
            mid = generator(tau + dt / 2)
            k1 = -1j * generator(tau) @ u
            k2 = -1j * mid @ (u + dt / 2 * k1)
            k3 = -1j * mid @ (u + dt / 2 * k2)
            k4 = -1j * generator(tau + dt) @ (u + dt * k3)
            u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        now = target
        out[k] = _frame(cfg, target)[:, None] * u
    return out


def _pair_grid(spectra):
    sp1, sp2 = spectra
    b1, b2 = np.meshgrid(sp1.shifts, sp2.shifts, indexing="ij")
    return b1.reshape(-1), b2.reshape(-1), np.outer(sp1.weights, sp2.weights).reshape(-1)


def evolve_separate_baths_series(cfg: TwoQubitFieldConfig, spectra, rho0, times) -> list:
    """:func:`evolve_separate_baths_general` on a sorted time grid.

    The stepped path integrates once through the grid instead of restarting
    from t = 0 at every sample.
    """
    times = np.asarray(_check_time(times), dtype=float).reshape(-1)
    if separate_bath_path(cfg) != "stepped":
        return [evolve_separate_baths_general(cfg, spectra, rho0, tk) for tk in times]
    b1, b2, weights = _pair_grid(spectra)
    log.info("separate baths: stepped path over %d sector pairs, %d times", weights.size, times.size)
    rho0 = _as_matrix(rho0)
    return [TwoQubitState(_evolve_mixture(us, weights, rho0))
            for us in _stepped_propagators(cfg, times, b1, b2)]


def evolve_separate_baths_general(cfg: TwoQubitFieldConfig, spectra, rho0, t: float) -> TwoQubitState:
    """Sum over sector pairs (i, j) of w_i w_j U_ij rho0 U_ij^dagger, any J.

    Equal drive frequencies give an exact time-independent rotating frame;
    otherwise J = 0 factorizes into single-qubit propagators and J != 0 is
    integrated with fixed-step RK4 (see :func:`separate_bath_path`).
    """
    t = float(_check_time(t))
    b1, b2, weights = _pair_grid(spectra)
    path = separate_bath_path(cfg)
    log.info("separate baths: %s path over %d sector pairs", path, weights.size)
    if path == "rotating-frame":
        us = _propagators(cfg, t, b1, b2)
    elif path == "product":
        u1 = _unitaries(cfg.site(1), b1, t)
        u2 = _unitaries(cfg.site(2), b2, t)
        us = np.einsum("iab,icd->iacbd", u1, u2).reshape(-1, 4, 4)
    else:
        us = _stepped_propagators(cfg, [t], b1, b2)[0]
    return TwoQubitState(_evolve_mixture(us, weights, _as_matrix(rho0)))
