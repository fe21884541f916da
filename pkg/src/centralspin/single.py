"""Closed-form dynamics of one driven qubit coupled to the bath.

In the frame rotating at the drive frequency the qubit in bath sector i
feels H_i = -Delta_i S^z + omega1 S^x with Delta_i = omega - (omega0 + b_i).
The lab-frame propagator is U_i(t) = exp(-i omega t S^z) exp(-i H_i t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FieldConfig, QubitState, ValidationError
from .sectors import SectorSpectrum

# Upper bound on sectors x time points materialized at once.
_BLOCK = 1 << 21


@dataclass(frozen=True)
class SectorUnitary:
    matrix: np.ndarray
    detuning: float
    rabi: float
    flip_amplitude: float  # f = (omega1/Omega) sin(Omega t / 2)


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValidationError("t", "times must be finite and >= 0")
    return t


def _half_angle_terms(field: FieldConfig, shifts, t):
    """cos(Omega t/2), Delta sin(Omega t/2)/Omega and f for broadcast shifts/t.

    sin(x)/Omega is evaluated through sinc so Omega = 0 needs no special case.
    """
    delta = field.omega - (field.omega0 + shifts)
    rabi = np.hypot(field.omega1, delta)
    half = rabi * t / 2
    sin_over = (t / 2) * np.sinc(half / np.pi)
    return delta, rabi, np.cos(half), delta * sin_over, field.omega1 * sin_over


def _unitaries(field: FieldConfig, shifts, t):
    """Stack of lab-frame sector propagators, shape broadcast(shifts, t) + (2, 2)."""
    _, _, c, ds, f = _half_angle_terms(field, shifts, t)
    ph = np.exp(-0.5j * field.omega * t)
    c, ds, f, ph = np.broadcast_arrays(c, ds, f, ph)
    u = np.empty(c.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = ph * (c + 1j * ds)
    u[..., 0, 1] = -1j * ph * f
    u[..., 1, 0] = -1j * np.conj(ph) * f
    u[..., 1, 1] = np.conj(ph) * (c - 1j * ds)
    return u


def free_unitary(field: FieldConfig, t: float) -> np.ndarray:
    """Lab-frame propagator of the bare driven qubit."""
    return _unitaries(field, 0.0, float(_check_time(t)))


def free_transition_probability(field: FieldConfig, t):
    """(omega1/Omega)^2 sin^2(Omega t/2) with Omega^2 = omega1^2 + (omega-omega0)^2."""
    _, _, _, _, f = _half_angle_terms(field, 0.0, _check_time(t))
    return f**2


def sector_unitary(field: FieldConfig, shift: float, t: float) -> SectorUnitary:
    t = float(_check_time(t))
    delta, rabi, _, _, f = _half_angle_terms(field, shift, t)
    return SectorUnitary(_unitaries(field, shift, t), float(delta), float(rabi), float(f))


def reduced_state(field: FieldConfig, spectrum: SectorSpectrum, rho0, t: float) -> QubitState:
    """Qubit state after tracing out the bath: sum_i w_i U_i rho0 U_i^dagger."""
    rho0 = rho0.matrix if isinstance(rho0, QubitState) else np.asarray(rho0, dtype=complex)
    t = float(_check_time(t))
    u = _unitaries(field, spectrum.shifts, t)
    rho = np.einsum("i,iab,bc,idc->ad", spectrum.weights, u, rho0, u.conj())
    return QubitState((rho + rho.conj().T) / 2)


def _time_blocks(n_sectors: int, t: np.ndarray):
    step = max(1, _BLOCK // max(n_sectors, 1))
    for start in range(0, t.size, step):
        yield slice(start, start + step)


def _weighted_sum(w, values):
    # Sectors run along the last (contiguous) axis, so every time point is
    # reduced by the same pairwise summation whatever the block size.
    return np.sum(np.ascontiguousarray(values * w), axis=-1)


def transition_probability(field: FieldConfig, spectrum: SectorSpectrum, t):
    """Probability of finding the qubit down after starting up.

    sum_i w_i (omega1/Omega_i)^2 sin^2(Omega_i t/2); ``t`` may be an array.
    """
    t = _check_time(t)
    flat = t.reshape(-1)
    out = np.empty(flat.size)
    s, w = spectrum.shifts, spectrum.weights
    for blk in _time_blocks(s.size, flat):
        f = _half_angle_terms(field, s, flat[blk, None])[4]
        out[blk] = _weighted_sum(w, f**2)
    return out.reshape(t.shape) if t.ndim else float(out[0])


def polarizations(field: FieldConfig, spectrum: SectorSpectrum, t) -> np.ndarray:
    """Lab-frame Bloch vector (Px, Py, Pz) for a qubit prepared up.

    Per sector, with c = cos(Omega t/2), s = sin(Omega t/2):

        Px = 2 f (c sin(omega t) - (Delta/Omega) s cos(omega t))
        Py = -2 f (c cos(omega t) + (Delta/Omega) s sin(omega t))
        Pz = 1 - 2 f^2

    Returns shape (3,) for scalar ``t`` and (3, len(t)) otherwise.
    """
    t = _check_time(t)
    flat = t.reshape(-1)
    out = np.empty((3, flat.size))
    s, w = spectrum.shifts, spectrum.weights
    for blk in _time_blocks(s.size, flat):
        tb = flat[blk, None]
        _, _, c, ds, f = _half_angle_terms(field, s, tb)
        cw, sw = np.cos(field.omega * tb), np.sin(field.omega * tb)
        out[0, blk] = _weighted_sum(w, 2 * f * (c * sw - ds * cw))
        out[1, blk] = _weighted_sum(w, -2 * f * (c * cw + ds * sw))
        out[2, blk] = _weighted_sum(w, 1 - 2 * f**2)
    return out.reshape((3,) + t.shape)


def pz_offset(field: FieldConfig, spectrum: SectorSpectrum) -> float:
    """Time-independent part of Pz: sum_i w_i (1 - omega1^2/Omega_i^2)."""
    delta = field.omega - (field.omega0 + spectrum.shifts)
    rabi2 = field.omega1**2 + delta**2
    frac = np.divide(field.omega1**2, rabi2, out=np.ones_like(rabi2), where=rabi2 > 0)
    return float(spectrum.weights @ (1 - frac))


def asymptotic_rate(omega1: float, n: int, g: float) -> tuple[float, float]:
    """(gamma, phase rate) for the large-N resonant law.

    gamma = N g^2 / (4 omega1^2) is the variance of the sector detunings in
    units of omega1^2; the phase and envelope evolve at gamma * omega1.
    """
    gamma = n * g * g / (4 * omega1 * omega1)
    return gamma, gamma * omega1


def pz_asymptotic(omega1: float, n: int, g: float, t, rate: float | None = None):
    """Large-N Pz(t) at resonance for an unpolarized uniform bath.

        cos(w1 t + atan(r t)/2) / (1 + r^2 t^2)^(1/4)
          + gamma (1 - cos(w1 t + 3 atan(r t)/2) / (1 + r^2 t^2)^(3/4))

    with gamma = N g^2/(4 w1^2) and r = gamma w1 unless ``rate`` overrides it.
    """
    if omega1 <= 0:
        raise ValidationError("omega1", "the asymptotic law needs omega1 > 0")
    gamma, r = asymptotic_rate(omega1, n, g)
    if rate is not None:
        r = rate
    t = np.asarray(t, dtype=float)
    x = r * t
    lead = np.cos(omega1 * t + 0.5 * np.arctan(x)) / (1 + x * x) ** 0.25
    tail = np.cos(omega1 * t + 1.5 * np.arctan(x)) / (1 + x * x) ** 0.75
    out = lead + gamma * (1 - tail)
    return float(out) if out.ndim == 0 else out


def one_bath_spin_amplitudes(field: FieldConfig, g1: float, t: float):
    """Joint qubit + single bath spin amplitudes (a+, b+, a-, b-).

    The bath spin starts in (|u> + |d>)/sqrt2 and the qubit up; the state is
    a+|uu> + b+|du> + a-|ud> + b-|dd> with the qubit written first.
    """
    t = float(_check_time(t))
    u_plus = _unitaries(field, g1 / 2, t)
    u_minus = _unitaries(field, -g1 / 2, t)
    r = 1 / np.sqrt(2)
    return (complex(u_plus[0, 0] * r), complex(u_plus[1, 0] * r),
            complex(u_minus[0, 0] * r), complex(u_minus[1, 0] * r))
