"""Entanglement and coherence measures for one- and two-qubit states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PSD_TOL, QubitState, TwoQubitState, ValidationError, check_density_matrix

_YY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)

# Eigenvalues of rho below this are rounding noise from weighted sector sums.
# Concurrence reacts to a spurious eigenvalue eps with an error ~sqrt(eps),
# so they are dropped before the spin-flip product is formed.
_RANK_FLOOR = 64 * np.finfo(float).eps


def _matrix(rho, dim: int) -> np.ndarray:
    if isinstance(rho, (QubitState, TwoQubitState)):
        return rho.matrix
    return check_density_matrix(rho, dim)


def concurrence(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_i are the singular values of tau = A^T (sy x sy) A for any
    decomposition rho = A A^dagger; these equal the square roots of the
    eigenvalues of rho (sy x sy) rho* (sy x sy) but avoid a non-Hermitian
    eigensolve.
    """
    m = _matrix(rho, 4)
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals.min() < -PSD_TOL:
        raise ValidationError("rho", f"not positive semidefinite (min eigenvalue {vals.min():.3g})")
    keep = vals > _RANK_FLOOR * max(vals.max(), 1.0)
    a = vecs[:, keep] * np.sqrt(vals[keep])
    lam = np.linalg.svd(a.T @ _YY @ a, compute_uv=False)
    lam = np.pad(np.sort(lam)[::-1], (0, 4 - lam.size))
    return float(min(1.0, max(0.0, lam[0] - lam[1:].sum())))


def concurrence_free_formula(J: float, omega1: float, t, printed: bool = False):
    """Concurrence grown from |ud> by exchange alone (resonant drive, no bath).

    The drive acts as the same rotation on both qubits and commutes with
    S_1.S_2, so it cannot change the entanglement; only the singlet-triplet
    phase e^{iJt} matters and C(t) = |sin(J t)|.

    ``printed=True`` returns the historical expression
    |1 - e^{iJt} cos^2(w1 t) - sin^2(w1 t)| / 2 instead, which disagrees with
    the exact evolution whenever J t is not a multiple of pi (kept for the
    errata comparison in the docs).
    """
    t = np.asarray(t, dtype=float)
    if printed:
        out = 0.5 * np.abs(1 - np.exp(1j * J * t) * np.cos(omega1 * t) ** 2 - np.sin(omega1 * t) ** 2)
    else:
        out = np.abs(np.sin(J * t))
    return float(out) if out.ndim == 0 else out


def pure_concurrence_amplitudes(a_p, b_p, a_m, b_m) -> float:
    """2 |a+ b- - a- b+| for the normalized state a+|uu> + b+|du> + a-|ud> + b-|dd>."""
    norm = abs(a_p) ** 2 + abs(b_p) ** 2 + abs(a_m) ** 2 + abs(b_m) ** 2
    if abs(norm - 1) > 1e-8:
        raise ValidationError("amplitudes", f"squared norm {norm:.12g} differs from 1")
    return float(2 * abs(a_p * b_m - a_m * b_p))


def purity(rho) -> float:
    m = rho.matrix if isinstance(rho, (QubitState, TwoQubitState)) else np.asarray(rho, dtype=complex)
    return float(np.real(np.einsum("ab,ba->", m, m)))


def decoherence_measure(p_vec) -> float:
    """1 - |P|^2, equal to 2 (1 - Tr rho^2) for a single qubit."""
    p = np.asarray(p_vec, dtype=float)
    n2 = float(p @ p)
    if n2 > (1 + 1e-10) ** 2:
        raise ValidationError("p_vec", f"|P| = {np.sqrt(n2):.12g} exceeds 1")
    return min(1.0, max(0.0, 1.0 - n2))


@dataclass(frozen=True)
class MeasureReport:
    concurrence: float | None
    purity: float
    decoherence: float | None


def measure_report(state) -> MeasureReport:
    """Bundle the measures that apply to ``state``."""
    if isinstance(state, QubitState):
        return MeasureReport(None, purity(state), decoherence_measure(state.bloch))
    if isinstance(state, TwoQubitState):
        return MeasureReport(concurrence(state), purity(state), None)
    raise TypeError(f"expected QubitState or TwoQubitState, got {type(state).__name__}")
