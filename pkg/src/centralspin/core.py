"""Domain types shared by every engine.

Units: hbar = 1, all frequencies and couplings are angular frequencies in
rad/us (quoted as MHz), time is in us.

Spin conventions: single-qubit basis order is (up, down) and S = sigma/2.
Two-qubit matrices use the computational order |uu>, |ud>, |du>, |dd>.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

#: Largest bath for which 2**N basis states are enumerated explicitly.
EXHAUSTIVE_CAP = 24
#: Largest bath accepted by make_bath (binned/collapsed paths only above the cap).
MAX_SPINS = 1_000_000

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
ID2 = np.eye(2, dtype=complex)
PAULI = (2 * SX, 2 * SY, 2 * SZ)
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


class ValidationError(ValueError):
    """Raised when a physical parameter is out of range.

    ``field`` names the offending parameter.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class CapacityError(ValueError):
    """Raised when an exhaustive path is asked for more than it can enumerate."""


@dataclass(frozen=True)
class FieldConfig:
    """Static longitudinal field omega0, rotating transverse amplitude omega1
    and rotation frequency omega."""

    omega0: float
    omega1: float
    omega: float

    def __post_init__(self):
        for name in ("omega0", "omega1", "omega"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.omega1 < 0:
            raise ValidationError("omega1", f"must be >= 0, got {self.omega1}")

    @property
    def detuning(self) -> float:
        return self.omega - self.omega0


@dataclass(frozen=True)
class Uniform:
    """Every bath spin couples with the same per-spin strength ``g``."""

    g: float

    def couplings(self, n: int) -> np.ndarray:
        return np.full(n, float(self.g))


@dataclass(frozen=True)
class GaussianProfile:
    """g_k proportional to exp(-alpha k**2), k = 1..N, scaled so sum(g_k) = g."""

    g: float
    alpha: float

    def couplings(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=float)
        profile = np.exp(-self.alpha * k**2)
        total = profile.sum()
        if total == 0.0:
            raise ValidationError("alpha", "profile underflows to zero for every spin")
        return self.g * profile / total


@dataclass(frozen=True)
class Explicit:
    g_list: tuple

    def couplings(self, n: int) -> np.ndarray:
        return np.asarray(self.g_list, dtype=float)


CouplingModel = Union[Uniform, GaussianProfile, Explicit]


@dataclass(frozen=True)
class BathConfig:
    """Validated bath: size, common z polarization and materialized couplings."""

    n_spins: int
    polarization: float
    coupling: CouplingModel
    g: np.ndarray = field(repr=False, compare=False)

    @property
    def is_uniform(self) -> bool:
        return isinstance(self.coupling, Uniform)

    @property
    def total_coupling(self) -> float:
        return float(self.g.sum())


def make_bath(n: int, p: float, coupling: CouplingModel) -> BathConfig:
    """Build a :class:`BathConfig`, checking ranges and normalizing profiles.

    ``n`` may exceed :data:`EXHAUSTIVE_CAP`; such baths can only be used with
    ``collapse_uniform`` or ``binned_spectrum``.
    """
    if int(n) != n or not 1 <= n <= MAX_SPINS:
        raise ValidationError("n_spins", f"must be an integer in [1, {MAX_SPINS}], got {n}")
    n = int(n)
    if not np.isfinite(p) or abs(p) > 1:
        raise ValidationError("polarization", f"must lie in [-1, 1], got {p}")
    if isinstance(coupling, (Uniform, GaussianProfile)):
        if not np.isfinite(coupling.g) or coupling.g < 0:
            raise ValidationError("g", f"must be finite and >= 0, got {coupling.g}")
    if isinstance(coupling, GaussianProfile) and not coupling.alpha >= 0:
        raise ValidationError("alpha", f"must be >= 0, got {coupling.alpha}")
    if isinstance(coupling, Explicit):
        if len(coupling.g_list) != n:
            raise ValidationError(
                "g_list", f"length {len(coupling.g_list)} does not match n_spins={n}")
        if not np.all(np.isfinite(coupling.g_list)):
            raise ValidationError("g_list", "all couplings must be finite")
    elif not isinstance(coupling, (Uniform, GaussianProfile)):
        raise ValidationError("coupling", f"unknown coupling model {coupling!r}")
    g = coupling.couplings(n)
    g.setflags(write=False)
    return BathConfig(n, float(p), coupling, g)


def check_density_matrix(rho: np.ndarray, dim: int) -> np.ndarray:
    """Validate a density matrix, returning it as a complex array.

    Eigenvalues in [-PSD_TOL, 0) are tolerated; callers that need a
    strictly PSD matrix use :func:`clamp_psd`.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValidationError("rho", f"expected shape ({dim}, {dim}), got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValidationError("rho", "entries must be finite")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValidationError("rho", "not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > TRACE_TOL:
        raise ValidationError("rho", f"trace {tr.real:.15g} differs from 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -PSD_TOL:
        raise ValidationError("rho", f"not positive semidefinite (min eigenvalue {lo:.3g})")
    return rho


def clamp_psd(rho: np.ndarray) -> np.ndarray:
    """Zero eigenvalues in [-PSD_TOL, 0); larger negative ones are an error."""
    rho = (rho + rho.conj().T) / 2
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < -PSD_TOL:
        raise ValidationError("rho", f"not positive semidefinite (min eigenvalue {vals.min():.3g})")
    if vals.min() >= 0:
        return rho
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ vecs.conj().T


@dataclass(frozen=True)
class QubitState:
    matrix: np.ndarray

    def __post_init__(self):
        m = check_density_matrix(self.matrix, 2)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, psi) -> "QubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_bloch(cls, p) -> "QubitState":
        p = np.asarray(p, dtype=float)
        return cls(ID2 / 2 + sum(pi * s for pi, s in zip(p, PAULI)) / 2)

    @property
    def bloch(self) -> np.ndarray:
        """Polarization vector P = 2 Tr(rho S) = Tr(rho sigma)."""
        return np.array([np.trace(self.matrix @ s).real for s in PAULI])


def _pair_ops():
    s1 = [np.kron(p, ID2) for p in PAULI]
    s2 = [np.kron(ID2, p) for p in PAULI]
    return s1, s2


SIGMA1, SIGMA2 = _pair_ops()


@dataclass(frozen=True)
class TwoQubitState:
    """Two-qubit density matrix with its polarization parametrization.

    ``p1[m] = Tr(rho sigma_m x 1)``, ``p2[n] = Tr(rho 1 x sigma_n)`` and
    ``tensor[m, n] = Tr(rho sigma_m x sigma_n)`` so that

        rho = (1 + p1.sigma x 1 + 1 x p2.sigma + sum tensor[m,n] sigma_m x sigma_n) / 4.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = check_density_matrix(self.matrix, 4)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_polarizations(cls, p1, p2, tensor) -> "TwoQubitState":
        return cls(reconstruct_two_qubit(p1, p2, tensor))

    @property
    def p1(self) -> np.ndarray:
        return np.array([np.trace(self.matrix @ s).real for s in SIGMA1])

    @property
    def p2(self) -> np.ndarray:
        return np.array([np.trace(self.matrix @ s).real for s in SIGMA2])

    @property
    def tensor(self) -> np.ndarray:
        return np.array([[np.trace(self.matrix @ a @ b).real for b in SIGMA2] for a in SIGMA1])


def reconstruct_two_qubit(p1, p2, tensor) -> np.ndarray:
    """4x4 matrix from (P1, P2, Pi); eigenvalues within PSD_TOL below 0 are clamped."""
    rho = np.eye(4, dtype=complex)
    for m in range(3):
        rho += p1[m] * SIGMA1[m] + p2[m] * SIGMA2[m]
        for n in range(3):
            rho += tensor[m][n] * (SIGMA1[m] @ SIGMA2[n])
    return clamp_psd(rho / 4)


class BellState(enum.Enum):
    SINGLET = "singlet"          # (ud - du)/sqrt2
    TRIPLET_ZERO = "triplet0"    # (ud + du)/sqrt2
    PHI_PLUS = "phi+"            # (uu + dd)/sqrt2
    PHI_MINUS = "phi-"           # (uu - dd)/sqrt2


_BELL_KETS = {
    BellState.SINGLET: np.array([0, 1, -1, 0]),
    BellState.TRIPLET_ZERO: np.array([0, 1, 1, 0]),
    BellState.PHI_PLUS: np.array([1, 0, 0, 1]),
    BellState.PHI_MINUS: np.array([1, 0, 0, -1]),
}


def bell_ket(which: BellState) -> np.ndarray:
    return _BELL_KETS[BellState(which)].astype(complex) / np.sqrt(2)


def bell_state(which: BellState) -> TwoQubitState:
    return TwoQubitState.from_ket(bell_ket(which))
