"""Brute-force reference dynamics on the full qubit + bath Hilbert space.

Nothing here uses the block structure of the Hamiltonian: operators are
Kronecker products (assembled sparse), evolution is either a full eigendecomposition or
a fixed-step RK4 integration of the time-dependent lab-frame Hamiltonian,
and the system state comes from an explicit partial trace. The bath starts
diagonal, so each bath basis state is evolved as a pure state and the
results are weighted.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy import sparse

from .core import SX, SY, SZ, BathConfig, CapacityError, FieldConfig, ValidationError
from .two import TwoQubitFieldConfig

MAX_DIM = 2**14


@dataclass(frozen=True)
class FullSystemSpec:
    """Qubits, bath spins and every coupling between them.

    ``coupling[a, k]`` is the S^z_a I^z_k strength between qubit ``a`` and
    bath spin ``k``; ``bath_polarization[k]`` is spin k's initial polarization.
    """

    omega0: tuple
    omega: tuple
    omega1: float
    J: float
    coupling: np.ndarray
    bath_polarization: np.ndarray
    frame: str = "rotating"

    def __post_init__(self):
        nq = len(self.omega0)
        if nq not in (1, 2) or len(self.omega) != nq:
            raise ValidationError("n_qubits", "must be 1 or 2 with one drive frequency per qubit")
        c = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        if c.shape[0] != nq:
            raise ValidationError("coupling", f"needs one row per qubit, got shape {c.shape}")
        object.__setattr__(self, "coupling", c)
        object.__setattr__(self, "bath_polarization", np.asarray(self.bath_polarization, dtype=float).reshape(-1))
        if self.bath_polarization.size != c.shape[1]:
            raise ValidationError("bath_polarization", "needs one entry per bath spin")
        if self.dim > MAX_DIM:
            raise CapacityError(f"oracle dimension 2**{nq + self.n_bath} exceeds the cap {MAX_DIM}")
        if self.frame not in ("rotating", "lab"):
            raise ValidationError("frame", "must be 'rotating' or 'lab'")

    @property
    def n_qubits(self) -> int:
        return len(self.omega0)

    @property
    def n_bath(self) -> int:
        return self.coupling.shape[1]

    @property
    def dim(self) -> int:
        return 2 ** (self.n_qubits + self.n_bath)

    @classmethod
    def single(cls, field: FieldConfig, bath: BathConfig) -> "FullSystemSpec":
        return cls((field.omega0,), (field.omega,), field.omega1, 0.0,
                   bath.g[None, :], np.full(bath.n_spins, bath.polarization))

    @classmethod
    def common(cls, cfg: TwoQubitFieldConfig, bath: BathConfig) -> "FullSystemSpec":
        return cls((cfg.omega0_1, cfg.omega0_2), (cfg.omega_1, cfg.omega_2), cfg.omega1, cfg.J,
                   np.vstack([bath.g, bath.g]), np.full(bath.n_spins, bath.polarization))

    @classmethod
    def separate(cls, cfg: TwoQubitFieldConfig, bath1: BathConfig, bath2: BathConfig) -> "FullSystemSpec":
        c = np.zeros((2, bath1.n_spins + bath2.n_spins))
        c[0, :bath1.n_spins] = bath1.g
        c[1, bath1.n_spins:] = bath2.g
        pol = np.concatenate([np.full(bath1.n_spins, bath1.polarization),
                              np.full(bath2.n_spins, bath2.polarization)])
        return cls((cfg.omega0_1, cfg.omega0_2), (cfg.omega_1, cfg.omega_2), cfg.omega1, cfg.J, c, pol)


def site_operator(op: np.ndarray, site: int, n_sites: int) -> sparse.csr_matrix:
    """``op`` acting on one spin of an n-spin register (site 0 is leftmost)."""
    eye = sparse.identity(2, dtype=complex, format="csr")
    mats = [eye] * n_sites
    mats[site] = sparse.csr_matrix(op)
    return reduce(lambda x, y: sparse.kron(x, y, format="csr"), mats)


def _static_part(spec: FullSystemSpec) -> sparse.csr_matrix:
    """Exchange and qubit-bath terms (identical in both frames)."""
    nq, n = spec.n_qubits, spec.n_qubits + spec.n_bath
    h = sparse.csr_matrix((spec.dim, spec.dim), dtype=complex)
    if nq == 2 and spec.J:
        for op in (SX, SY, SZ):
            h = h + spec.J * (site_operator(op, 0, n) @ site_operator(op, 1, n))
    diag = np.zeros(spec.dim)
    for a in range(nq):
        sz_a = site_operator(SZ, a, n).diagonal().real
        for k in range(spec.n_bath):
            if spec.coupling[a, k]:
                diag += spec.coupling[a, k] * sz_a * site_operator(SZ, nq + k, n).diagonal().real
    return h + sparse.diags(diag)


def build_rotating_hamiltonian(spec: FullSystemSpec) -> np.ndarray:
    """Dense generator in the frame rotating at the common drive frequency."""
    if len(set(spec.omega)) != 1:
        raise ValidationError("omega", "one rotating frame needs equal drive frequencies")
    n = spec.n_qubits + spec.n_bath
    h = _static_part(spec)
    for a in range(spec.n_qubits):
        h = h + (spec.omega0[a] - spec.omega[a]) * site_operator(SZ, a, n)
        h = h + spec.omega1 * site_operator(SX, a, n)
    return h.toarray()


class _LabHamiltonian:
    """Sparse lab-frame Hamiltonian H(t) = H_static + sum_a w1 (cos w_a t S^x_a + sin w_a t S^y_a)."""

    def __init__(self, spec: FullSystemSpec):
        n = spec.n_qubits + spec.n_bath
        self.static = _static_part(spec)
        for a in range(spec.n_qubits):
            self.static = self.static + spec.omega0[a] * site_operator(SZ, a, n)
        self.sx = [spec.omega1 * site_operator(SX, a, n) for a in range(spec.n_qubits)]
        self.sy = [spec.omega1 * site_operator(SY, a, n) for a in range(spec.n_qubits)]
        self.omega = spec.omega

    def __call__(self, t: float) -> sparse.csr_matrix:
        h = self.static
        for w, sx, sy in zip(self.omega, self.sx, self.sy):
            h = h + np.cos(w * t) * sx + np.sin(w * t) * sy
        return h

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        """-i H(t) psi without assembling H(t)."""
        out = self.static @ psi
        for w, sx, sy in zip(self.omega, self.sx, self.sy):
            out += np.cos(w * t) * (sx @ psi) + np.sin(w * t) * (sy @ psi)
        return -1j * out


def build_lab_hamiltonian(spec: FullSystemSpec, t: float) -> np.ndarray:
    """Dense lab-frame Hamiltonian at time ``t`` (field vector (w1 cos wt, w1 sin wt, w0))."""
    return _LabHamiltonian(spec)(t).toarray()


def frame_rotation(spec: FullSystemSpec, t: float) -> np.ndarray:
    """Diagonal of exp(-i t sum_a omega_a S^z_a), mapping rotating-frame states to the lab."""
    n = spec.n_qubits + spec.n_bath
    phase = sum(spec.omega[a] * site_operator(SZ, a, n).diagonal().real for a in range(spec.n_qubits))
    return np.exp(-1j * t * phase)


def evolve_exact(h: np.ndarray, state0: np.ndarray, t: float, eig=None) -> np.ndarray:
    """exp(-i h t) applied to a vector or to the columns of a matrix.

    Pass ``eig`` (the output of ``np.linalg.eigh(h)``) to reuse a diagonalization.
    """
    vals, vecs = np.linalg.eigh(h) if eig is None else eig
    coeff = vecs.conj().T @ state0
    phases = np.exp(-1j * vals * t)
    coeff = phases[:, None] * coeff if coeff.ndim == 2 else phases * coeff
    return vecs @ coeff


def evolve_stepped_lab_frame(spec: FullSystemSpec, state0: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Classical RK4 on i d|psi>/dt = H_lab(t) |psi> with a step no larger than ``dt``.

    ``state0`` may be a vector or a matrix of column states.
    """
    lab = _LabHamiltonian(spec)
    steps = max(1, int(np.ceil(t / dt)))
    h = t / steps
    psi = np.asarray(state0, dtype=complex)
    for k in range(steps):
        tau = k * h
        k1 = lab.apply(tau, psi)
        k2 = lab.apply(tau + h / 2, psi + h / 2 * k1)
        k3 = lab.apply(tau + h / 2, psi + h / 2 * k2)
        k4 = lab.apply(tau + h, psi + h * k3)
        psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def partial_trace_system(state: np.ndarray, n_system: int, n_bath: int) -> np.ndarray:
    """Trace out the bath (the trailing ``n_bath`` spins) of a ket or density matrix."""
    ds, db = 2**n_system, 2**n_bath
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if state.size != ds * db:
            raise ValidationError("state", f"length {state.size} does not match 2**{n_system + n_bath}")
        m = state.reshape(ds, db)
        return m @ m.conj().T
    if state.shape != (ds * db, ds * db):
        raise ValidationError("state", f"shape {state.shape} does not match 2**{n_system + n_bath}")
    return np.einsum("ajbj->ab", state.reshape(ds, db, ds, db))


def bath_state_weights(polarization) -> np.ndarray:
    """Probabilities of the 2**n bath basis states (spin 0 is the leading bit)."""
    w = np.ones(1)
    for p in np.atleast_1d(np.asarray(polarization, dtype=float)):
        w = np.kron(w, [(1 + p) / 2, (1 - p) / 2])
    return w


def _system_columns(rho_sys: np.ndarray):
    vals, vecs = np.linalg.eigh((rho_sys + rho_sys.conj().T) / 2)
    keep = vals > 1e-15
    return vals[keep], vecs[:, keep].T


def _contributions(evolved: np.ndarray, ds: int, db: int) -> np.ndarray:
    """Tr_bath |psi_b><psi_b| for a (D, db) block of evolved columns, one per bath state b."""
    m = evolved.reshape(ds, db, -1)
    return np.einsum("ajb,cjb->bac", m, m.conj())


def oracle_bath_resolved(spec: FullSystemSpec, rho_sys0, t: float, method: str | None = None,
                         eig=None, dt: float | None = None) -> np.ndarray:
    """Unweighted reduced states Tr_B[U (rho_sys0 x |b><b|) U^dagger], shape (2**n_bath, ds, ds).

    Weighting the result with :func:`bath_state_weights` gives the reduced
    state for any product bath polarization without evolving again.
    """
    if method is None:
        method = "exact" if spec.frame == "rotating" else "stepped"
    ds, db = 2**spec.n_qubits, 2**spec.n_bath
    probs, vecs = _system_columns(np.asarray(rho_sys0, dtype=complex))
    out = np.zeros((db, ds, ds), dtype=complex)
    if method == "exact":
        vals, basis = eig if eig is not None else oracle_eig(spec)
        rows = basis.reshape(ds, db, -1)
        phase = np.exp(-1j * vals * t)[:, None]
        frame = frame_rotation(spec, t)[:, None]
        for p, v in zip(probs, vecs):
            # <E| (v x e_b) for every bath state b, read off the eigenvector rows
            coeff = np.einsum("s,sbe->eb", v, rows.conj())
            c = phase * coeff
            if np.isrealobj(basis):
                moved = basis @ np.ascontiguousarray(c.real) + 1j * (basis @ np.ascontiguousarray(c.imag))
            else:
                moved = basis @ c
            evolved = frame * moved
            out += p * _contributions(evolved, ds, db)
    elif method == "stepped":
        if dt is None:
            fastest = max(abs(w) for w in spec.omega0) + 2 * spec.omega1 + abs(spec.J)
            fastest += np.abs(spec.coupling).sum() + max(abs(w) for w in spec.omega)
            dt = 2e-3 * 2 * np.pi / fastest
        for p, v in zip(probs, vecs):
            cols = np.kron(v[:, None], np.eye(db))
            out += p * _contributions(evolve_stepped_lab_frame(spec, cols, t, dt), ds, db)
    else:
        raise ValidationError("method", f"unknown method {method!r}")
    return out


def oracle_reduced_state(spec: FullSystemSpec, rho_sys0, t: float, method: str | None = None,
                         eig=None, dt: float | None = None) -> np.ndarray:
    """Lab-frame system density matrix at time ``t`` from the full evolution.

    ``method="exact"`` diagonalizes the rotating-frame Hamiltonian;
    ``method="stepped"`` integrates the lab-frame Hamiltonian with RK4.
    The default follows ``spec.frame``.
    """
    resolved = oracle_bath_resolved(spec, rho_sys0, t, method, eig, dt)
    rho = np.einsum("b,bac->ac", bath_state_weights(spec.bath_polarization), resolved)
    return (rho + rho.conj().T) / 2


def oracle_eig(spec: FullSystemSpec):
    """Diagonalize the rotating-frame Hamiltonian once for reuse across times."""
    h = build_rotating_hamiltonian(spec)
    if np.max(np.abs(h.imag)) == 0:
        return np.linalg.eigh(h.real)
    return np.linalg.eigh(h)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())
