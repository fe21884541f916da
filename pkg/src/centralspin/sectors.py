"""Bath I^z sectors collapsed into a weighted list of qubit frequency shifts.

Every bath basis state |i> shifts the qubit resonance by
b_i = <i| sum_k g_k I^z_k |i>. Because the bath state is a product of
diag((1+P)/2, (1-P)/2) factors, the probability of |i> only depends on how
many spins point up.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .core import EXHAUSTIVE_CAP, BathConfig, CapacityError, ValidationError

WEIGHT_TOL = 1e-12
_CHUNK_BITS = 18


class Provenance(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    UNIFORM_COLLAPSED = "uniform-collapsed"
    BINNED = "binned"


@dataclass(frozen=True)
class SectorSpectrum:
    """Distinct frequency shifts with their probabilities.

    ``evaluations`` counts the bath configurations that were visited to
    build the spectrum (2**N for enumeration, N+1 for the binomial collapse).
    """

    shifts: np.ndarray
    weights: np.ndarray
    provenance: Provenance
    evaluations: int = 0

    def __post_init__(self):
        s = np.array(self.shifts, dtype=float, ndmin=1)
        w = np.array(self.weights, dtype=float, ndmin=1)
        if s.shape != w.shape or s.ndim != 1 or s.size == 0:
            raise ValidationError("spectrum", "shifts and weights must be equal-length 1-d arrays")
        if np.any(w < 0):
            raise ValidationError("weights", "must be non-negative")
        if abs(w.sum() - 1) > WEIGHT_TOL:
            raise ValidationError("weights", f"sum to {w.sum():.15g}, expected 1")
        if s.size > 1 and np.any(np.diff(s) <= 0):
            raise ValidationError("shifts", "must be strictly increasing")
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "shifts", s)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.shifts.size

    @property
    def mean(self) -> float:
        return float(self.weights @ self.shifts)

    @classmethod
    def single(cls, shift: float = 0.0) -> "SectorSpectrum":
        """A bath that is absent or frozen: one sector with weight 1."""
        return cls(np.array([shift]), np.array([1.0]), Provenance.UNIFORM_COLLAPSED, 1)


def sector_weight(p: float, n_up: int, n_down: int) -> float:
    """Probability ((1+p)/2)**n_up ((1-p)/2)**n_down of one bath basis state."""
    if n_up < 0 or n_down < 0:
        raise ValidationError("n_up/n_down", "counts must be non-negative")
    if abs(p) > 1:
        raise ValidationError("polarization", f"must lie in [-1, 1], got {p}")
    return ((1 + p) / 2) ** n_up * ((1 - p) / 2) ** n_down


def _merge(shifts: np.ndarray, weights: np.ndarray, tol: float):
    """Sort and merge shifts closer than ``tol``; the merged shift is the
    group mean, the merged weight the group sum."""
    order = np.argsort(shifts, kind="stable")
    s, w = shifts[order], weights[order]
    starts = np.concatenate(([0], np.nonzero(np.diff(s) > tol)[0] + 1))
    counts = np.diff(np.append(starts, s.size))
    return np.add.reduceat(s, starts) / counts, np.add.reduceat(w, starts), counts


def _basis_states(g: np.ndarray, bits: int):
    """Shifts and down-spin counts of all 2**bits configurations of the first ``bits`` spins.

    Configuration index j has spin k up when bit k of j is 0.
    """
    idx = np.arange(2**bits, dtype=np.int64)
    down = ((idx[:, None] >> np.arange(bits)) & 1).astype(bool)
    shifts = np.where(down, -0.5, 0.5) @ g[:bits] if bits else np.zeros(1)
    n_down = down.sum(axis=1)
    return shifts, n_down


def enumerate_sectors(bath: BathConfig) -> SectorSpectrum:
    """Visit all 2**N bath basis states and merge equal shifts.

    Raises :class:`CapacityError` above :data:`EXHAUSTIVE_CAP` spins.
    """
    n = bath.n_spins
    if n > EXHAUSTIVE_CAP:
        raise CapacityError(
            f"enumerate_sectors visits 2**N states and is capped at N={EXHAUSTIVE_CAP} "
            f"(got N={n}); use collapse_uniform or binned_spectrum instead")
    g, p = bath.g, bath.polarization
    tol = 1e-12 * float(np.max(np.abs(g)))
    lo_bits = min(n, _CHUNK_BITS)
    hi_bits = n - lo_bits
    lo_shift, lo_down = _basis_states(g, lo_bits)
    hi_shift, hi_down = _basis_states(g[lo_bits:], hi_bits)
    up_w, down_w = (1 + p) / 2, (1 - p) / 2
    parts_s, parts_w = [], []
    for hs, hd in zip(hi_shift, hi_down):
        n_down = lo_down + hd
        w = up_w ** (n - n_down) * down_w**n_down
        s, w, _ = _merge(lo_shift + hs, w, tol)
        parts_s.append(s)
        parts_w.append(w)
    s, w, _ = _merge(np.concatenate(parts_s), np.concatenate(parts_w), tol)
    keep = w > 0
    return SectorSpectrum(s[keep], w[keep], Provenance.EXHAUSTIVE, 2**n)


def collapse_uniform(n: int, g: float, p: float) -> SectorSpectrum:
    """Binomial collapse for equal per-spin couplings: N+1 sectors.

    The sector with m = n_up - N/2 has shift m*g and weight
    C(N, N/2 - m) ((1+p)/2)**(N/2+m) ((1-p)/2)**(N/2-m).
    """
    if g < 0:
        raise ValidationError("g", f"must be >= 0, got {g}")
    if abs(p) > 1:
        raise ValidationError("polarization", f"must lie in [-1, 1], got {p}")
    n_up = np.arange(n + 1)
    m = n_up - n / 2
    w = binom.pmf(n_up, n, (1 + p) / 2)
    keep = w > 0
    shifts, w = m[keep] * g, w[keep]
    if g == 0:
        shifts, w = np.zeros(1), np.array([1.0])
    return SectorSpectrum(shifts, w / w.sum(), Provenance.UNIFORM_COLLAPSED, n + 1)


def spectrum_for(bath: BathConfig, n_bins: int | None = None) -> SectorSpectrum:
    """Pick the cheapest exact construction for ``bath``.

    Uniform couplings collapse binomially; other models are enumerated up to
    the cap and binned (``n_bins``, default 4096) above it.
    """
    if bath.is_uniform:
        return collapse_uniform(bath.n_spins, bath.coupling.g, bath.polarization)
    if bath.n_spins <= EXHAUSTIVE_CAP and n_bins is None:
        return enumerate_sectors(bath)
    return binned_spectrum(bath, n_bins or 4096)


def _convolved_grid(g: np.ndarray, p: float, points: int):
    """Shift distribution on a uniform grid covering [-sum|g|/2, sum|g|/2].

    Each spin convolves in the two-point law {-g_k/2: (1-p)/2, +g_k/2: (1+p)/2};
    off-node mass is split linearly between the two neighbouring nodes, which
    preserves total mass and mean. A margin of extra nodes absorbs the
    rounding drift at the tails; anything still beyond it is clamped onto the
    outermost node.
    """
    centre = points // 2
    margin = min(len(g), centre // 4)
    half = np.abs(g).sum() / 2
    if half == 0:
        return np.zeros(1), np.ones(1)
    pitch = half / (centre - margin)
    grid = (np.arange(2 * centre + 1) - centre) * pitch
    mass = np.zeros(grid.size)
    mass[centre] = 1.0
    up, down = (1 + p) / 2, (1 - p) / 2
    for gk in g:
        step = gk / 2 / pitch
        mass = up * _shifted(mass, step) + down * _shifted(mass, -step)
    return grid, mass


def _shifted(mass: np.ndarray, step: float) -> np.ndarray:
    """Translate ``mass`` by a fractional number of nodes, clamping at the ends."""
    whole = int(np.floor(step))
    r = step - whole
    out = np.zeros_like(mass)
    n = mass.size
    for offset, frac in ((whole, 1.0 - r), (whole + 1, r)):
        if frac == 0:
            continue
        part = mass * frac
        if abs(offset) >= n:
            out[-1 if offset > 0 else 0] += part.sum()
        elif offset >= 0:
            out[offset:] += part[: n - offset]
            out[-1] += part[n - offset:].sum()
        else:
            out[:offset] += part[-offset:]
            out[0] += part[:-offset].sum()
    return out


def binned_spectrum(bath: BathConfig, n_bins: int, grid_points: int = 16384) -> SectorSpectrum:
    """Histogram the shift distribution into at most ``n_bins`` sectors.

    Each non-empty bin becomes one sector located at the weighted mean shift
    of its contents, so binning never moves the spectrum mean. Baths within
    the exhaustive cap are binned from the exact enumeration; larger ones from
    a grid convolution of ``grid_points`` nodes.
    """
    if n_bins < 2:
        raise ValidationError("n_bins", f"must be >= 2, got {n_bins}")
    if bath.n_spins <= EXHAUSTIVE_CAP:
        exact = enumerate_sectors(bath)
        s, w = exact.shifts, exact.weights
        evaluations = exact.evaluations
    else:
        s, w = _convolved_grid(bath.g, bath.polarization, grid_points)
        evaluations = bath.n_spins * grid_points
        nz = w > 0
        s, w = s[nz], w[nz]
    half = max(np.abs(bath.g).sum() / 2, np.max(np.abs(s)))
    if half == 0:
        return SectorSpectrum(np.zeros(1), np.ones(1), Provenance.BINNED, evaluations)
    edges = np.linspace(-half, half, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, n_bins - 1)
    mass = np.bincount(idx, weights=w, minlength=n_bins)
    first = np.bincount(idx, weights=w * s, minlength=n_bins)
    nz = mass > 0
    centres = first[nz] / mass[nz]
    mass = mass[nz]
    return SectorSpectrum(centres, mass / mass.sum(), Provenance.BINNED, evaluations)


def gaussian_m_distribution(n: int, p: float, m):
    """Large-N density of the bath magnetization m = <sum_k I^z_k>.

    sqrt(2 / (pi N (1-p^2))) exp(-2 (m - N p / 2)^2 / (N (1-p^2))).
    """
    if n < 1:
        raise ValidationError("n_spins", f"must be >= 1, got {n}")
    if abs(p) >= 1:
        raise ValidationError("polarization", "the Gaussian limit degenerates for |p| = 1")
    var = n * (1 - p * p)
    m = np.asarray(m, dtype=float)
    out = np.sqrt(2 / (np.pi * var)) * np.exp(-2 * (m - n * p / 2) ** 2 / var)
    return float(out) if out.ndim == 0 else out


def shift_histogram(spectrum: SectorSpectrum, bins: int, range=None, detuning: float = 0.0):
    """Probability histogram of the sector detunings Delta_i = detuning - shift_i.

    ``detuning`` is omega - omega0. Returns a list of (bin centre, probability)
    pairs whose probabilities sum to 1 (mass outside ``range`` is dropped,
    so pass a range covering the support).
    """
    if bins < 1:
        raise ValidationError("bins", f"must be >= 1, got {bins}")
    deltas = detuning - spectrum.shifts
    if range is None:
        lo, hi = deltas.min(), deltas.max()
        pad = 0.5 if hi == lo else (hi - lo) / (2 * max(bins - 1, 1))
        range = (lo - pad, hi + pad)
    lo, hi = map(float, range)
    if not hi > lo:
        raise ValidationError("range", f"empty range ({lo}, {hi})")
    width = (hi - lo) / bins
    idx = np.floor((deltas - lo) / width).astype(np.int64)
    inside = (idx >= 0) & (idx < bins) | (deltas == hi)
    idx = np.clip(idx, 0, bins - 1)
    mass = np.bincount(idx[inside], weights=spectrum.weights[inside], minlength=bins)
    centres = lo + (np.arange(bins) + 0.5) * width
    return list(zip(centres.tolist(), mass.tolist()))
