"""Reference computations shared by the test modules."""
import numpy as np
from scipy.linalg import expm

from centralspin.core import SX, SZ


def rotating_frame_unitary(omega0, omega1, omega, shift, t):
    """exp(-i omega t Sz) expm(-i H_rot t) from a generic matrix exponential."""
    h = (omega0 + shift - omega) * SZ + omega1 * SX
    frame = np.diag(np.exp(-1j * omega * t * np.array([0.5, -0.5])))
    return frame @ expm(-1j * h * t)


def local_extrema(t, y):
    """Times and |values| of interior local extrema of a sampled curve."""
    i = np.nonzero((np.diff(np.sign(np.diff(y))) != 0))[0] + 1
    return t[i], np.abs(y[i])


def envelope_deviation(t, exact, closed):
    """Max relative gap between the extrema magnitudes of two oscillating curves."""
    te, ae = local_extrema(t, exact)
    tc, ac = local_extrema(t, closed)
    n = min(ae.size, ac.size)
    return float(np.max(np.abs(ae[:n] - ac[:n]) / ae[:n])), te[:n], ae[:n]
