import numpy as np
import pytest
from hypothesis import given, strategies as st

from centralspin.core import UP, Explicit, FieldConfig, QubitState, Uniform, ValidationError, make_bath
from centralspin.measures import pure_concurrence_amplitudes, purity
from centralspin.oracle import FullSystemSpec, oracle_eig, oracle_reduced_state, trace_distance
from centralspin.sectors import SectorSpectrum, collapse_uniform, enumerate_sectors, spectrum_for
from centralspin.single import (asymptotic_rate, free_transition_probability, free_unitary,
                                one_bath_spin_amplitudes, polarizations, pz_asymptotic, pz_offset,
                                reduced_state, sector_unitary, transition_probability)
from helpers import envelope_deviation, local_extrema, rotating_frame_unitary

RHO_UP = np.outer(UP, UP.conj())
finite = dict(allow_nan=False, allow_infinity=False)


def test_free_unitary_identity_at_zero():
    np.testing.assert_allclose(free_unitary(FieldConfig(100, 10, 97), 0.0), np.eye(2), atol=1e-15)


def test_free_unitary_resonant_pi_pulse():
    u = free_unitary(FieldConfig(100, 10, 100), np.pi / 10)
    assert abs(u[1, 0]) ** 2 == pytest.approx(1, abs=1e-14)


def test_free_unitary_without_drive_is_diagonal():
    u = free_unitary(FieldConfig(100, 0, 90), 0.37)
    assert abs(u[0, 1]) == 0 and abs(u[1, 0]) == 0
    np.testing.assert_allclose(np.abs(np.diag(u)), 1, atol=1e-15)


@given(st.floats(-50, 50, **finite), st.floats(0, 30, **finite), st.floats(-20, 20, **finite),
       st.floats(0, 10, **finite))
def test_sector_unitary_matches_matrix_exponential(detune, w1, shift, t):
    field = FieldConfig(100.0, w1, 100.0 + detune)
    su = sector_unitary(field, shift, t)
    np.testing.assert_allclose(su.matrix, rotating_frame_unitary(100.0, w1, 100.0 + detune, shift, t), atol=1e-10)
    np.testing.assert_allclose(su.matrix.conj().T @ su.matrix, np.eye(2), atol=1e-12)
    assert abs(su.flip_amplitude) <= 1


def test_sector_unitary_zero_shift_is_free():
    f = FieldConfig(100, 7, 103)
    np.testing.assert_array_equal(sector_unitary(f, 0.0, 0.8).matrix, free_unitary(f, 0.8))


def test_free_transition_examples():
    assert free_transition_probability(FieldConfig(5, 10, 5), np.pi / 10) == pytest.approx(1, abs=1e-15)
    rabi = np.hypot(10, 10)
    assert free_transition_probability(FieldConfig(0, 10, 10), np.pi / rabi) == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_array_equal(free_transition_probability(FieldConfig(0, 0, 3), np.linspace(0, 9, 7)), 0)


def test_negative_time_rejected():
    with pytest.raises(ValidationError):
        free_unitary(FieldConfig(1, 1, 1), -0.1)


def test_reduced_state_single_sector_is_pure_free_evolution():
    f = FieldConfig(100, 10, 102)
    rho = reduced_state(f, SectorSpectrum.single(), RHO_UP, 0.4)
    u = free_unitary(f, 0.4)
    np.testing.assert_allclose(rho.matrix, u @ RHO_UP @ u.conj().T, atol=1e-15)
    assert purity(rho) == pytest.approx(1, abs=1e-12)


def test_reduced_state_at_zero_time():
    sp = collapse_uniform(20, 2.0, 0.3)
    rho0 = QubitState.from_bloch([0.3, -0.2, 0.5])
    np.testing.assert_allclose(reduced_state(FieldConfig(100, 10, 97), sp, rho0, 0.0).matrix, rho0.matrix,
                               atol=1e-15)


@pytest.fixture(scope="module")
def n8_setup():
    field = FieldConfig(100.0, 10.0, 101.5)
    bath = make_bath(8, 0.0, Uniform(40 / 8))
    spec = FullSystemSpec.single(field, bath)
    return field, bath, spec, oracle_eig(spec)


@pytest.mark.parametrize("t", [0.05, 0.31, 1.2])
def test_reduced_state_matches_oracle_n8(n8_setup, t):
    field, bath, spec, eig = n8_setup
    engine = reduced_state(field, spectrum_for(bath), RHO_UP, t)
    ref = oracle_reduced_state(spec, RHO_UP, t, eig=eig)
    assert trace_distance(engine.matrix, ref) <= 1e-10
    np.testing.assert_allclose(polarizations(field, spectrum_for(bath), t), QubitState(ref).bloch, atol=1e-10)
    assert purity(engine) == pytest.approx(np.trace(ref @ ref).real, abs=1e-10)


def test_transition_probability_routes_agree(rng):
    for _ in range(20):
        n = int(rng.integers(1, 10))
        bath = make_bath(n, float(rng.uniform(-1, 1)), Explicit(tuple(rng.uniform(0, 5, n))))
        field = FieldConfig(100.0, float(rng.uniform(0, 20)), float(rng.uniform(90, 110)))
        sp = enumerate_sectors(bath)
        t = float(rng.uniform(0, 3))
        direct = transition_probability(field, sp, t)
        assert direct == pytest.approx(reduced_state(field, sp, RHO_UP, t).matrix[1, 1].real, abs=1e-12)
        assert 0 <= direct <= 1


def test_transition_probability_array_matches_scalar():
    field, sp = FieldConfig(100, 10, 100), collapse_uniform(20, 1.0, 0.0)
    t = np.linspace(0, 2, 33)
    np.testing.assert_array_equal(transition_probability(field, sp, t),
                                  [transition_probability(field, sp, tk) for tk in t])


def test_zero_coupling_equals_free_probability():
    field = FieldConfig(100, 10, 104)
    t = np.linspace(0, 3, 50)
    np.testing.assert_allclose(transition_probability(field, collapse_uniform(20, 0.0, 0.0), t),
                               free_transition_probability(field, t), atol=1e-15)


def test_fig2_peak_at_bare_frequency():
    sp = collapse_uniform(20, 40 / 20, 0.0)
    omegas = np.arange(960, 1040.001, 0.25)
    p = [transition_probability(FieldConfig(1000, 10, w), sp, np.pi / 10) for w in omegas]
    assert omegas[int(np.argmax(p))] == 1000


def test_single_strong_spin_peak_is_half():
    g1 = 400.0
    sp = enumerate_sectors(make_bath(1, 0.0, Uniform(g1)))
    omegas = np.linspace(700, 1300, 2401)
    p = np.array([transition_probability(FieldConfig(1000, 10, w), sp, np.pi / 10) for w in omegas])
    assert p.max() == pytest.approx(0.5, abs=1e-3)
    assert abs(abs(omegas[np.argmax(p)] - 1000) - g1 / 2) <= 0.25


@pytest.mark.parametrize("pb", [1.0, -1.0])
def test_resonance_shift_full_polarization(pb):
    n, g = 20, 1.0
    sp = collapse_uniform(n, g, pb)
    omegas = np.arange(80, 120.001, 0.25)
    p = [transition_probability(FieldConfig(100, 10, w), sp, np.pi / 10) for w in omegas]
    assert abs(omegas[int(np.argmax(p))] - (100 + g * n * pb / 2)) <= 0.25


def test_polarizations_basics():
    sp = collapse_uniform(20, 1.0, 0.2)
    np.testing.assert_allclose(polarizations(FieldConfig(100, 10, 100), sp, 0.0), [0, 0, 1], atol=1e-15)
    t = np.linspace(0, 5, 200)
    pz = polarizations(FieldConfig(100, 10, 100), SectorSpectrum.single(), t)[2]
    np.testing.assert_allclose(pz, np.cos(10 * t), atol=1e-12)
    vec = polarizations(FieldConfig(100, 10, 103), sp, t)
    assert np.all(np.sum(vec**2, axis=0) <= 1 + 1e-12)


@given(st.floats(0, 5, **finite), st.floats(-10, 10, **finite))
def test_pz_offset_is_long_time_mean(t0, detune):
    field = FieldConfig(100, 10, 100 + detune)
    sp = collapse_uniform(12, 1.3, 0.4)
    t = t0 + np.linspace(0, 400, 40001)
    pz = polarizations(field, sp, t)[2]
    assert abs(pz.mean() - pz_offset(field, sp)) < 2e-2


def test_pz_asymptotic_basics():
    assert pz_asymptotic(10, 2000, 0.1, 0.0) == pytest.approx(1, abs=1e-15)
    gamma, rate = asymptotic_rate(10, 2000, 0.1)
    assert gamma == pytest.approx(2000 * 0.01 / 400) and rate == pytest.approx(gamma * 10)
    t = np.linspace(0, 50, 2001)
    osc = pz_asymptotic(10, 2000, 0.1, t) - gamma * (1 - 0)
    bound = (1 + (rate * t) ** 2) ** -0.25
    lead = np.cos(10 * t + 0.5 * np.arctan(rate * t)) * bound
    assert np.all(np.abs(lead) <= bound + 1e-15)
    with pytest.raises(ValidationError):
        pz_asymptotic(0.0, 10, 1.0, 1.0)
    assert np.all(np.isfinite(osc))


def _large_bath(gamma=0.25, n=2000, w1=10.0):
    g = 2 * w1 * np.sqrt(gamma / n)
    return g, collapse_uniform(n, g, 0.0)


def test_power_law_envelope_within_five_percent():
    w1, n = 10.0, 2000
    g, sp = _large_bath()
    field = FieldConfig(0.0, w1, 0.0)
    t = np.linspace(1.0, 10.0, 90001)
    exact = polarizations(field, sp, t)[2] - pz_offset(field, sp)
    closed = pz_asymptotic(w1, n, g, t) - 0.25
    dev, *_ = envelope_deviation(t, exact, closed)
    assert dev < 0.05


def test_phase_rate_resolved_as_gamma_times_omega1():
    """Fit the rate r in arctan(r t) against the exact sum; it lands on gamma*omega1."""
    w1, n, gamma = 10.0, 2000, 0.25
    g, sp = _large_bath(gamma, n, w1)
    field = FieldConfig(0.0, w1, 0.0)
    t = np.linspace(2.0, 20.0, 180001)
    exact = polarizations(field, sp, t)[2] - pz_offset(field, sp)
    rates = np.linspace(0.5, 5.0, 91)
    err = [envelope_deviation(t, exact, pz_asymptotic(w1, n, g, t, rate=r) - gamma)[0] for r in rates]
    best = rates[int(np.argmin(err))]
    assert best == pytest.approx(gamma * w1, rel=0.1)
    assert envelope_deviation(t, exact, pz_asymptotic(w1, n, g, t, rate=gamma) - gamma)[0] > 0.2


def test_exact_envelope_decays_as_inverse_sqrt():
    w1 = 10.0
    g, sp = _large_bath()
    field = FieldConfig(0.0, w1, 0.0)
    t = np.linspace(2.0, 20.0, 180001)
    exact = polarizations(field, sp, t)[2] - pz_offset(field, sp)
    te, ae = local_extrema(t, exact)
    slope = np.polyfit(np.log(te), np.log(ae), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_one_bath_spin_amplitudes_start_and_norm(rng):
    f = FieldConfig(100, 10, 95)
    np.testing.assert_allclose(one_bath_spin_amplitudes(f, 3.0, 0.0),
                               [1 / np.sqrt(2), 0, 1 / np.sqrt(2), 0], atol=1e-15)
    for _ in range(20):
        amps = np.array(one_bath_spin_amplitudes(f, float(rng.uniform(0, 50)), float(rng.uniform(0, 5))))
        assert np.sum(np.abs(amps) ** 2) == pytest.approx(1, abs=1e-12)


def test_one_bath_spin_amplitudes_match_sector_unitaries():
    f, g1, t = FieldConfig(100, 10, 98), 6.0, 0.7
    a_p, b_p, a_m, b_m = one_bath_spin_amplitudes(f, g1, t)
    up = rotating_frame_unitary(100, 10, 98, g1 / 2, t)[:, 0] / np.sqrt(2)
    dn = rotating_frame_unitary(100, 10, 98, -g1 / 2, t)[:, 0] / np.sqrt(2)
    np.testing.assert_allclose([a_p, b_p, a_m, b_m], [up[0], up[1], dn[0], dn[1]], atol=1e-12)


def test_one_bath_spin_entangles_at_lower_sideband():
    """At omega = omega0 - g1/2 the bath-down sector is resonant and flips the qubit.

    The state approaches (|uu> + |dd>)/sqrt2 (qubit written first).
    """
    w1, g1 = 10.0, 1000.0
    f = FieldConfig(1000.0, w1, 1000.0 - g1 / 2)
    a_p, b_p, a_m, b_m = one_bath_spin_amplitudes(f, g1, np.pi / w1)
    assert abs(a_m) < 1e-12 and abs(b_p) < 1e-2
    assert abs(a_p) ** 2 == pytest.approx(0.5, abs=1e-3) and abs(b_m) ** 2 == pytest.approx(0.5, abs=1e-12)
    assert pure_concurrence_amplitudes(a_p, b_p, a_m, b_m) >= 0.99


def test_one_bath_spin_upper_sideband():
    w1, g1 = 10.0, 1000.0
    f = FieldConfig(1000.0, w1, 1000.0 + g1 / 2)
    a_p, b_p, a_m, b_m = one_bath_spin_amplitudes(f, g1, np.pi / w1)
    assert abs(a_p) < 1e-12 and abs(b_m) < 1e-2
    assert pure_concurrence_amplitudes(a_p, b_p, a_m, b_m) >= 0.99
