import math
import warnings

import numpy as np
import pytest
import scipy.special
from hypothesis import given, strategies as st

from hybridion import hilbert as hb
from hybridion.laserfree import (LaserFreeDrive, RampProfile, SidebandError, _series, bessel_product_optimum,
                                 default_m_max, desk_scenario, effective_gate_drive, frame_transform,
                                 interaction_hamiltonian, interaction_modulated, lab_hamiltonian, lab_modulated,
                                 solve_sidebands)
from hybridion.propagate import PropagationConfig, propagator

SP = hb.SpaceDescriptor((5,))
SP2 = hb.SpaceDescriptor((3, 3))


def make(omega_mu=20.0, delta=100.0, omega_g=30.0, g=(1.0,), w=(170.0,), **kw):
    return LaserFreeDrive(omega_mu, delta, omega_g, g, w, **kw)


def gradient_part(d, space, t):
    acc = hb.zero(space)
    for j, (g, w) in enumerate(zip(d.gradient_rabi, d.mode_freqs)):
        a = hb.annihilate(j, space)
        acc = acc + g * (a * np.exp(-1j * w * t) + a.dag() * np.exp(1j * w * t))
    return 2 * math.cos(d.omega_g * t) * acc


def test_lab_hamiltonian_without_microwave():
    d = make(omega_mu=0.0)
    t = 0.37
    H = lab_hamiltonian(d, SP, t)
    assert H.allclose(hb.pauli("z", SP) @ gradient_part(d, SP, t))


def test_lab_hamiltonian_at_zero():
    d = make(g=(1.0, 0.5), w=(170.0, 210.0))
    X = [hb.annihilate(j, SP2) + hb.create(j, SP2) for j in (0, 1)]
    expect = 2 * 20.0 * hb.pauli("x", SP2) + 2 * (hb.pauli("z", SP2) @ (1.0 * X[0] + 0.5 * X[1]))
    assert lab_hamiltonian(d, SP2, 0.0).allclose(expect)


def test_hamiltonians_hermitian_at_many_times():
    d = make(g=(1.0, 0.5), w=(170.0, 210.0))
    rng = np.random.default_rng(7)
    for t in rng.uniform(0, 5, 1000):
        assert lab_hamiltonian(d, SP2, t).hermiticity_defect() < 1e-12
    HI = interaction_modulated(d, SP2)
    for t in rng.uniform(0, 5, 200):
        assert HI(t).hermiticity_defect() < 1e-12


@given(st.floats(0, 10))
def test_frame_transform_unitary(t):
    U = frame_transform(make(), SP, t)
    assert U.unitarity_defect() < 1e-12


@pytest.mark.parametrize("k", [0, 1, 2, 7])
def test_frame_transform_identity_at_nodes(k):
    d = make()
    assert frame_transform(d, SP, k * math.pi / d.delta_mu).allclose(hb.identity(SP), atol=1e-12)


def test_frame_transform_closed_form():
    d = make()
    t = 0.011
    theta = 2 * d.omega_mu * math.sin(d.delta_mu * t) / d.delta_mu
    ref = hb.expm(-1j * theta * hb.pauli("x", SP))
    assert frame_transform(d, SP, t).allclose(ref, atol=1e-13)


def test_interaction_without_microwave_keeps_only_gradient():
    d = make(omega_mu=0.0)
    t = 0.2
    expect = hb.pauli("z", SP) @ gradient_part(d, SP, t)
    assert interaction_hamiltonian(d, SP, t, m_max=3).allclose(expect, atol=1e-14)


@given(st.floats(0.001, 0.5))
def test_exact_frame_conjugation(t):
    # U^+ H_r U + i dU^+/dt U against the series, with and without truncation
    d = make()
    h = 1e-6
    U = frame_transform(d, SP, t).matrix
    dUd = (frame_transform(d, SP, t + h).matrix - frame_transform(d, SP, t - h).matrix).conj().T / (2 * h)
    exact = U.conj().T @ lab_hamiltonian(d, SP, t).matrix @ U + 1j * dUd @ U
    full = interaction_hamiltonian(d, SP, t, m_max=30).matrix
    assert np.abs(exact - full).max() < 1e-6
    z = d.bessel_argument
    for m_max in (1, 2, 3):
        tail = 2 * sum(abs(scipy.special.jv(k, z)) for k in range(2 * m_max + 1, 80))
        bound = tail * np.linalg.norm(gradient_part(d, SP, t).matrix, 2)
        trunc = interaction_hamiltonian(d, SP, t, m_max=m_max).matrix
        assert np.linalg.norm(exact - trunc, 2) <= bound + 1e-6


@given(st.floats(0, 20), st.floats(-10, 10))
def test_jacobi_anger_series(z, phase):
    cz, sy = _series(z, phase, 40)
    assert cz == pytest.approx(math.cos(z * math.sin(phase)), abs=1e-12)
    assert sy == pytest.approx(math.sin(z * math.sin(phase)), abs=1e-12)
    closure, _ = _series(z, 0.0, 40)
    assert closure == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.01, 30))
def test_default_m_max_covers_tail(z):
    m = default_m_max(z)
    tail = max(abs(scipy.special.jv(k, z)) for k in range(2 * m + 1, 2 * m + 60))
    assert tail < 1e-6


def test_ramp_envelope_and_rate():
    r = RampProfile("sine-squared", 2.0)
    L = 10.0
    assert r.envelope(0.0, L) == 0 and r.envelope(L, L) == pytest.approx(0, abs=1e-15)
    assert r.envelope(5.0, L) == 1 and r.envelope(1.0, L) == pytest.approx(0.5)
    ts = np.linspace(0.01, L - 0.01, 301)
    h = 1e-6
    fd = (r.envelope(ts + h, L) - r.envelope(ts - h, L)) / (2 * h)
    assert np.allclose(r.rate(ts, L), fd, atol=1e-6)
    with pytest.raises(ValueError):
        RampProfile("gaussian", 1.0)
    with pytest.raises(ValueError):
        RampProfile("sine-squared", -1.0)


def test_diagnostics_warn():
    with pytest.warns(UserWarning, match="delta/Omega_g"):
        make(delta=10.0, g=(1.0,))
    with pytest.warns(UserWarning, match="ramp"):
        make(ramp=RampProfile("sine-squared", 0.01))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        make()


def test_mode_count_checked():
    with pytest.raises(ValueError):
        lab_hamiltonian(make(), SP2, 0.0)


@given(st.floats(50, 500), st.floats(50, 500), st.floats(0.01, 5), st.sampled_from([-2, -1, 1, 2]))
def test_sideband_residuals(wj, wjp, Delta, n):
    try:
        sol = solve_sidebands(wj, wjp, Delta, n)
    except SidebandError as exc:
        assert exc.delta <= 0 or exc.omega_g <= 0
        return
    assert max(abs(r) for r in sol.residuals) < 1e-12 * max(wj, wjp)
    assert 2 * sol.delta == pytest.approx(wj - sol.omega_g - Delta, rel=1e-13)
    assert 3 * sol.delta == pytest.approx(wjp + sol.omega_g - n * Delta, rel=1e-13)


@given(st.floats(10, 1000), st.floats(0.01, 1))
def test_sideband_red_squeeze_same_mode(w, Delta):
    sol = solve_sidebands(w, w, Delta, -1)
    assert sol.delta == pytest.approx(2 * w / 5, rel=1e-14)
    assert sol.mode_j == sol.mode_jp == 0


def test_sideband_nonphysical():
    with pytest.raises(SidebandError) as exc:
        solve_sidebands(1.0, 10.0, 0.1, 1)
    assert exc.value.omega_g < 0
    with pytest.raises(ValueError):
        solve_sidebands(-1.0, 1.0, 0.1, 1)


def test_effective_gate_drive():
    sol = solve_sidebands(200.0, 200.0, 0.5, -1)
    off = effective_gate_drive(make(omega_mu=0.0, delta=sol.delta), sol)
    assert off.omega_a == 0 and off.omega_ap == 0
    d = make(omega_mu=0.25 * sol.delta * 3.0, delta=sol.delta, g=(2.0,))
    g = effective_gate_drive(d, sol)
    assert (g.axis_a, g.axis_ap, g.phi, g.n) == ("z", "y", math.pi / 2, -1)
    assert g.omega_a == pytest.approx(2 * scipy.special.jv(2, 3.0))
    assert g.omega_ap == pytest.approx(2 * scipy.special.jv(3, 3.0))


def test_bessel_product_optimum_vs_grid():
    z, val = bessel_product_optimum()
    zs = np.linspace(1e-6, 5, 2_000_001)
    prod = np.abs(scipy.special.jv(2, zs) * scipy.special.jv(3, zs))
    i = int(np.argmax(prod))
    assert z == pytest.approx(zs[i], abs=1e-5)
    assert val == pytest.approx(prod[i], rel=1e-10)


def test_desk_scenario_consistency():
    sc = desk_scenario(50)
    assert sc.ratio == pytest.approx(50)
    assert sc.drive.bessel_argument == pytest.approx(bessel_product_optimum()[0])
    assert max(abs(r) for r in sc.sideband.residuals) < 1e-12


@pytest.mark.slow
def test_frame_equivalence_on_random_states():
    sp = hb.SpaceDescriptor((4,))
    sc = desk_scenario(50, ramp_periods=10)
    cfg = PropagationConfig()
    Ur = propagator(lab_modulated(sc.drive, sp), sc.gate_time, cfg).matrix
    UI = propagator(interaction_modulated(sc.drive, sp), sc.gate_time, cfg).matrix
    rng = np.random.default_rng(3)
    for _ in range(8):
        v = rng.normal(size=sp.dim) + 1j * rng.normal(size=sp.dim)
        v /= np.linalg.norm(v)
        assert 1 - abs(np.vdot(Ur @ v, UI @ v)) ** 2 <= 1e-3
