import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridion import hilbert as hb
from hybridion.drives import (EffectiveInteraction, GateDrive, Interaction, NotCatalogedError, classify,
                              effective_hamiltonian, effective_propagator, gate_hamiltonian, rabi_rate,
                              solve_schedule)

SMALL = hb.SpaceDescriptor((8,))
PAIR = hb.SpaceDescriptor((5, 5))


def space_for(kind):
    return SMALL if kind.same_mode else PAIR


def inter(kind, phi=0.0, rabi=0.7, axes=("y", "x")):
    return EffectiveInteraction(kind, rabi, *axes, 0, 0 if kind.same_mode else 1, phi)


def test_table_has_eight_rows_in_order():
    assert [k.label for k in Interaction] == [
        "OneModeSqueeze", "TwoModeSqueeze", "NumberShift", "BeamSplitter",
        "Trisqueeze", "TwoModeTrisqueeze", "CubicNumber", "TwoModeCubic"]
    assert [k.gaussian for k in Interaction] == [True] * 4 + [False] * 4


@pytest.mark.parametrize("n,same,kind", [
    (-1, True, Interaction.ONE_MODE_SQUEEZE), (1, False, Interaction.BEAM_SPLITTER),
    (-2, True, Interaction.TRISQUEEZE), (2, False, Interaction.TWO_MODE_CUBIC)])
def test_classify_examples(n, same, kind):
    assert classify(n, same) is kind


@given(st.integers(-50, 50), st.booleans())
def test_classify_total_on_catalog(n, same):
    if n in (-2, -1, 1, 2):
        k = classify(n, same)
        assert (k.n, k.same_mode) == (n, same)
    else:
        with pytest.raises(NotCatalogedError, match="not cataloged"):
            classify(n, same)


def test_parse_accepts_labels_and_names():
    assert Interaction.parse("BeamSplitter") is Interaction.BEAM_SPLITTER
    assert Interaction.parse("two-mode-squeeze") is Interaction.TWO_MODE_SQUEEZE
    with pytest.raises(ValueError):
        Interaction.parse("Teleport")


def test_gate_drive_validation():
    with pytest.raises(ValueError):
        GateDrive(1, 1, 1, -1, "x", "x")
    with pytest.raises(ValueError):
        GateDrive(1, 1, 0, -1)
    assert GateDrive(1, 1, 2.0, -1).t_i == pytest.approx(math.pi)


def test_gate_hamiltonian_at_zero():
    d = GateDrive(0.8, 0.8, 3.0, 1, "y", "x")
    X = hb.annihilate(0, SMALL) + hb.create(0, SMALL)
    expect = 0.8 * ((hb.pauli("y", SMALL) + hb.pauli("x", SMALL)) @ X)
    assert gate_hamiltonian(d, SMALL)(0.0).allclose(expect)


@given(st.sampled_from([-2, -1, 1, 2]), st.floats(0, 10), st.floats(0, 2 * math.pi))
def test_gate_hamiltonian_periodic_and_hermitian(n, t, phi):
    d = GateDrive(1.0, 0.6, 2.5, n, "y", "x", phi=phi)
    H = gate_hamiltonian(d, SMALL)
    assert H(t).is_hermitian()
    assert np.allclose(H(t).matrix, H(t + d.t_i).matrix, atol=1e-12)


def test_gate_hamiltonian_period_average_vanishes():
    d = GateDrive(1.0, 1.0, 2.0, -1)
    H = gate_hamiltonian(d, SMALL)
    ts = np.linspace(0, d.t_i, 400, endpoint=False)
    avg = sum(H(t).matrix for t in ts) / len(ts)
    assert np.abs(avg).max() < 1e-12


def test_rabi_rates():
    assert rabi_rate(2, 1.0, 2.0, 4.0) == 1.0
    assert rabi_rate(3, 2.0, 1.0, 4.0) == 0.5
    d = GateDrive(1.0, 2.0, 4.0, -2)
    assert EffectiveInteraction.from_drive(d).rabi == pytest.approx(2 * 2 * 1 / 16)


def test_one_mode_squeeze_example():
    # alpha = y, alpha' = x: eps_{yxz} = -1, so H = -i Omega2 sigma_z (a^+2 - a^2)
    a = hb.annihilate(0, SMALL)
    ad = a.dag()
    expect = -1j * 0.7 * (hb.pauli("z", SMALL) @ (ad @ ad - a @ a))
    H = effective_hamiltonian(inter(Interaction.ONE_MODE_SQUEEZE), SMALL)
    assert H.allclose(expect)


@given(st.floats(0, 2 * math.pi))
def test_number_shift_simplification(phi):
    # literal table form vs sin(phi)(2 a^+a + 1), compared below the truncation edge
    a = hb.annihilate(0, SMALL)
    ad = a.dag()
    I = hb.identity(SMALL)
    literal = 1j * ((ad @ a) * np.exp(-1j * phi) - (a @ ad) * np.exp(1j * phi) + math.cos(phi) * I)
    expect = -0.7 * (hb.pauli("z", SMALL) @ literal).matrix
    H = effective_hamiltonian(inter(Interaction.NUMBER_SHIFT, phi), SMALL).matrix
    N = SMALL.fock_cutoffs[0]
    keep = [i for i in range(SMALL.dim) if i % N < N - 1]
    assert np.allclose(H[np.ix_(keep, keep)], expect[np.ix_(keep, keep)], atol=1e-12)


def test_number_shift_vanishes_at_zero_phase():
    assert effective_hamiltonian(inter(Interaction.NUMBER_SHIFT, 0.0), SMALL).norm() == 0


def test_trisqueeze_vacuum_matrix_element():
    phi = 0.4
    H = effective_hamiltonian(inter(Interaction.TRISQUEEZE, phi), SMALL)
    # spin factor: sigma_x between |down> and |up>
    amp = hb.basis_state(SMALL, "up", 3).overlap(H @ hb.basis_state(SMALL, "down", 0))
    assert amp == pytest.approx(0.7 * math.sqrt(6) * np.exp(1j * phi))
    out = H @ hb.basis_state(SMALL, "down", 0)
    support = {i % 8 for i in np.nonzero(np.abs(out.amplitudes) > 1e-14)[0]}
    assert support == {3}


@pytest.mark.parametrize("kind", list(Interaction))
@given(phi=st.floats(0, 2 * math.pi), axes=st.permutations("xyz"))
def test_effective_hamiltonians_hermitian(kind, phi, axes):
    H = effective_hamiltonian(inter(kind, phi, axes=tuple(axes[:2])), space_for(kind))
    assert H.hermiticity_defect() < 1e-12


@given(st.floats(0, 2 * math.pi))
def test_one_mode_squeeze_phase_flip(phi):
    H0 = effective_hamiltonian(inter(Interaction.ONE_MODE_SQUEEZE, phi), SMALL)
    H1 = effective_hamiltonian(inter(Interaction.ONE_MODE_SQUEEZE, phi + math.pi), SMALL)
    assert H1.allclose(-H0, atol=1e-12)


def test_mode_mismatch_rejected():
    with pytest.raises(ValueError):
        EffectiveInteraction(Interaction.BEAM_SPLITTER, 1.0, mode_j=0, mode_jp=0)
    with pytest.raises(ValueError):
        effective_hamiltonian(inter(Interaction.BEAM_SPLITTER), SMALL)


def test_propagator_at_zero_time():
    U = effective_propagator(inter(Interaction.TWO_MODE_SQUEEZE), PAIR, 0.0)
    assert U.allclose(hb.identity(PAIR))


def test_beam_splitter_full_swap():
    sp = hb.SpaceDescriptor((4, 4))
    it = EffectiveInteraction(Interaction.BEAM_SPLITTER, 1.0, mode_j=0, mode_jp=1)
    U = effective_propagator(it, sp, math.pi / 2)
    # spin in a sigma_z eigenstate (the alpha'' axis for y, x)
    out = hb.trace_over_spin(U @ hb.basis_state(sp, "down", 1, 0))
    assert out[0, 1] == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.5])
def test_squeezing_mean_phonon(r):
    sp = hb.SpaceDescriptor((240,))
    U = effective_propagator(EffectiveInteraction(Interaction.ONE_MODE_SQUEEZE, 1.0), sp, r / 2)
    psi = U @ hb.basis_state(sp, "down", 0)
    assert psi.overlap(hb.number(0, sp) @ psi).real == pytest.approx(math.sinh(r) ** 2, rel=1e-9)


def test_schedule_examples():
    s = solve_schedule(2, 1, 1, 1, 0.75)
    assert s.delta == pytest.approx(math.sqrt(4 * math.pi / 0.75), rel=1e-15)
    assert s.t_f == pytest.approx(2 * math.pi / s.delta, rel=1e-15)
    s4 = solve_schedule(2, 4, 1, 1, 0.75)
    assert s4.delta / s.delta == pytest.approx(2, rel=1e-12)
    assert s4.t_f / s.t_f == pytest.approx(2, rel=1e-12)
    t1, t8 = solve_schedule(3, 1, 1, 1, 0.12), solve_schedule(3, 8, 1, 1, 0.12)
    assert t8.delta / t1.delta == pytest.approx(2, rel=1e-12)
    assert t8.t_f / t1.t_f == pytest.approx(4, rel=1e-12)


@given(st.sampled_from([2, 3]), st.integers(1, 64), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.01, 3))
def test_schedule_round_trip(order, K, wa, wap, action):
    s = solve_schedule(order, K, wa, wap, action)
    assert abs(s.recomputed_action(wa, wap) - action) <= 1e-12 * max(1, action)
    assert s.t_f == pytest.approx(2 * math.pi * K / s.delta, rel=1e-15)


@pytest.mark.parametrize("args", [(1, 1, 1, 1, 1), (2, 0, 1, 1, 1), (2, 1, 0, 1, 1), (3, 1, 1, 1, -1)])
def test_schedule_rejects_bad_input(args):
    with pytest.raises(ValueError):
        solve_schedule(*args)
