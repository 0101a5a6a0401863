import math

import numpy as np
import pytest

import oracles
from seqbell import bell, optics, qcore
from seqbell.errors import BadWeights, DegenerateProtocol, FilterUndefined, OutOfRange
from seqbell.optics import ExampleStateParams

SWAP = np.array([[0, 1], [1, 0]])


def test_params_and_constraint():
    ok = ExampleStateParams(0.8, 0.7)
    assert ok.constraint_satisfied and ok.constraint_margin == pytest.approx(0.36 - 0.16)
    assert not ExampleStateParams(0.5, 0.7).constraint_satisfied
    edge = ExampleStateParams(0.8, 0.5)
    assert edge.constraint_satisfied and edge.constraint_margin == pytest.approx(0.36)
    # boundary points count as satisfied despite rounding
    assert ExampleStateParams(0.3, 0.7).constraint_satisfied
    for bad in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.2)]:
        with pytest.raises(OutOfRange):
            ExampleStateParams(*bad)


def test_beamsplitter_examples():
    assert np.allclose(optics.beamsplitter(1.0).matrix, np.eye(2))
    assert np.allclose(optics.beamsplitter(0.5).matrix, np.array([[1, 1j], [1j, 1]]) / math.sqrt(2))
    # T = (beta/alpha)^2 = 1/4 sends |2> (input column) to 1/2 |2> + i sqrt(3)/2 |D>
    col = optics.beamsplitter(0.25).matrix[:, 0]
    assert np.allclose(col, [0.5, 1j * math.sqrt(3) / 2])
    for t in (-0.1, 1.1):
        with pytest.raises(OutOfRange):
            optics.beamsplitter(t)


def test_phase_shifter_examples():
    assert np.allclose(optics.phase_shifter(0).matrix, np.eye(2))
    assert np.allclose(optics.phase_shifter(math.pi).matrix, np.diag([-1, 1]))
    assert np.allclose(optics.phase_shifter(math.pi / 2).matrix, np.diag([1j, 1]))


def test_mz_unitary_examples(rng):
    assert np.allclose(optics.mz_unitary(0.0).matrix, 1j * SWAP)
    assert np.allclose(optics.mz_unitary(math.pi).matrix, np.diag([-1, 1]))
    for _ in range(100):
        u = optics.mz_unitary(*rng.uniform(0, 2 * math.pi, 2)).matrix
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12


def test_mz_mirror_and_transparent_on_projectors():
    # |2''> -> |1'> and |1''> -> |2'> in mirror mode; identity mapping when transparent
    for phi, perm in [(0.0, SWAP), (math.pi, np.eye(2))]:
        u = optics.mz_unitary(phi).matrix
        for k in range(2):
            e = np.eye(2)[:, k]
            out = u @ e
            proj = np.outer(out, out.conj())
            target = np.outer(perm[:, k], perm[:, k])
            assert np.allclose(proj, target, atol=1e-12)


def test_pdc_pair_state_examples():
    assert np.allclose(optics.pdc_pair_state(0.5), np.array([1, 0, 0, 1]) / math.sqrt(2))
    psi = optics.pdc_pair_state(0.8)
    assert psi[0] == pytest.approx(math.sqrt(0.2)) and psi[3] == pytest.approx(math.sqrt(0.8))
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    with pytest.raises(OutOfRange):
        optics.pdc_pair_state(1.0)


def test_stochastic_mz_mix_examples():
    pure = optics.stochastic_mz_mix(optics.pdc_pair_state(0.8), 1.0, 0.0)
    assert np.allclose(pure, oracles.example_state(0.8, 1.0), atol=1e-12)
    balanced = optics.stochastic_mz_mix(optics.pdc_pair_state(0.5), 0.5, 0.5)
    assert np.allclose(np.abs(bell.correlation_matrix(balanced)), np.diag([1, 0, 0]), atol=1e-12)
    assert bell.max_chsh(balanced)[0] == pytest.approx(2.0)
    rho = optics.stochastic_mz_mix(optics.pdc_pair_state(0.8), 0.7, 0.3)
    assert np.allclose(bell.correlation_matrix(rho), np.diag([0.8, -0.32, 0.4]), atol=1e-12)
    with pytest.raises(BadWeights):
        optics.stochastic_mz_mix(optics.pdc_pair_state(0.8), 0.7, 0.4)


def test_mixer_needs_its_phase_plates():
    # bare interferometer: the transparent branch carries a relative sign
    psi = optics.pdc_pair_state(0.8)
    bare = np.kron(np.eye(2), optics.mz_unitary(math.pi).matrix) @ psi
    assert np.allclose(bare, [-math.sqrt(0.2), 0, 0, math.sqrt(0.8)])
    fixed = np.kron(np.eye(2), optics.mixer_unitary(math.pi).matrix) @ psi
    psi1, psi2 = optics.example_pure_states(0.8)
    assert abs(np.vdot(psi1, fixed)) == pytest.approx(1.0)
    fixed = np.kron(np.eye(2), optics.mixer_unitary(0.0).matrix) @ psi
    assert abs(np.vdot(psi2, fixed)) == pytest.approx(1.0)


def test_build_example_state_matches_construction():
    for a2 in np.linspace(0.05, 0.95, 7):
        for p1 in np.linspace(0.05, 0.95, 7):
            rho, _ = optics.build_example_state(ExampleStateParams(a2, p1))
            built = optics.stochastic_mz_mix(optics.pdc_pair_state(a2), p1, 1 - p1)
            assert np.max(np.abs(rho - built)) < 1e-12
            assert np.max(np.abs(rho - oracles.example_state(a2, p1))) < 1e-15


def test_preselection_filter_routes_agree():
    for a2 in (0.8, 0.6, 0.3, 0.1):
        params = ExampleStateParams(a2, 0.7)
        pre = optics.preselection_for(params)
        assert pre.swapped == (a2 < 0.5)
        rho, _ = optics.build_example_state(params)
        p_bs, rho_bs = optics.beamsplitter_filter(rho, pre)
        from seqbell.measurement import local_filter

        p_k, rho_k = local_filter(rho, pre.kraus, np.eye(2))
        assert p_bs == pytest.approx(p_k, abs=1e-14)
        assert p_k == pytest.approx(2 * min(a2, 1 - a2), abs=1e-10)
        assert np.max(np.abs(rho_bs - rho_k)) < 1e-12
        assert np.max(np.abs(rho_k - optics.filtered_closed_form(0.7))) < 1e-10
        u = pre.three_mode_unitary()
        assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12)


def test_preselection_without_swap():
    with pytest.raises(FilterUndefined):
        optics.preselection_for(ExampleStateParams(0.3, 0.7), allow_swap=False)


def test_pipeline_reference_point():
    rep = optics.fig3_pipeline(ExampleStateParams(0.8, 0.7))
    assert rep.pass_probability == pytest.approx(0.4, abs=1e-12)
    assert rep.pass_probability_closed_form == pytest.approx(0.4)
    assert rep.pre_chsh_max == pytest.approx(1.7888544, abs=1e-7)
    assert rep.post_chsh_max == pytest.approx(2.1540659, abs=1e-7)
    assert rep.rho_prime_closed_form_error < 1e-10
    assert rep.beamsplitter_route_error < 1e-10
    assert rep.filter_route_error < 1e-10
    assert rep.pre_lhv.feasible and not rep.post_lhv.feasible
    assert rep.verdict == optics.HIDDEN_NONLOCALITY
    assert not rep.filter_swapped


def test_pipeline_degenerate_and_identity_cases():
    with pytest.raises(DegenerateProtocol):
        optics.fig3_pipeline(ExampleStateParams(0.8, 0.5))
    loose = optics.fig3_pipeline(ExampleStateParams(0.8, 0.5), strict=False)
    assert loose.degenerate and loose.post_chsh_max == pytest.approx(2.0)
    assert loose.verdict == optics.NO_HIDDEN_NONLOCALITY
    same = optics.fig3_pipeline(ExampleStateParams(0.5, 0.5))
    assert not same.filter_applied
    assert same.post_chsh_max == pytest.approx(same.pre_chsh_max, abs=1e-12)
    assert same.pass_probability == pytest.approx(1.0)


def test_pipeline_swapped_filter():
    rep = optics.fig3_pipeline(ExampleStateParams(0.2, 0.3))
    assert rep.filter_swapped
    assert rep.pass_probability == pytest.approx(0.4, abs=1e-12)
    assert rep.verdict == optics.HIDDEN_NONLOCALITY
    with pytest.raises(FilterUndefined):
        optics.fig3_pipeline(ExampleStateParams(0.2, 0.3), allow_swap=False)


def test_pipeline_custom_settings():
    s = bell.ChshSettings.from_vectors([1, 0, 0], [0, 0, 1], [1, 0, 0.4], [1, 0, -0.4])
    rep = optics.fig3_pipeline(ExampleStateParams(0.8, 0.7), settings=s)
    assert rep.post_chsh_at_settings == pytest.approx(2 * math.sqrt(1.16), abs=1e-12)
    assert rep.pre_chsh_at_settings < 2


def test_run_filter_protocol_identity(rng):
    rho = qcore.random_density(4, rng)
    rep = optics.run_filter_protocol(rho, None, None)
    assert rep.pass_probability == pytest.approx(1.0)
    assert rep.post_chsh_max == pytest.approx(rep.pre_chsh_max, abs=1e-10)


def test_optical_unitary_rejects_non_unitary():
    with pytest.raises(ValueError):
        optics.OpticalUnitary(np.diag([1.0, 0.5]))
