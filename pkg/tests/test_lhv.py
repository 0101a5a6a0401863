import itertools
import math

import numpy as np
import pytest

import oracles
from seqbell import bell, lhv, qcore
from seqbell.bell import BlochObservable
from seqbell.errors import BadWeights, DimensionMismatch, ScenarioTooLarge, WrongScenario
from seqbell.lhv import BehaviorTable, InvalidBehavior
from seqbell.measurement import filter_from_operator, projective_from_observable, trivial_measurement

UNIFORM = BehaviorTable(np.full((2, 2, 2, 2), 0.25))
PR = BehaviorTable(oracles.pr_box())


def _signalling():
    # Bob's marginal moves by 0.1 when Alice switches setting
    p = np.full((2, 2, 2, 2), 0.25)
    p[1, :, :, 0] += 0.05
    p[1, :, :, 1] -= 0.05
    return BehaviorTable(p)


def _quantum(rho, settings):
    return lhv.behavior_from_quantum(
        rho, [o.measurement() for o in settings.alice], [o.measurement() for o in settings.bob]
    )


def test_behavior_table_validation():
    with pytest.raises(InvalidBehavior):
        BehaviorTable(np.full((2, 2, 2, 2), 0.3))
    with pytest.raises(DimensionMismatch):
        BehaviorTable(np.full((2, 2, 4), 0.25))
    with pytest.raises(InvalidBehavior):
        BehaviorTable(np.array([[[[1.5, -0.5], [0, 0]]]]))
    assert UNIFORM.outcomes_a == ("0", "1")
    with pytest.raises(WrongScenario):
        BehaviorTable(np.full((2, 2, 3, 3), 1 / 9)).correlators()


def test_behavior_from_quantum_examples(phi_plus, rng):
    a, b = qcore.random_density(2, rng), qcore.random_density(2, rng)
    z, x = projective_from_observable(oracles.SZ), projective_from_observable(oracles.SX)
    t = lhv.behavior_from_quantum(np.kron(a, b), [z, x], [x, z])
    for xs, ys in itertools.product(range(2), repeat=2):
        assert np.allclose(t.p[xs, ys], np.outer(t.p[xs, ys].sum(1), t.p[xs, ys].sum(0)), atol=1e-12)
    t = lhv.behavior_from_quantum(phi_plus, [z, x], [z, x])
    assert np.allclose(t.correlators(), [[1, 0], [0, 1]], atol=1e-12)
    # sigma_y appears with a minus sign on phi_plus
    y = projective_from_observable(oracles.SY)
    assert lhv.behavior_from_quantum(phi_plus, [y], [y]).correlators()[0, 0] == pytest.approx(-1)
    with pytest.raises(DimensionMismatch):
        lhv.behavior_from_quantum(phi_plus, [z, trivial_measurement(2)], [z])


def test_filtered_state_table_reaches_closed_form():
    s = 1 / math.sqrt(2)
    phi, psi = np.array([s, 0, 0, s]), np.array([0, s, s, 0])
    rho = 0.7 * np.outer(phi, phi) + 0.3 * np.outer(psi, psi)
    _, settings = bell.max_chsh(rho)
    assert lhv.chsh_of_behavior(_quantum(rho, settings)) == pytest.approx(2 * math.sqrt(1.16), abs=1e-9)


def test_is_no_signalling_examples(rng):
    ok, dev = lhv.is_no_signalling(PR)
    assert ok and dev == 0.0
    ok, dev = lhv.is_no_signalling(_signalling())
    assert not ok and dev == pytest.approx(0.1)
    for _ in range(20):
        rho = qcore.random_density(4, rng)
        obs = [BlochObservable.from_vector(rng.normal(size=3)).measurement() for _ in range(4)]
        assert lhv.is_no_signalling(lhv.behavior_from_quantum(rho, obs[:2], obs[2:]))[0]


def test_chsh_of_behavior_examples(phi_plus):
    assert lhv.chsh_of_behavior(UNIFORM) == 0.0
    assert lhv.chsh_of_behavior(PR) == 4.0
    _, settings = bell.max_chsh(phi_plus)
    assert lhv.chsh_of_behavior(_quantum(phi_plus, settings)) == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    with pytest.raises(WrongScenario):
        lhv.chsh_of_behavior(BehaviorTable(np.full((3, 2, 2, 2), 0.25)))


def test_chsh_functionals_match_chsh_of_behavior(rng):
    for _ in range(10):
        rho = qcore.random_density(4, rng)
        obs = [BlochObservable.from_vector(rng.normal(size=3)).measurement() for _ in range(4)]
        t = lhv.behavior_from_quantum(rho, obs[:2], obs[2:])
        best = max(float(np.sum(f * t.p)) for f in lhv.chsh_functionals())
        assert best == pytest.approx(lhv.chsh_of_behavior(t))


def test_strategy_enumeration():
    assert lhv.strategy_count((2, 2, 2, 2)) == 16
    assert lhv.strategy_count((2, 2, 3, 3)) == 81
    strategies = lhv.deterministic_strategies((2, 3, 2, 2))
    assert len(strategies) == 32
    assert strategies[0].response_a == (0, 0) and strategies[1].response_b == (0, 0, 1)
    d = lhv.vertex_matrix((2, 2, 2, 2), lhv.deterministic_strategies((2, 2, 2, 2)))
    assert d.shape == (16, 16) and np.all(d.sum(axis=0) == 4)
    with pytest.raises(ScenarioTooLarge):
        lhv.deterministic_strategies((10, 10, 2, 2))


def test_uniform_is_feasible():
    res = lhv.lhv_feasible(UNIFORM)
    assert res.feasible and res.residual < 1e-9
    assert np.allclose(res.model.behavior().p, UNIFORM.p, atol=1e-9)


def test_pr_box_certificate():
    res = lhv.lhv_feasible(PR)
    assert not res.feasible
    cert = res.certificate
    assert cert.local_bound == pytest.approx(2.0)
    assert cert.value == pytest.approx(4.0)
    assert cert.evaluate(PR) == pytest.approx(4.0)
    # the functional really is bounded by 2 on every deterministic strategy
    d = lhv.vertex_matrix(PR.shape, lhv.deterministic_strategies(PR.shape))
    assert np.max(cert.coefficients.reshape(-1) @ d) == pytest.approx(2.0)


def test_signalling_table_is_infeasible():
    res = lhv.lhv_feasible(_signalling())
    assert not res.feasible and res.certificate.violation > 1e-9


def test_hidden_nonlocality_witness_over_family():
    s = 1 / math.sqrt(2)
    for a2, p1 in [(0.8, 0.7), (0.9, 0.35), (0.2, 0.6), (0.7, 0.45)]:
        rho = oracles.example_state(a2, p1)
        _, pre_settings = bell.max_chsh(rho)
        assert lhv.lhv_feasible(_quantum(rho, pre_settings)).feasible
        phi, psi = np.array([s, 0, 0, s]), np.array([0, s, s, 0])
        rho_f = p1 * np.outer(phi, phi) + (1 - p1) * np.outer(psi, psi)
        _, post_settings = bell.max_chsh(rho_f)
        res = lhv.lhv_feasible(_quantum(rho_f, post_settings))
        assert not res.feasible and res.certificate.violation > 1e-9


def test_unfiltered_state_feasible_at_sampled_settings(rng):
    rho = oracles.example_state(0.8, 0.7)
    for _ in range(20):
        settings = bell.ChshSettings.from_vectors(*(rng.normal(size=3) for _ in range(4)))
        assert lhv.lhv_feasible(_quantum(rho, settings)).feasible


def test_model_round_trip(rng):
    shape = (2, 3, 3, 2)
    strategies = lhv.deterministic_strategies(shape)
    for _ in range(10):
        pick = rng.choice(len(strategies), size=5, replace=False)
        model = lhv.LhvModel(tuple(strategies[k] for k in pick), rng.dirichlet(np.ones(5)), 3, 2)
        res = lhv.lhv_feasible(model.behavior())
        assert res.feasible and res.residual < 1e-9
    with pytest.raises(BadWeights):
        lhv.LhvModel(tuple(strategies[:2]), np.array([0.5, 0.6]), 3, 2)


def test_feasibility_agrees_with_scipy_in_larger_scenarios(rng):
    # three outcomes per side: local mixtures, PR boxes embedded in them, random tables
    d = lhv.vertex_matrix((2, 2, 3, 3), lhv.deterministic_strategies((2, 2, 3, 3)))
    pr = np.zeros((2, 2, 3, 3))
    pr[:, :, :2, :2] = oracles.pr_box()
    verdicts = []
    for k in range(18):
        local = (d @ rng.dirichlet(np.ones(81))).reshape(2, 2, 3, 3)
        if k % 3 == 0:
            p = local
        elif k % 3 == 1:
            v = rng.uniform(0, 0.6)
            p = v * pr + (1 - v) * local
        else:
            p = rng.dirichlet(np.ones(9), size=(2, 2)).reshape(2, 2, 3, 3)
        t = BehaviorTable(p)
        verdicts.append(lhv.lhv_feasible(t).feasible)
        assert verdicts[-1] == oracles.scipy_local(t.p)
    assert any(verdicts) and not all(verdicts)


def test_certificates_separate(rng):
    for _ in range(30):
        v = rng.uniform(0.55, 1.0)
        t = BehaviorTable(v * oracles.pr_box() + (1 - v) * 0.25)
        res = lhv.lhv_feasible(t)
        assert not res.feasible
        assert res.certificate.evaluate(t) - res.certificate.local_bound > 1e-9
        assert res.certificate.violation == pytest.approx(4 * v - 2, abs=1e-9)


def test_preselected_behavior_matches_filtered_state(rng):
    from seqbell.measurement import SelectionContext, local_filter

    rho = qcore.random_density(4, rng)
    fa, fb = filter_from_operator(rng.normal(size=(2, 2))), filter_from_operator(rng.normal(size=(2, 2)))
    a = [BlochObservable.from_vector(rng.normal(size=3)).measurement() for _ in range(2)]
    b = [BlochObservable.from_vector(rng.normal(size=3)).measurement() for _ in range(2)]
    t = lhv.preselected_behavior(rho, SelectionContext(fa, fb, "pass", "pass"), a, b)
    _, rho_f = local_filter(rho, fa.operator("pass"), fb.operator("pass"))
    assert np.allclose(t.p, lhv.behavior_from_quantum(rho_f, a, b).p, atol=1e-10)


def test_separable_model_product_single_step(rng):
    a, b = qcore.random_density(2, rng), qcore.random_density(2, rng)
    z, x = projective_from_observable(oracles.SZ), projective_from_observable(oracles.SX)
    model, report = lhv.separable_lhv_model([(1.0, a, b)], [z, x], [x, z])
    assert report.reproduction_error < 1e-12
    assert report.all_feasible


def test_separable_model_classical_mixture():
    up, down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    f = filter_from_operator(np.diag([1.0, 0.5]))
    z = projective_from_observable(oracles.SZ)
    x = projective_from_observable(oracles.SX)
    model, report = lhv.separable_lhv_model([(0.5, up, up), (0.5, down, down)], [[f, z], [f, x]], [[f, z], [f, x]])
    assert report.reproduction_error < 1e-12
    assert set(report.conditional_feasible) == {((0,), (0,)), ((0,), (1,)), ((1,), (0,)), ((1,), (1,))}
    assert report.all_feasible


def test_separable_filter_then_chsh_stays_local(rng):
    comps = []
    for w in rng.dirichlet(np.ones(3)):
        comps.append((float(w), qcore.random_density(2, rng), qcore.random_density(2, rng)))
    rho = qcore.mix([(w, np.kron(a, b)) for w, a, b in comps])
    from seqbell.measurement import local_filter

    _, rho_f = local_filter(rho, rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
    assert bell.max_chsh(rho_f)[0] <= 2 + 1e-9


def test_separable_model_rejects_bad_weights(rng):
    a = qcore.random_density(2, rng)
    z = projective_from_observable(oracles.SZ)
    with pytest.raises(BadWeights):
        lhv.separable_lhv_model([(0.7, a, a), (0.7, a, a)], [z], [z])


def test_loophole_demo():
    demo = lhv.loophole_demo()
    assert len(demo.strategies) == 4 and np.all(demo.weights == 0.25)
    assert demo.post_selected_chsh == 4.0
    assert np.all(demo.coincidence_rate == 0.25)
    assert demo.forced_chsh == 2.0
    assert demo.full_lhv.feasible
    # only the (a', b') strategy flips Bob's sign
    flipped = [s for s in demo.strategies if 1 in s.response_b]
    assert flipped == [lhv.RejectionStrategy((None, 0), (None, 1))]
