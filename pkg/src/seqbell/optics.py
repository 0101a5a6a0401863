"""Linear-optics model of the two-crystal source, the stochastic Mach-Zehnder
mixer and the pre-selection beamsplitter, plus the end-to-end protocol.

Basis convention (both sides): mode ``|1>`` is index 0, mode ``|2>`` is index 1.
On side B the same holds for the source modes ``|1''>``, ``|2''>`` and the
output modes ``|1'>``, ``|2'>``. The detector mode ``|D>`` is index 2 in the
three-mode picture of the pre-selection beamsplitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bell, lhv, qcore
from .errors import BadWeights, DegenerateProtocol, FilterUndefined, OutOfRange
from .measurement import (
    GeneralizedMeasurement,
    SelectionContext,
    filter_from_operator,
    local_filter,
    trivial_measurement,
)

UNITARY_ATOL = 1e-10
CONSTRAINT_ATOL = 1e-12
CHSH_TOL = 1e-9
STATE_TOL = 1e-10

HIDDEN_NONLOCALITY = "hidden nonlocality exhibited"
NO_HIDDEN_NONLOCALITY = "no hidden nonlocality exhibited"


@dataclass(frozen=True)
class ExampleStateParams:
    alpha_sq: float
    p1: float

    def __post_init__(self):
        if not 0.0 < self.alpha_sq < 1.0:
            raise OutOfRange(f"alpha_sq={self.alpha_sq!r} must lie in (0, 1)")
        if not 0.0 < self.p1 < 1.0:
            raise OutOfRange(f"p1={self.p1!r} must lie in (0, 1)")

    @property
    def beta_sq(self) -> float:
        return 1.0 - self.alpha_sq

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    @property
    def alpha(self) -> float:
        return math.sqrt(self.alpha_sq)

    @property
    def beta(self) -> float:
        return math.sqrt(self.beta_sq)

    @property
    def constraint_margin(self) -> float:
        """``(alpha^2 - beta^2)^2 - (p1 - p2)^2``; non-negative means no direct CHSH violation."""
        return (self.alpha_sq - self.beta_sq) ** 2 - (self.p1 - self.p2) ** 2

    @property
    def constraint_satisfied(self) -> bool:
        return self.constraint_margin >= -CONSTRAINT_ATOL


@dataclass(frozen=True)
class OpticalUnitary:
    matrix: np.ndarray
    mode_labels: tuple[str, ...] = ()

    def __post_init__(self):
        u = qcore.as_cmatrix(self.matrix)
        if np.max(np.abs(qcore.dagger(u) @ u - np.eye(u.shape[1]))) > UNITARY_ATOL:
            raise ValueError("optical element is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    def __matmul__(self, other: "OpticalUnitary") -> "OpticalUnitary":
        return OpticalUnitary(self.matrix @ other.matrix, self.mode_labels)


def beamsplitter(transmittivity: float) -> OpticalUnitary:
    """Symmetric beamsplitter; reflection adds a quarter-wave phase ``i``."""
    if not 0.0 <= transmittivity <= 1.0:
        raise OutOfRange(f"transmittivity {transmittivity!r} outside [0, 1]")
    t = math.sqrt(transmittivity)
    r = 1j * math.sqrt(1.0 - transmittivity)
    return OpticalUnitary(np.array([[t, r], [r, t]]))


def phase_shifter(phi: float) -> OpticalUnitary:
    """Phase ``phi`` on the first mode."""
    return OpticalUnitary(np.diag([np.exp(1j * phi), 1.0]))


def mz_unitary(phi_internal: float, phi_external: float = 0.0) -> OpticalUnitary:
    """Mach-Zehnder interferometer with two 50-50 beamsplitters.

    ``BS(1/2) . phase(phi_internal) . BS(1/2) . phase(phi_external)``.
    Internal phase 0 swaps the modes (mirror), ``pi`` passes them through.
    """
    half = beamsplitter(0.5)
    return half @ phase_shifter(phi_internal) @ half @ phase_shifter(phi_external)


def pdc_pair_state(alpha_sq: float) -> np.ndarray:
    """``alpha |2>|2''> + beta |1>|1''>`` from two coherently pumped crystals."""
    if not 0.0 < alpha_sq < 1.0:
        raise OutOfRange(f"alpha_sq={alpha_sq!r} must lie in (0, 1)")
    psi = np.zeros(4, dtype=complex)
    psi[0b00] = math.sqrt(1.0 - alpha_sq)
    psi[0b11] = math.sqrt(alpha_sq)
    return qcore.pure_state(psi)


# Quarter-wave plates before and after the mixer interferometer. Without them
# the pass-through branch carries a relative sign (alpha|22'> - beta|11'>).
MIXER_INPUT_PHASE = math.pi / 2
MIXER_OUTPUT_PHASE = math.pi / 2


def mixer_unitary(phi_internal: float) -> OpticalUnitary:
    """Mixer interferometer on side B including its fixed compensating phase plates."""
    return phase_shifter(MIXER_OUTPUT_PHASE) @ mz_unitary(phi_internal, MIXER_INPUT_PHASE)


def stochastic_mz_mix(psi, p1: float, p2: float) -> np.ndarray:
    """Mixture produced by an interferometer whose internal phase jumps randomly.

    Internal phase ``pi`` (transparent, weight ``p1``) yields ``psi_1``;
    phase 0 (mirror, weight ``p2``) yields ``psi_2``.
    """
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-12:
        raise BadWeights(f"weights ({p1}, {p2}) do not form a probability vector")
    psi = qcore.pure_state(psi)
    branches = []
    for weight, phi in ((p1, math.pi), (p2, 0.0)):
        if weight == 0:
            continue
        out = qcore.kron(np.eye(2), mixer_unitary(phi).matrix) @ psi
        branches.append((weight, qcore.density_from_pure(out)))
    return qcore.mix(branches)


def example_pure_states(alpha_sq: float) -> tuple[np.ndarray, np.ndarray]:
    """``psi_1 = alpha|2>|2'> + beta|1>|1'>`` and ``psi_2 = alpha|2>|1'> + beta|1>|2'>``."""
    a, b = math.sqrt(alpha_sq), math.sqrt(1.0 - alpha_sq)
    psi1 = np.zeros(4)
    psi1[0b11], psi1[0b00] = a, b
    psi2 = np.zeros(4)
    psi2[0b10], psi2[0b01] = a, b
    return qcore.pure_state(psi1), qcore.pure_state(psi2)


def build_example_state(params: ExampleStateParams) -> tuple[np.ndarray, bool]:
    psi1, psi2 = example_pure_states(params.alpha_sq)
    rho = qcore.mix([
        (params.p1, qcore.density_from_pure(psi1)),
        (params.p2, qcore.density_from_pure(psi2)),
    ])
    return rho, params.constraint_satisfied


def filtered_closed_form(p1: float) -> np.ndarray:
    """``p1 |phi+><phi+| + p2 |psi+><psi+|`` with the balanced superpositions of both terms."""
    s = 1.0 / math.sqrt(2.0)
    phi = np.array([s, 0, 0, s])
    psi = np.array([0, s, s, 0])
    return qcore.mix([(p1, qcore.density_from_pure(phi)), (1.0 - p1, qcore.density_from_pure(psi))])


# --- pre-selection beamsplitter -------------------------------------------------


@dataclass(frozen=True)
class Preselection:
    """Filter realized by a beamsplitter in one path of side A."""

    attenuated_mode: int  # 1 for path |2>, 0 for path |1>
    transmittivity: float

    @property
    def kraus(self) -> np.ndarray:
        k = np.eye(2)
        k[self.attenuated_mode, self.attenuated_mode] = math.sqrt(self.transmittivity)
        return k

    @property
    def swapped(self) -> bool:
        return self.attenuated_mode == 0

    def three_mode_unitary(self) -> np.ndarray:
        """Unitary on modes (|1>, |2>, |D>) coupling the attenuated path to the detector."""
        bs = beamsplitter(self.transmittivity).matrix
        u = np.eye(3, dtype=complex)
        idx = [self.attenuated_mode, 2]
        u[np.ix_(idx, idx)] = bs
        return u

    def measurement(self) -> GeneralizedMeasurement:
        return filter_from_operator(self.kraus)


def preselection_for(params: ExampleStateParams, allow_swap: bool = True) -> Preselection:
    """Beamsplitter of transmittivity ``(beta/alpha)^2`` on path 2.

    For ``alpha < beta`` the roles of the paths swap (transmittivity
    ``(alpha/beta)^2`` on path 1) unless ``allow_swap`` is false, in which case
    `FilterUndefined` is raised.
    """
    if params.alpha >= params.beta:
        return Preselection(1, params.beta_sq / params.alpha_sq)
    if not allow_swap:
        raise FilterUndefined(
            f"transmittivity (beta/alpha)^2 = {params.beta_sq / params.alpha_sq:.6g} > 1 is unphysical"
        )
    return Preselection(0, params.alpha_sq / params.beta_sq)


def beamsplitter_filter(rho, pre: Preselection) -> tuple[float, np.ndarray]:
    """Filter side A by the physical three-mode beamsplitter and discard detector clicks."""
    embed = np.zeros((3, 2))
    embed[0, 0] = embed[1, 1] = 1.0
    u = qcore.kron(pre.three_mode_unitary() @ embed, np.eye(2))  # (6, 4)
    out = u @ np.asarray(rho) @ qcore.dagger(u)
    keep = [0, 1, 2, 3]  # side-A modes |1>, |2> with either B mode; |D> rows are 4, 5
    kept = out[np.ix_(keep, keep)]
    prob = float(np.trace(kept).real)
    return prob, qcore.density_matrix(kept / prob, herm_atol=1e-10, trace_atol=1e-10)


# --- protocol -----------------------------------------------------------------


@dataclass
class ProtocolReport:
    params: ExampleStateParams | None
    rho: np.ndarray
    constraint_satisfied: bool | None
    pre_chsh_max: float
    pre_settings: bell.ChshSettings
    pass_probability: float
    pass_probability_closed_form: float | None
    rho_prime: np.ndarray
    rho_prime_closed_form_error: float | None
    beamsplitter_route_error: float | None
    filter_route_error: float
    post_chsh_max: float
    post_settings: bell.ChshSettings
    pre_chsh_at_settings: float
    post_chsh_at_settings: float
    pre_behavior: lhv.BehaviorTable
    post_behavior: lhv.BehaviorTable
    pre_lhv: lhv.LhvResult
    post_lhv: lhv.LhvResult
    filter_swapped: bool = False
    filter_applied: bool = True
    degenerate: bool = False
    tol: float = CHSH_TOL
    verdict: str = field(default="")

    def __post_init__(self):
        if not self.verdict:
            self.verdict = decide_verdict(self.pre_chsh_at_settings, self.post_chsh_at_settings, self.post_lhv, self.tol)


def decide_verdict(pre: float, post: float, post_lhv: lhv.LhvResult, tol: float = CHSH_TOL) -> str:
    if pre <= 2.0 + tol and post > 2.0 + tol and not post_lhv.feasible:
        return HIDDEN_NONLOCALITY
    return NO_HIDDEN_NONLOCALITY


def _behavior(rho, settings: bell.ChshSettings) -> lhv.BehaviorTable:
    return lhv.behavior_from_quantum(
        rho,
        [o.measurement() for o in settings.alice],
        [o.measurement() for o in settings.bob],
    )


def run_filter_protocol(
    rho,
    filter_a,
    filter_b=None,
    settings: bell.ChshSettings | str = "optimal",
    tol: float = lhv.FEASIBILITY_TOL,
    seed: int = 0,
) -> ProtocolReport:
    """Local filtering followed by a CHSH test, for an arbitrary two-qubit state and filters.

    The filtered state is computed directly (`local_filter`) and the
    pre-selected behavior through the sequential route (filter measurement,
    then the CHSH projectors, conditioned on both filters passing); the two
    are compared in the report.
    """
    rho = qcore.density_matrix(rho)
    filter_a = np.eye(2) if filter_a is None else qcore.as_cmatrix(filter_a)
    filter_b = np.eye(2) if filter_b is None else qcore.as_cmatrix(filter_b)
    fa, fb = filter_from_operator(filter_a), filter_from_operator(filter_b)
    prob, rho_prime = local_filter(rho, fa.operator("pass"), fb.operator("pass"))
    return _assemble(None, rho, None, prob, None, rho_prime, None, None, fa, fb, settings, tol, seed)


def _assemble(params, rho, constraint, prob, prob_cf, rho_prime, cf_err, bs_err, fa, fb, settings, tol, seed,
              swapped=False, applied=True, degenerate=False) -> ProtocolReport:
    pre_max, pre_opt = bell.max_chsh(rho, seed=seed)
    post_max, post_opt = bell.max_chsh(rho_prime, seed=seed)
    if isinstance(settings, str):
        if settings != "optimal":
            raise ValueError(f"settings must be a ChshSettings or 'optimal', not {settings!r}")
        pre_settings, post_settings = pre_opt, post_opt
    else:
        pre_settings = post_settings = settings
    pre_behavior = _behavior(rho, pre_settings)
    direct_post = _behavior(rho_prime, post_settings)
    context = SelectionContext(fa, fb, "pass", "pass")
    post_behavior = lhv.preselected_behavior(
        rho,
        context,
        [o.measurement() for o in post_settings.alice],
        [o.measurement() for o in post_settings.bob],
    )
    route_err = float(np.max(np.abs(post_behavior.p - direct_post.p)))
    return ProtocolReport(
        params=params,
        rho=rho,
        constraint_satisfied=constraint,
        pre_chsh_max=pre_max,
        pre_settings=pre_settings,
        pass_probability=prob,
        pass_probability_closed_form=prob_cf,
        rho_prime=rho_prime,
        rho_prime_closed_form_error=cf_err,
        beamsplitter_route_error=bs_err,
        filter_route_error=route_err,
        post_chsh_max=post_max,
        post_settings=post_settings,
        pre_chsh_at_settings=bell.chsh_value(rho, pre_settings),
        post_chsh_at_settings=bell.chsh_value(rho_prime, post_settings),
        pre_behavior=pre_behavior,
        post_behavior=post_behavior,
        pre_lhv=lhv.lhv_feasible(pre_behavior, tol),
        post_lhv=lhv.lhv_feasible(post_behavior, tol),
        filter_swapped=swapped,
        filter_applied=applied,
        degenerate=degenerate,
    )


def fig3_pipeline(
    params: ExampleStateParams,
    settings: bell.ChshSettings | str = "optimal",
    strict: bool = True,
    allow_swap: bool = True,
    tol: float = lhv.FEASIBILITY_TOL,
    seed: int = 0,
) -> ProtocolReport:
    """The photon source and mixer feed the pre-selection beamsplitter; a CHSH test follows.

    Raises `DegenerateProtocol` when ``p1 == p2`` and a filter is applied
    (the filtered state then reaches CHSH 2 exactly); pass ``strict=False`` to
    get the report anyway. ``alpha == beta`` means no filtering is needed.
    """
    rho_def, constraint = build_example_state(params)
    rho = stochastic_mz_mix(pdc_pair_state(params.alpha_sq), params.p1, params.p2)
    applied = not math.isclose(params.alpha_sq, 0.5, rel_tol=0.0, abs_tol=1e-15)
    degenerate = applied and math.isclose(params.p1, 0.5, rel_tol=0.0, abs_tol=1e-15)
    if degenerate and strict:
        raise DegenerateProtocol(
            "p1 == p2: the filtered state is an equal mixture of two Bell states with "
            "correlation matrix diag(1, 0, 0), so its CHSH maximum is exactly 2"
        )
    if applied:
        pre = preselection_for(params, allow_swap)
        fa = pre.measurement()
        swapped = pre.swapped
        bs_prob, bs_state = beamsplitter_filter(rho, pre)
    else:
        fa = filter_from_operator(np.eye(2))
        swapped = False
    fb = trivial_measurement(2, "pass")
    prob, rho_prime = local_filter(rho, fa.operator("pass"), np.eye(2))
    prob_cf = 2.0 * min(params.alpha_sq, params.beta_sq) if applied else 1.0
    if applied:
        closed = filtered_closed_form(params.p1)
        cf_err = float(np.max(np.abs(rho_prime - closed)))
        bs_err = max(float(np.max(np.abs(bs_state - rho_prime))), abs(bs_prob - prob))
    else:
        cf_err = float(np.max(np.abs(rho_prime - rho_def)))
        bs_err = None
    report = _assemble(params, rho, constraint, prob, prob_cf, rho_prime, cf_err, bs_err, fa, fb, settings, tol,
                       seed, swapped=swapped, applied=applied, degenerate=degenerate)
    return report
