"""Local hidden variable models for finite Bell scenarios.

For finitely many settings and outcomes the hidden-variable integral reduces
exactly to a finite mixture of deterministic local strategies (one outcome per
setting on each side), so LHV representability is an LP feasibility problem
over the strategy weights.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qcore, simplex
from .errors import BadWeights, DimensionMismatch, ScenarioTooLarge, SeqBellError, WrongScenario
from .measurement import (
    GeneralizedMeasurement,
    MeasurementSequence,
    SelectionContext,
    as_sequence,
    conditional,
    sequence_joint,
)

NORMALIZATION_ATOL = 1e-10
FEASIBILITY_TOL = 1e-9
MAX_STRATEGIES = 10**6
CERT_SPAN = 4.0
CERT_BOUND = 2.0


class InvalidBehavior(SeqBellError):
    pass


@dataclass(frozen=True)
class BehaviorTable:
    """``p[x, y, a, b] = P(a, b | x, y)``."""

    p: np.ndarray
    outcomes_a: tuple[str, ...] = ()
    outcomes_b: tuple[str, ...] = ()

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 4:
            raise DimensionMismatch(f"behavior table must be 4-D (x, y, a, b), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidBehavior("behavior table has non-finite entries")
        sums = p.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > NORMALIZATION_ATOL:
            raise InvalidBehavior(f"P(a,b|x,y) does not sum to 1 (worst {sums.flat[np.argmax(np.abs(sums - 1))]!r})")
        if p.min() < -1e-12:
            raise InvalidBehavior(f"negative probability {p.min():.3e}")
        p.setflags(write=False)
        oa = tuple(self.outcomes_a) or tuple(str(i) for i in range(p.shape[2]))
        ob = tuple(self.outcomes_b) or tuple(str(i) for i in range(p.shape[3]))
        if len(oa) != p.shape[2] or len(ob) != p.shape[3]:
            raise DimensionMismatch("outcome labels do not match table shape")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "outcomes_a", oa)
        object.__setattr__(self, "outcomes_b", ob)

    @property
    def settings_a(self) -> int:
        return self.p.shape[0]

    @property
    def settings_b(self) -> int:
        return self.p.shape[1]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.p.shape

    def correlators(self) -> np.ndarray:
        """``E(x, y)`` for two-outcome sides, first outcome counted as +1."""
        if self.p.shape[2:] != (2, 2):
            raise WrongScenario("correlators need two outcomes per side")
        s = np.array([1.0, -1.0])
        return np.einsum("xyab,a,b->xy", self.p, s, s)


@dataclass(frozen=True)
class DeterministicStrategy:
    response_a: tuple[int, ...]
    response_b: tuple[int, ...]


@dataclass(frozen=True)
class LhvModel:
    strategies: tuple[DeterministicStrategy, ...]
    weights: np.ndarray
    n_outcomes_a: int
    n_outcomes_b: int

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if len(w) != len(self.strategies):
            raise BadWeights("one weight per strategy required")
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-10:
            raise BadWeights("strategy weights must be a probability vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "strategies", tuple(self.strategies))

    def behavior(self, outcomes_a=(), outcomes_b=()) -> BehaviorTable:
        x_n = len(self.strategies[0].response_a)
        y_n = len(self.strategies[0].response_b)
        p = np.zeros((x_n, y_n, self.n_outcomes_a, self.n_outcomes_b))
        for s, w in zip(self.strategies, self.weights):
            for x in range(x_n):
                for y in range(y_n):
                    p[x, y, s.response_a[x], s.response_b[y]] += w
        return BehaviorTable(p, outcomes_a, outcomes_b)


@dataclass(frozen=True)
class Certificate:
    """Bell-type functional ``sum c[x,y,a,b] P(a,b|x,y)`` separating a table from the local set."""

    coefficients: np.ndarray
    local_bound: float
    value: float

    @property
    def violation(self) -> float:
        return self.value - self.local_bound

    def evaluate(self, t: BehaviorTable) -> float:
        return float(np.sum(self.coefficients * t.p))


@dataclass(frozen=True)
class LhvResult:
    feasible: bool
    model: LhvModel | None = None
    certificate: Certificate | None = None
    residual: float = float("nan")
    phase1_objective: float = float("nan")


# --- strategy enumeration ----------------------------------------------------


def strategy_count(shape) -> int:
    x_n, y_n, a_n, b_n = shape
    return a_n**x_n * b_n**y_n


def deterministic_strategies(shape) -> list[DeterministicStrategy]:
    """All strategies, lexicographic in (A response map, B response map)."""
    x_n, y_n, a_n, b_n = shape
    if strategy_count(shape) > MAX_STRATEGIES:
        raise ScenarioTooLarge(f"{strategy_count(shape)} deterministic strategies exceed {MAX_STRATEGIES}")
    resp_a = list(itertools.product(range(a_n), repeat=x_n))
    resp_b = list(itertools.product(range(b_n), repeat=y_n))
    return [DeterministicStrategy(ra, rb) for ra in resp_a for rb in resp_b]


def vertex_matrix(shape, strategies: Sequence[DeterministicStrategy]) -> np.ndarray:
    """Column k is the flattened behavior of strategy k."""
    x_n, y_n, a_n, b_n = shape
    d = np.zeros((x_n, y_n, a_n, b_n, len(strategies)))
    xs, ys = np.meshgrid(np.arange(x_n), np.arange(y_n), indexing="ij")
    for k, s in enumerate(strategies):
        ra = np.asarray(s.response_a)[xs]
        rb = np.asarray(s.response_b)[ys]
        d[xs, ys, ra, rb, k] = 1.0
    return d.reshape(-1, len(strategies))


# --- checks ------------------------------------------------------------------


def is_no_signalling(t: BehaviorTable, tol: float = 1e-10) -> tuple[bool, float]:
    """Whether each side's marginals ignore the other side's setting; returns the worst deviation."""
    pa = t.p.sum(axis=3)  # (x, y, a)
    pb = t.p.sum(axis=2)  # (x, y, b)
    dev_a = np.max(np.abs(pa - pa[:, :1, :]))
    dev_b = np.max(np.abs(pb - pb[:1, :, :]))
    dev = float(max(dev_a, dev_b))
    return dev <= tol, dev


def chsh_of_behavior(t: BehaviorTable) -> float:
    """Largest of the eight CHSH expressions of a two-setting, two-outcome table."""
    if t.shape != (2, 2, 2, 2):
        raise WrongScenario(f"CHSH needs a 2x2x2x2 scenario, got {t.shape}")
    e = t.correlators()
    total = e.sum()
    values = [total - 2 * e[x, y] for x in range(2) for y in range(2)]
    return float(max(max(values), -min(values)))


def chsh_functionals() -> list[np.ndarray]:
    """The eight CHSH functionals as coefficient arrays on ``P(a,b|x,y)``."""
    s = np.array([1.0, -1.0])
    corr = np.einsum("a,b->ab", s, s)
    out = []
    for sign in (1.0, -1.0):
        for x0 in range(2):
            for y0 in range(2):
                signs = np.ones((2, 2))
                signs[x0, y0] = -1.0
                out.append(sign * signs[:, :, None, None] * corr[None, None])
    return out


# --- feasibility -------------------------------------------------------------


def lhv_feasible(t: BehaviorTable, tol: float = FEASIBILITY_TOL) -> LhvResult:
    """Decide whether a behavior table is a mixture of deterministic local strategies.

    Feasible tables come with an explicit `LhvModel` whose re-expansion
    matches the table within ``tol``. Infeasible tables come with a
    `Certificate` normalized so the deterministic values span
    ``[bound - 4, bound]`` with ``bound = 2`` (the CHSH normalization for two
    settings and two outcomes).
    """
    strategies = deterministic_strategies(t.shape)
    d = vertex_matrix(t.shape, strategies)
    target = t.p.reshape(-1)
    a_eq = np.vstack([d, np.ones((1, d.shape[1]))])
    b_eq = np.append(target, 1.0)
    res = simplex.solve(np.zeros(d.shape[1]), a_eq, b_eq, feas_tol=tol)
    if res.status != "infeasible":
        w = np.clip(res.x, 0.0, None)
        w /= w.sum()
        residual = float(np.max(np.abs(d @ w - target)))
        if residual < tol:
            keep = np.flatnonzero(w > 0)
            model = LhvModel(
                tuple(strategies[k] for k in keep),
                w[keep] / w[keep].sum(),
                t.shape[2],
                t.shape[3],
            )
            return LhvResult(True, model=model, residual=residual, phase1_objective=res.phase1_objective)
    cert = _best_certificate(t, d)
    if cert is None:
        cert = _farkas_certificate(t, d, res.farkas)
    return LhvResult(False, certificate=cert, phase1_objective=res.phase1_objective)


def _shifted(t: BehaviorTable, d: np.ndarray, c: np.ndarray) -> Certificate:
    x_n, y_n = t.shape[:2]
    bound = float(np.max(c @ d))
    c = c + (CERT_BOUND - bound) / (x_n * y_n)
    return Certificate(c.reshape(t.shape), float(np.max(c @ d)), float(c @ t.p.reshape(-1)))


def _farkas_certificate(t, d, y) -> Certificate:
    c = np.asarray(y[:-1], dtype=float)
    return _shifted(t, d, c)


def _best_certificate(t: BehaviorTable, d: np.ndarray) -> Certificate | None:
    """Most violated functional with coefficients in [-1, 1] and deterministic span <= 4.

    Variables: ``u = c + 1`` in [0, 2], free offset ``s = s+ - s-``, slacks.
    """
    n, k = d.shape
    xy = float(t.shape[0] * t.shape[1])
    p = t.p.reshape(-1)
    n_var = n + 2 + 2 * k + n
    rows, rhs = [], []
    for j in range(k):
        hi = np.zeros(n_var)
        hi[:n] = d[:, j]
        hi[n], hi[n + 1] = -1.0, 1.0
        hi[n + 2 + j] = 1.0
        rows.append(hi)
        rhs.append(xy)
        lo = np.zeros(n_var)
        lo[:n] = d[:, j]
        lo[n], lo[n + 1] = -1.0, 1.0
        lo[n + 2 + k + j] = -1.0
        rows.append(lo)
        rhs.append(xy - CERT_SPAN)
    for i in range(n):
        box = np.zeros(n_var)
        box[i] = 1.0
        box[n + 2 + 2 * k + i] = 1.0
        rows.append(box)
        rhs.append(2.0)
    cost = np.zeros(n_var)
    cost[:n] = -p
    cost[n], cost[n + 1] = 1.0, -1.0
    res = simplex.solve(cost, np.array(rows), np.array(rhs))
    if res.status != "optimal":
        return None
    c = res.x[:n] - 1.0
    if c @ p - np.max(c @ d) <= 0:
        return None
    return _shifted(t, d, c)


# --- quantum behaviors ---------------------------------------------------------


def _common_labels(measurements: Sequence[GeneralizedMeasurement]) -> tuple[str, ...]:
    counts = {len(m) for m in measurements}
    if len(counts) != 1:
        raise DimensionMismatch("all settings on one side need the same number of outcomes")
    return measurements[0].labels


def behavior_from_quantum(rho, a_measurements, b_measurements) -> BehaviorTable:
    """``P(a, b | x, y)`` of single-step measurements on a bipartite state."""
    a_measurements = list(a_measurements)
    b_measurements = list(b_measurements)
    la, lb = _common_labels(a_measurements), _common_labels(b_measurements)
    p = np.zeros((len(a_measurements), len(b_measurements), len(la), len(lb)))
    for x, ma in enumerate(a_measurements):
        for y, mb in enumerate(b_measurements):
            p[x, y] = sequence_joint(rho, ma, mb).probabilities
    return BehaviorTable(np.clip(p, 0.0, None), la, lb)


def preselected_behavior(rho, context: SelectionContext, a_settings, b_settings) -> BehaviorTable:
    """Behavior of the second measurements on the subensemble selected by the first outcomes.

    For every setting pair the two-step sequences ``(first_a, A_x)`` and
    ``(first_b, B_y)`` are run and the joint table is conditioned on
    ``(outcome_a1, outcome_b1)``.
    """
    a_settings = list(a_settings)
    b_settings = list(b_settings)
    la, lb = _common_labels(a_settings), _common_labels(b_settings)
    p = np.zeros((len(a_settings), len(b_settings), len(la), len(lb)))
    for x, ma in enumerate(a_settings):
        for y, mb in enumerate(b_settings):
            j = sequence_joint(rho, [context.first_a, ma], [context.first_b, mb])
            cond = conditional(j, {0: context.outcome_a1, 2: context.outcome_b1})
            p[x, y] = cond.probabilities
    return BehaviorTable(np.clip(p, 0.0, None), la, lb)


# --- explicit models for separable states --------------------------------------


def _local_branches(rho: np.ndarray, steps) -> list[tuple[tuple[int, ...], float, np.ndarray | None]]:
    """Every outcome tuple of a local sequence with its probability and post-state."""
    out = [((), 1.0, rho)]
    for m in steps:
        nxt = []
        for outcome, prob, state in out:
            for k, v in enumerate(m.operators):
                if state is None:
                    nxt.append((outcome + (k,), 0.0, None))
                    continue
                p = float(np.trace(v @ state @ qcore.dagger(v)).real)
                if p <= 1e-14:
                    nxt.append((outcome + (k,), 0.0, None))
                else:
                    post = v @ state @ qcore.dagger(v) / p
                    nxt.append((outcome + (k,), prob * p, post))
        out = nxt
    return out


def _common_prefix(seqs: Sequence[MeasurementSequence]) -> int:
    limit = min(len(s) for s in seqs) - 1
    n = 0
    while n < limit and all(s.steps[n].same_as(seqs[0].steps[n]) for s in seqs[1:]):
        n += 1
    return n


def _side_variables(rho_local, seqs: Sequence[MeasurementSequence], n_prefix: int):
    """Hidden local variables ``(prefix outcomes, per-setting remaining outcomes)`` with weights."""
    out = []
    for prefix, p_prefix, state in _local_branches(rho_local, seqs[0].steps[:n_prefix]):
        if p_prefix <= 0:
            continue
        per_setting = []
        for s in seqs:
            branches = [(o, p) for o, p, _ in _local_branches(state, s.steps[n_prefix:]) if p > 0]
            per_setting.append(branches)
        for combo in itertools.product(*per_setting):
            w = p_prefix * float(np.prod([p for _, p in combo]))
            out.append((prefix, tuple(o for o, _ in combo), w))
    return out


@dataclass(frozen=True)
class SequentialStrategy:
    component: int
    prefix_a: tuple[int, ...]
    prefix_b: tuple[int, ...]
    response_a: tuple[tuple[int, ...], ...]
    response_b: tuple[tuple[int, ...], ...]


@dataclass
class SequentialLhvModel:
    """Hidden-variable model for local measurement sequences.

    Each hidden state fixes, per side, the outcomes of the steps shared by all
    settings of that side and, for every setting, the outcomes of its
    remaining steps. Earlier outcomes therefore never depend on which later
    measurement is chosen.
    """

    strategies: list[SequentialStrategy]
    weights: np.ndarray
    a_seqs: list[MeasurementSequence]
    b_seqs: list[MeasurementSequence]
    n_prefix_a: int
    n_prefix_b: int

    def joint(self, x: int, y: int) -> np.ndarray:
        sa, sb = self.a_seqs[x], self.b_seqs[y]
        shape = tuple(len(m) for m in sa.steps) + tuple(len(m) for m in sb.steps)
        p = np.zeros(shape)
        for s, w in zip(self.strategies, self.weights):
            p[s.prefix_a + s.response_a[x] + s.prefix_b + s.response_b[y]] += w
        return p

    def conditional_behavior(self, prefix_a, prefix_b) -> BehaviorTable:
        """Model statistics of the remaining steps given the shared-step outcomes."""
        n_x, n_y = len(self.a_seqs), len(self.b_seqs)
        ra = _remaining_shape(self.a_seqs, self.n_prefix_a)
        rb = _remaining_shape(self.b_seqs, self.n_prefix_b)
        p = np.zeros((n_x, n_y, int(np.prod(ra)), int(np.prod(rb))))
        for s, w in zip(self.strategies, self.weights):
            if s.prefix_a != tuple(prefix_a) or s.prefix_b != tuple(prefix_b):
                continue
            for x in range(n_x):
                ia = int(np.ravel_multi_index(s.response_a[x], ra)) if ra else 0
                for y in range(n_y):
                    ib = int(np.ravel_multi_index(s.response_b[y], rb)) if rb else 0
                    p[x, y, ia, ib] += w
        mass = p[0, 0].sum()
        if mass <= 1e-14:
            raise SeqBellError("selected subensemble has zero weight")
        return BehaviorTable(p / mass)


def _remaining_shape(seqs, n_prefix) -> tuple[int, ...]:
    shapes = {tuple(len(m) for m in s.steps[n_prefix:]) for s in seqs}
    if len(shapes) != 1:
        raise DimensionMismatch("settings on one side must have matching remaining outcome counts")
    return shapes.pop()


@dataclass
class SeparableModelReport:
    reproduction_error: float
    conditional_feasible: dict = field(default_factory=dict)

    @property
    def all_feasible(self) -> bool:
        return all(self.conditional_feasible.values())


def separable_lhv_model(
    components: Sequence[tuple[float, np.ndarray, np.ndarray]],
    a_seqs,
    b_seqs,
    tol: float = FEASIBILITY_TOL,
) -> tuple[SequentialLhvModel, SeparableModelReport]:
    """Explicit hidden-variable model for a separable state ``sum_k w_k rhoA_k (x) rhoB_k``.

    ``a_seqs``/``b_seqs`` list one measurement sequence per setting. The model
    is checked against `sequence_joint` of the separable state for every
    setting pair, and every subensemble selected by the shared first steps is
    checked with `lhv_feasible`.
    """
    a_seqs = [as_sequence(s) for s in (a_seqs if isinstance(a_seqs, (list, tuple)) else [a_seqs])]
    b_seqs = [as_sequence(s) for s in (b_seqs if isinstance(b_seqs, (list, tuple)) else [b_seqs])]
    weights = np.array([float(w) for w, _, _ in components])
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise BadWeights(f"component weights {weights.tolist()} are not a probability vector")
    n_pa, n_pb = _common_prefix(a_seqs), _common_prefix(b_seqs)

    strategies, lam_w = [], []
    for k, (wk, rho_a, rho_b) in enumerate(components):
        rho_a = qcore.density_matrix(rho_a)
        rho_b = qcore.density_matrix(rho_b)
        if wk == 0:
            continue
        side_a = _side_variables(rho_a, a_seqs, n_pa)
        side_b = _side_variables(rho_b, b_seqs, n_pb)
        for (pa, ra, wa), (pb, rb, wb) in itertools.product(side_a, side_b):
            strategies.append(SequentialStrategy(k, pa, pb, ra, rb))
            lam_w.append(wk * wa * wb)
    model = SequentialLhvModel(strategies, np.array(lam_w), a_seqs, b_seqs, n_pa, n_pb)

    rho = qcore.mix([(w, qcore.kron(ra, rb)) for w, ra, rb in components])
    err = 0.0
    for x, sa in enumerate(a_seqs):
        for y, sb in enumerate(b_seqs):
            q = sequence_joint(rho, sa, sb).probabilities
            err = max(err, float(np.max(np.abs(model.joint(x, y) - q))))
    report = SeparableModelReport(err)

    prefix_mass: dict = {}
    for s, w in zip(strategies, lam_w):
        key = (s.prefix_a, s.prefix_b)
        prefix_mass[key] = prefix_mass.get(key, 0.0) + w
    for key, mass in sorted(prefix_mass.items()):
        if mass <= 1e-14:
            continue
        report.conditional_feasible[key] = lhv_feasible(model.conditional_behavior(*key), tol).feasible
    return model, report


# --- detection loophole ----------------------------------------------------------

NO_DETECTION = "nd"


@dataclass(frozen=True)
class RejectionStrategy:
    """Deterministic responses where an entry of ``None`` means the particle is not detected."""

    response_a: tuple[int | None, ...]
    response_b: tuple[int | None, ...]


@dataclass
class LoopholeDemo:
    strategies: list[RejectionStrategy]
    weights: np.ndarray
    full_behavior: BehaviorTable
    coincidence_rate: np.ndarray
    post_selected: BehaviorTable
    post_selected_chsh: float
    full_lhv: LhvResult
    forced_behavior: BehaviorTable
    forced_chsh: float


def _rejection_behavior(strategies, weights) -> BehaviorTable:
    """Three-outcome table (+1, -1, no detection) of a mixture of rejection strategies."""
    p = np.zeros((2, 2, 3, 3))
    for s, w in zip(strategies, weights):
        for x in range(2):
            for y in range(2):
                a = 2 if s.response_a[x] is None else s.response_a[x]
                b = 2 if s.response_b[y] is None else s.response_b[y]
                p[x, y, a, b] += w
    return BehaviorTable(p, ("+1", "-1", NO_DETECTION), ("+1", "-1", NO_DETECTION))


def loophole_demo() -> LoopholeDemo:
    """Four local strategies whose coincidence-conditioned statistics reach CHSH = 4.

    Strategy ``k`` targets setting pair ``(x_k, y_k)``: each side detects only
    under its targeted setting and both output +1, except the strategy aimed at
    ``(a', b')`` where Bob outputs -1. Conditioning on coincidences therefore
    selects a different hidden state for every setting pair.
    """
    plus, minus = 0, 1
    strategies = []
    for xk in range(2):
        for yk in range(2):
            out_b = minus if (xk, yk) == (1, 1) else plus
            ra = tuple(plus if x == xk else None for x in range(2))
            rb = tuple(out_b if y == yk else None for y in range(2))
            strategies.append(RejectionStrategy(ra, rb))
    weights = np.full(4, 0.25)

    full = _rejection_behavior(strategies, weights)
    coinc = full.p[:, :, :2, :2].sum(axis=(2, 3))
    post = BehaviorTable(full.p[:, :, :2, :2] / coinc[:, :, None, None], ("+1", "-1"), ("+1", "-1"))

    forced = [
        RejectionStrategy(
            tuple(plus if r is None else r for r in s.response_a),
            tuple(plus if r is None else r for r in s.response_b),
        )
        for s in strategies
    ]
    forced_full = _rejection_behavior(forced, weights)
    forced_table = BehaviorTable(forced_full.p[:, :, :2, :2], ("+1", "-1"), ("+1", "-1"))
    return LoopholeDemo(
        strategies=strategies,
        weights=weights,
        full_behavior=full,
        coincidence_rate=coinc,
        post_selected=post,
        post_selected_chsh=chsh_of_behavior(post),
        full_lhv=lhv_feasible(full),
        forced_behavior=forced_table,
        forced_chsh=chsh_of_behavior(forced_table),
    )
