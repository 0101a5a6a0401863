"""Generalized measurements and the joint statistics of local measurement sequences.

A generalized measurement is a labeled list of operators ``V_i`` with
``sum_i V_i^dagger V_i = I``. Outcome ``i`` occurs with probability
``Tr(V_i rho V_i^dagger)`` and leaves the state ``V_i rho V_i^dagger / p_i``.

Sequences of such measurements are applied locally on the two sides of a
bipartite state; `sequence_joint` tabulates the probability of every outcome
tuple and `conditional` / `marginalize` manipulate the resulting table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import qcore
from .errors import (
    BadIndex,
    DimensionMismatch,
    IncompletePartition,
    NotHermitian,
    ZeroOperator,
    ZeroProbabilityBranch,
    ZeroProbabilityEvent,
)

COMPLETENESS_ATOL = 1e-10
ZERO_PROB = 1e-14
EIGENVALUE_MERGE = 1e-9


@dataclass(frozen=True)
class GeneralizedMeasurement:
    """Labeled partition of unity acting on a ``dim``-dimensional space."""

    labels: tuple[str, ...]
    operators: tuple[np.ndarray, ...]
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.labels)
        ops = tuple(qcore.as_cmatrix(op) for op in self.operators)
        if not ops:
            raise ValueError("a measurement needs at least one outcome")
        if len(labels) != len(ops):
            raise ValueError(f"{len(labels)} labels for {len(ops)} operators")
        if len(set(labels)) != len(labels):
            raise ValueError(f"outcome labels must be unique: {labels}")
        d = ops[0].shape[0]
        for op in ops:
            if op.shape != (d, d):
                raise DimensionMismatch("all measurement operators must be square of one size")
            op.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "operators", ops)
        if self.check:
            validate_measurement(self)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise BadIndex(f"unknown outcome label {label!r}; have {self.labels}") from None

    def operator(self, label: str) -> np.ndarray:
        return self.operators[self.index(label)]

    def same_as(self, other: "GeneralizedMeasurement", atol: float = 1e-12) -> bool:
        return (
            self.labels == other.labels
            and self.dim == other.dim
            and all(np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.operators, other.operators))
        )


def completeness_residual(m: GeneralizedMeasurement) -> float:
    total = sum(qcore.dagger(v) @ v for v in m.operators)
    return float(np.max(np.abs(total - np.eye(m.dim))))


def validate_measurement(m: GeneralizedMeasurement, atol: float = COMPLETENESS_ATOL) -> None:
    """Raise `IncompletePartition` unless ``sum V^dagger V = I`` within ``atol``."""
    residual = completeness_residual(m)
    if residual > atol:
        raise IncompletePartition(residual)


@dataclass(frozen=True)
class MeasurementSequence:
    """Measurements applied one after another on the same subsystem."""

    steps: tuple[GeneralizedMeasurement, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("a measurement sequence needs at least one step")
        if len({s.dim for s in steps}) != 1:
            raise DimensionMismatch("all steps of a sequence must act on one dimension")
        object.__setattr__(self, "steps", steps)

    @property
    def dim(self) -> int:
        return self.steps[0].dim

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def then(self, *more: GeneralizedMeasurement) -> "MeasurementSequence":
        return MeasurementSequence(self.steps + tuple(more))


def as_sequence(obj) -> MeasurementSequence:
    if isinstance(obj, MeasurementSequence):
        return obj
    if isinstance(obj, GeneralizedMeasurement):
        return MeasurementSequence((obj,))
    return MeasurementSequence(tuple(obj))


@dataclass(frozen=True)
class JointDistribution:
    """Probability table with one axis per measurement step, A-side steps first."""

    axis_labels: tuple[tuple[str, ...], ...]
    probabilities: np.ndarray
    n_a: int

    def __post_init__(self):
        labels = tuple(tuple(ax) for ax in self.axis_labels)
        p = np.array(self.probabilities, dtype=float)
        if p.shape != tuple(len(ax) for ax in labels):
            raise DimensionMismatch(f"table shape {p.shape} does not match axis labels")
        if not 0 <= self.n_a <= len(labels):
            raise BadIndex(f"n_a={self.n_a} out of range")
        p.setflags(write=False)
        object.__setattr__(self, "axis_labels", labels)
        object.__setattr__(self, "probabilities", p)

    @property
    def n_steps(self) -> int:
        return len(self.axis_labels)

    @property
    def n_b(self) -> int:
        return self.n_steps - self.n_a

    def prob(self, *outcomes: str) -> float:
        idx = tuple(ax.index(str(o)) for ax, o in zip(self.axis_labels, outcomes, strict=True))
        return float(self.probabilities[idx])

    def items(self):
        for idx in itertools.product(*(range(len(ax)) for ax in self.axis_labels)):
            yield tuple(ax[i] for ax, i in zip(self.axis_labels, idx)), float(self.probabilities[idx])


def check_distribution(j: JointDistribution, atol: float = 1e-10, floor: float = -1e-12) -> None:
    p = j.probabilities
    if p.size and p.min() < floor:
        raise ValueError(f"negative probability {p.min():.3e}")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"probabilities sum to {p.sum()!r}")


@dataclass(frozen=True)
class SelectionContext:
    """First-step measurements on both sides and the outcomes that select the subensemble."""

    first_a: GeneralizedMeasurement
    first_b: GeneralizedMeasurement
    outcome_a1: str
    outcome_b1: str

    def __post_init__(self):
        self.first_a.index(self.outcome_a1)
        self.first_b.index(self.outcome_b1)


# --- constructors -------------------------------------------------------------


def projective_from_observable(observable, merge_tol: float = EIGENVALUE_MERGE) -> GeneralizedMeasurement:
    """Von Neumann measurement of a Hermitian observable, one outcome per distinct eigenvalue.

    Labels are the signed eigenvalues (``"+1"``, ``"-1"``), in descending order.
    """
    h = qcore.as_cmatrix(observable)
    if not qcore.is_hermitian(h, 1e-10):
        raise NotHermitian("observable is not Hermitian")
    w, v = qcore.hermitian_eig(h)
    groups: list[list[int]] = []
    for k, lam in enumerate(w):
        if groups and abs(w[groups[-1][0]] - lam) <= merge_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    labels, projectors = [], []
    for g in groups:
        vecs = v[:, g]
        projectors.append(vecs @ qcore.dagger(vecs))
        value = float(np.mean(w[g]))
        labels.append("0" if abs(value) < merge_tol else f"{value:+g}")
    return GeneralizedMeasurement(tuple(labels), tuple(projectors))


def filter_from_operator(v, labels: tuple[str, str] = ("pass", "fail")) -> GeneralizedMeasurement:
    """Two-outcome filter ``{V/||V||, sqrt(I - Vt^dagger Vt)}`` built from a bounded operator."""
    v = qcore.as_cmatrix(v)
    norm = qcore.operator_norm(v)
    if norm < 1e-300:
        raise ZeroOperator("cannot build a filter from the zero operator")
    vt = v / norm
    complement = qcore.psd_sqrt(np.eye(v.shape[0]) - qcore.dagger(vt) @ vt)
    return GeneralizedMeasurement(labels, (vt, complement))


def trivial_measurement(dim: int, label: str = "1") -> GeneralizedMeasurement:
    return GeneralizedMeasurement((label,), (np.eye(dim),))


# --- state update -------------------------------------------------------------


def _branch(rho: np.ndarray, v: np.ndarray) -> tuple[float, np.ndarray]:
    out = v @ rho @ qcore.dagger(v)
    return float(np.trace(out).real), out


def apply_outcome(rho, v, need_state: bool = True) -> tuple[float, np.ndarray | None]:
    """Probability of the outcome with operator ``v`` and the updated state.

    Raises `ZeroProbabilityBranch` when the probability is at most 1e-14 and
    ``need_state`` is true; otherwise the state is ``None`` for such branches.
    """
    rho = np.asarray(rho)
    v = qcore.as_cmatrix(v)
    if v.shape[1] != rho.shape[0]:
        raise DimensionMismatch(f"operator {v.shape} cannot act on state {rho.shape}")
    p, out = _branch(rho, v)
    if p <= ZERO_PROB:
        if need_state:
            raise ZeroProbabilityBranch(f"outcome probability {p:.3e} is zero")
        return max(p, 0.0), None
    return p, _normalize(out, p)


def _normalize(out: np.ndarray, p: float) -> np.ndarray:
    out = out / p
    out = 0.5 * (out + qcore.dagger(out))
    return out


def local_filter(rho, v, w) -> tuple[float, np.ndarray]:
    """Apply ``V (x) W`` to a bipartite state; return success probability and filtered state."""
    rho = np.asarray(rho)
    v = qcore.as_cmatrix(v)
    w = qcore.as_cmatrix(w)
    if v.shape[1] * w.shape[1] != rho.shape[0]:
        raise DimensionMismatch("filter dimensions do not match the state")
    p, out = apply_outcome(rho, qcore.kron(v, w))
    return p, qcore.density_matrix(out, herm_atol=1e-10, trace_atol=1e-10)


def embed(op: np.ndarray, side: str, d_a: int, d_b: int) -> np.ndarray:
    if side == "A":
        return qcore.kron(op, np.eye(d_b))
    return qcore.kron(np.eye(d_a), op)


# --- sequential statistics ----------------------------------------------------


def sequence_joint(rho, seq_a, seq_b, order: str | None = None) -> JointDistribution:
    """Joint probabilities of all outcome tuples of local measurement sequences.

    Parameters
    ----------
    rho : bipartite density matrix of dimension ``dim(seq_a) * dim(seq_b)``
    seq_a, seq_b : `MeasurementSequence` (or a single measurement / list of steps)
    order : optional string of ``"A"``/``"B"`` giving the physical order in which
        steps are applied, e.g. ``"ABAB"``. Defaults to all A steps, then all B
        steps. Table axes are always A steps first.
    """
    seq_a = as_sequence(seq_a)
    seq_b = as_sequence(seq_b)
    rho = np.asarray(rho, dtype=complex)
    d_a, d_b = seq_a.dim, seq_b.dim
    if rho.shape != (d_a * d_b, d_a * d_b):
        raise DimensionMismatch(f"state {rho.shape} does not match local dims ({d_a}, {d_b})")
    n_a, n_b = len(seq_a), len(seq_b)
    order = "A" * n_a + "B" * n_b if order is None else order.upper()
    if sorted(order) != sorted("A" * n_a + "B" * n_b):
        raise ValueError(f"order {order!r} must contain {n_a} A's and {n_b} B's")

    # physical schedule: (axis index, embedded operators)
    schedule = []
    ia = ib = 0
    for side in order:
        if side == "A":
            schedule.append((ia, [embed(v, "A", d_a, d_b) for v in seq_a.steps[ia].operators]))
            ia += 1
        else:
            schedule.append((n_a + ib, [embed(w, "B", d_a, d_b) for w in seq_b.steps[ib].operators]))
            ib += 1

    labels = tuple(m.labels for m in seq_a.steps) + tuple(m.labels for m in seq_b.steps)
    table = np.zeros(tuple(len(ax) for ax in labels))

    def recurse(level: int, state: np.ndarray, prob: float, idx: list[int]) -> None:
        if level == len(schedule):
            table[tuple(idx)] = prob
            return
        axis, ops = schedule[level]
        for k, op in enumerate(ops):
            idx[axis] = k
            p, out = _branch(state, op)
            # entries below a zero-probability branch stay exactly 0
            if p > ZERO_PROB:
                recurse(level + 1, _normalize(out, p), prob * p, idx)

    recurse(0, rho, 1.0, [0] * len(labels))
    return JointDistribution(labels, table, n_a)


def marginalize(j: JointDistribution, kept_steps: Iterable[int]) -> JointDistribution:
    """Sum out every step not in ``kept_steps`` (kept axes stay in their original order)."""
    kept = sorted(set(int(k) for k in kept_steps))
    for k in kept:
        if not 0 <= k < j.n_steps:
            raise BadIndex(f"step index {k} out of range for {j.n_steps} steps")
    dropped = tuple(k for k in range(j.n_steps) if k not in kept)
    p = j.probabilities.sum(axis=dropped) if dropped else j.probabilities
    n_a = sum(1 for k in kept if k < j.n_a)
    return JointDistribution(tuple(j.axis_labels[k] for k in kept), p, n_a)


def conditional(j: JointDistribution, given: Mapping[int, str], atol: float = ZERO_PROB) -> JointDistribution:
    """Distribution of the remaining steps given fixed outcomes on some steps."""
    index: list = [slice(None)] * j.n_steps
    for step, label in given.items():
        if not 0 <= step < j.n_steps:
            raise BadIndex(f"step index {step} out of range for {j.n_steps} steps")
        try:
            index[step] = j.axis_labels[step].index(str(label))
        except ValueError:
            raise BadIndex(f"step {step} has no outcome {label!r}") from None
    sub = j.probabilities[tuple(index)]
    mass = float(sub.sum())
    if mass <= atol:
        raise ZeroProbabilityEvent(f"conditioning event has probability {mass:.3e}")
    remaining = [k for k in range(j.n_steps) if k not in given]
    n_a = sum(1 for k in remaining if k < j.n_a)
    return JointDistribution(tuple(j.axis_labels[k] for k in remaining), sub / mass, n_a)


def causality_check(
    rho,
    seq_a,
    seq_b,
    alternatives: Sequence[tuple[Sequence[GeneralizedMeasurement], Sequence[GeneralizedMeasurement]]],
) -> float:
    """Largest change of the earlier-step marginals across alternative later steps.

    ``seq_a``/``seq_b`` are the fixed earlier steps; each alternative is a pair
    ``(later_a_steps, later_b_steps)`` appended after them. Quantum mechanics
    predicts zero.
    """
    if len(alternatives) < 2:
        raise ValueError("causality_check needs at least two alternatives")
    seq_a = as_sequence(seq_a)
    seq_b = as_sequence(seq_b)
    n_a, n_b = len(seq_a), len(seq_b)
    marginals = []
    for later_a, later_b in alternatives:
        full_a = seq_a.then(*later_a)
        full_b = seq_b.then(*later_b)
        j = sequence_joint(rho, full_a, full_b)
        kept = list(range(n_a)) + [len(full_a) + k for k in range(n_b)]
        marginals.append(marginalize(j, kept).probabilities)
    return max(float(np.max(np.abs(m - marginals[0]))) for m in marginals[1:])
