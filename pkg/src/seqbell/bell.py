"""CHSH expressions for two-qubit states.

Dichotomic observables are Bloch directions ``n`` measured as ``n . sigma``.
The maximal CHSH value of a state follows from its correlation matrix
``T_ij = Tr(rho sigma_i (x) sigma_j)`` as ``2 sqrt(t1^2 + t2^2)`` where
``t1^2 >= t2^2`` are the two largest eigenvalues of ``T^T T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from .errors import DimensionMismatch
from .measurement import GeneralizedMeasurement

ACHIEVE_TOL = 1e-6
ASCENT_RESTARTS = 64
ASCENT_TOL = 1e-8


@dataclass(frozen=True)
class BlochObservable:
    direction: tuple[float, float, float]

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(3)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError(f"Bloch direction {d.tolist()} is not a unit vector")
        object.__setattr__(self, "direction", tuple(float(x) for x in d))

    @classmethod
    def from_vector(cls, v) -> "BlochObservable":
        v = np.asarray(v, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)))

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "BlochObservable":
        return cls(_unit(theta, phi))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.direction)

    @property
    def matrix(self) -> np.ndarray:
        return sum(c * s for c, s in zip(self.direction, qcore.PAULIS))

    @property
    def angles(self) -> tuple[float, float]:
        x, y, z = self.direction
        return math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x)

    def measurement(self) -> GeneralizedMeasurement:
        """Projective measurement with outcomes ``"+1"`` and ``"-1"``."""
        m = self.matrix
        eye = np.eye(2)
        return GeneralizedMeasurement(("+1", "-1"), ((eye + m) / 2, (eye - m) / 2))


@dataclass(frozen=True)
class ChshSettings:
    a: BlochObservable
    a_prime: BlochObservable
    b: BlochObservable
    b_prime: BlochObservable

    @classmethod
    def from_vectors(cls, a, a_prime, b, b_prime) -> "ChshSettings":
        return cls(*(BlochObservable.from_vector(v) for v in (a, a_prime, b, b_prime)))

    @property
    def alice(self) -> tuple[BlochObservable, BlochObservable]:
        return self.a, self.a_prime

    @property
    def bob(self) -> tuple[BlochObservable, BlochObservable]:
        return self.b, self.b_prime


def _unit(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _check_two_qubit(rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"expected a two-qubit state, got shape {rho.shape}")
    return rho


def expectation(rho, a: BlochObservable, b: BlochObservable) -> float:
    """``Tr(rho (a.sigma) (x) (b.sigma))``."""
    rho = _check_two_qubit(rho)
    return float(np.trace(rho @ qcore.kron(a.matrix, b.matrix)).real)


def correlation_matrix(rho) -> np.ndarray:
    rho = _check_two_qubit(rho)
    t = np.empty((3, 3))
    for i, si in enumerate(qcore.PAULIS):
        for j, sj in enumerate(qcore.PAULIS):
            t[i, j] = np.trace(rho @ qcore.kron(si, sj)).real
    return t


def chsh_from_correlations(t: np.ndarray, s: ChshSettings) -> float:
    a, ap, b, bp = (o.vector for o in (s.a, s.a_prime, s.b, s.b_prime))
    return float(a @ t @ (b + bp) + ap @ t @ (b - bp))


def chsh_value(rho, s: ChshSettings) -> float:
    """``E(a,b) + E(a,b') + E(a',b) - E(a',b')``."""
    return (
        expectation(rho, s.a, s.b)
        + expectation(rho, s.a, s.b_prime)
        + expectation(rho, s.a_prime, s.b)
        - expectation(rho, s.a_prime, s.b_prime)
    )


def chsh_bound(t: np.ndarray) -> float:
    """Analytic CHSH maximum for a correlation matrix."""
    w, _ = qcore.hermitian_eig(t.T @ t)
    return 2.0 * math.sqrt(max(float(w[0] + w[1]), 0.0))


def _any_orthogonal(v: np.ndarray) -> np.ndarray:
    trial = np.eye(3)[int(np.argmin(np.abs(v)))]
    u = trial - (trial @ v) * v
    return u / np.linalg.norm(u)


def optimal_settings(t: np.ndarray) -> ChshSettings:
    """Settings attaining the analytic maximum for correlation matrix ``t``.

    Bob's directions are ``cos(th) e1 +- sin(th) e2`` for the top two
    eigenvectors of ``T^T T`` with ``tan(th) = t2 / t1``; Alice measures along
    ``T e1`` and ``T e2``.
    """
    w, v = qcore.hermitian_eig(t.T @ t)
    e1, e2 = np.real(v[:, 0]), np.real(v[:, 1])
    e1 /= np.linalg.norm(e1)
    e2 = e2 - (e2 @ e1) * e1
    e2 /= np.linalg.norm(e2)
    t1 = math.sqrt(max(float(w[0]), 0.0))
    t2 = math.sqrt(max(float(w[1]), 0.0))
    theta = math.atan2(t2, t1)
    b = math.cos(theta) * e1 + math.sin(theta) * e2
    bp = math.cos(theta) * e1 - math.sin(theta) * e2
    te1, te2 = t @ e1, t @ e2
    a = te1 / np.linalg.norm(te1) if t1 > 1e-14 else np.array([0.0, 0.0, 1.0])
    ap = te2 / np.linalg.norm(te2) if t2 > 1e-14 else _any_orthogonal(a)
    return ChshSettings.from_vectors(a, ap, b, bp)


def ascent_max_chsh(t: np.ndarray, restarts: int = ASCENT_RESTARTS, tol: float = ASCENT_TOL, seed: int = 0):
    """Coordinate ascent over the eight polar/azimuthal angles of the four settings.

    Each angle update is exact because the CHSH sum is linear in every single
    direction. Restarts use independent seeds; the best result wins, ties
    resolved by restart index.
    """
    best_val, best_angles = -math.inf, None
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        angles = rng.uniform(0.0, 2 * math.pi, size=8)
        val = _angles_chsh(t, angles)
        for _ in range(10_000):
            for i in range(8):
                vec = i // 2
                g = _gradient_vector(t, angles, vec)
                th, ph = angles[2 * vec], angles[2 * vec + 1]
                if i % 2 == 0:
                    amp = math.cos(ph) * g[0] + math.sin(ph) * g[1]
                    angles[2 * vec] = math.atan2(amp, g[2])
                else:
                    shift = math.pi if math.sin(th) < 0 else 0.0
                    angles[2 * vec + 1] = math.atan2(g[1], g[0]) + shift
            new = _angles_chsh(t, angles)
            done = new - val < tol
            val = max(val, new)
            if done:
                break
        if val > best_val:
            best_val, best_angles = val, angles.copy()
    vecs = [_unit(best_angles[2 * i], best_angles[2 * i + 1]) for i in range(4)]
    return best_val, ChshSettings.from_vectors(*vecs)


def _angles_chsh(t, angles) -> float:
    a, ap, b, bp = (_unit(angles[2 * i], angles[2 * i + 1]) for i in range(4))
    return float(a @ t @ (b + bp) + ap @ t @ (b - bp))


def _gradient_vector(t, angles, which: int) -> np.ndarray:
    a, ap, b, bp = (_unit(angles[2 * i], angles[2 * i + 1]) for i in range(4))
    if which == 0:
        return t @ (b + bp)
    if which == 1:
        return t @ (b - bp)
    if which == 2:
        return t.T @ (a + ap)
    return t.T @ (a - ap)


def max_chsh(rho, seed: int = 0) -> tuple[float, ChshSettings]:
    """Maximal CHSH value of a two-qubit state and settings that reach it.

    The analytic settings are checked by direct evaluation; if they miss the
    analytic value by more than 1e-6, coordinate ascent takes over.
    """
    rho = _check_two_qubit(rho)
    t = correlation_matrix(rho)
    value = chsh_bound(t)
    settings = optimal_settings(t)
    if abs(chsh_value(rho, settings) - value) <= ACHIEVE_TOL:
        return value, settings
    found, settings = ascent_max_chsh(t, seed=seed)
    if abs(found - value) > ACHIEVE_TOL:
        raise RuntimeError(f"could not reach CHSH value {value} (best {found})")
    return value, settings
