"""Independent reference computations used to derive and check expected values.

Nothing here calls the code paths under test. CHSH maxima come from a direct
Nelder-Mead search over eight angles using explicit traces. LHV membership of
small tables is decided by scipy's LP solver. Sequential statistics are plain
products of embedded Kraus operators.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog, minimize

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def kron_loops(a, b):
    a, b = np.asarray(a), np.asarray(b)
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def spin(theta, phi):
    n = (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
    return n[0] * SX + n[1] * SY + n[2] * SZ


def chsh_angles(rho, x):
    a, ap, b, bp = (spin(x[2 * i], x[2 * i + 1]) for i in range(4))

    def e(u, v):
        return np.trace(rho @ np.kron(u, v)).real

    return e(a, b) + e(a, bp) + e(ap, b) - e(ap, bp)


def numeric_max_chsh(rho, restarts=6, seed=7):
    """Nelder-Mead over the 8 Bloch angles with random restarts."""
    rng = np.random.default_rng(seed)
    best = -np.inf
    for _ in range(restarts):
        x0 = rng.uniform(0, 2 * np.pi, 8)
        res = minimize(lambda x: -chsh_angles(rho, x), x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000, "maxfev": 40000})
        best = max(best, -res.fun)
    return best


def scipy_local(p):
    """LHV feasibility of a (x, y, a, b) table via scipy's LP over deterministic strategies."""
    x_n, y_n, a_n, b_n = p.shape
    cols = []
    for ra in itertools.product(range(a_n), repeat=x_n):
        for rb in itertools.product(range(b_n), repeat=y_n):
            d = np.zeros(p.shape)
            for x in range(x_n):
                for y in range(y_n):
                    d[x, y, ra[x], rb[y]] = 1
            cols.append(d.reshape(-1))
    d = np.array(cols).T
    a_eq = np.vstack([d, np.ones(d.shape[1])])
    b_eq = np.append(p.reshape(-1), 1.0)
    res = linprog(np.zeros(d.shape[1]), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def brute_sequence(rho, ops_a, ops_b):
    """P(outcome tuple) = || K_b ... K_a ... sqrt(rho) ||^2 via products of embedded Kraus operators.

    ``ops_a``/``ops_b`` are lists (one per step) of lists of operators.
    """
    d_a, d_b = ops_a[0][0].shape[0], ops_b[0][0].shape[0]
    shape = tuple(len(s) for s in ops_a) + tuple(len(s) for s in ops_b)
    out = np.zeros(shape)
    for idx in itertools.product(*(range(n) for n in shape)):
        k = np.eye(d_a * d_b, dtype=complex)
        for step, i in enumerate(idx[:len(ops_a)]):
            k = np.kron(ops_a[step][i], np.eye(d_b)) @ k
        for step, i in enumerate(idx[len(ops_a):]):
            k = np.kron(np.eye(d_a), ops_b[step][i]) @ k
        out[idx] = np.trace(k @ rho @ k.conj().T).real
    return out


def example_state(alpha_sq, p1):
    """Mixture of alpha|22'>+beta|11'> and alpha|21'>+beta|12'> (index 0 = mode 1)."""
    a, b = np.sqrt(alpha_sq), np.sqrt(1 - alpha_sq)
    psi1 = np.array([b, 0, 0, a])
    psi2 = np.array([0, b, a, 0])
    return p1 * np.outer(psi1, psi1) + (1 - p1) * np.outer(psi2, psi2)


def pauli_correlations(rho):
    paulis = (SX, SY, SZ)
    return np.array([[np.trace(rho @ np.kron(s, t)).real for t in paulis] for s in paulis])


def pr_box():
    p = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if (a ^ b) == x * y:
            p[x, y, a, b] = 0.5
    return p
