"""Small dense complex linear algebra and quantum state helpers.

Matrices are plain complex ``numpy`` arrays. Density matrices and pure states are
validated on construction and returned read-only so they can be shared freely.
"""

from __future__ import annotations

import math
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import BadWeights, DimensionMismatch, InvalidState, NotHermitian, NotPsd

# Default tolerances; every function that uses one accepts an override.
HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIG_FLOOR = -1e-10
PSD_CLAMP = -1e-8
NORM_ATOL = 1e-12
EIG_HERMITIAN_ATOL = 1e-10

JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_cmatrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array."""
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def kron(a, b) -> np.ndarray:
    """Kronecker product, entry ``(i*rb + k, j*cb + l) = a[i, j] * b[k, l]``."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.empty((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            out[i * rb:(i + 1) * rb, j * cb:(j + 1) * cb] = a[i, j] * b
    return out


def is_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= atol)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    phase = apq / r
    tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] restricted to (p, q)
    g_pp, g_pq = c, s
    g_qp, g_qq = -s * np.conj(phase), c * np.conj(phase)
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = col_p * g_pp + col_q * g_qp
    a[:, q] = col_p * g_pq + col_q * g_qq
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = np.conj(g_pp) * row_p + np.conj(g_qp) * row_q
    a[q, :] = np.conj(g_pq) * row_p + np.conj(g_qq) * row_q
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = vp * g_pp + vq * g_qp
    v[:, q] = vp * g_pq + vq * g_qq


def hermitian_eig(m, atol: float = EIG_HERMITIAN_ATOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns
    -------
    eigenvalues : real array, sorted descending
    eigenvectors : complex array whose columns are the matching orthonormal eigenvectors
    """
    m = as_cmatrix(m)
    n = m.shape[0]
    if m.shape != (n, n):
        raise DimensionMismatch(f"expected a square matrix, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if not is_hermitian(m, atol * scale):
        raise NotHermitian("matrix is not Hermitian")
    a = 0.5 * (m + dagger(m))
    v = np.eye(n, dtype=complex)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a[~np.eye(n, dtype=bool)]))
        if off < JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _jacobi_rotate(a, v, p, q)
    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def psd_sqrt(m, clamp: float = PSD_CLAMP) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix."""
    w, v = hermitian_eig(m)
    if w.size and w[-1] < clamp:
        raise NotPsd(f"matrix has eigenvalue {w[-1]:.3e} below {clamp:.0e}")
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ dagger(v)


def operator_norm(m) -> float:
    """Largest singular value, sqrt(lambda_max(m^dagger m))."""
    m = as_cmatrix(m)
    w, _ = hermitian_eig(dagger(m) @ m)
    return math.sqrt(max(float(w[0]), 0.0))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unitary from the eigenvectors of a random Hermitian matrix."""
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    _, v = hermitian_eig(g + dagger(g))
    return v


# --- states -----------------------------------------------------------------


def pure_state(amplitudes, atol: float = NORM_ATOL) -> np.ndarray:
    """Validate a unit vector of amplitudes."""
    psi = np.array(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise InvalidState(f"state vector has norm {norm!r}, expected 1")
    return _frozen(psi)


def normalized(amplitudes) -> np.ndarray:
    psi = np.array(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidState("zero vector cannot be normalized")
    return pure_state(psi / norm)


def density_matrix(
    m,
    herm_atol: float = HERMITIAN_ATOL,
    trace_atol: float = TRACE_ATOL,
    eig_floor: float = EIG_FLOOR,
) -> np.ndarray:
    """Validate ``m`` as a density matrix and return a read-only copy.

    Raises `NotHermitian`, `InvalidState` (trace) or `NotPsd`.
    """
    rho = as_cmatrix(m)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, herm_atol):
        raise NotHermitian("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_atol:
        raise InvalidState(f"density matrix has trace {tr!r}")
    w, _ = hermitian_eig(rho)
    if w[-1] < eig_floor:
        raise NotPsd(f"density matrix has eigenvalue {w[-1]:.3e}")
    return _frozen(rho.copy())


def density_from_pure(psi) -> np.ndarray:
    psi = pure_state(psi)
    return density_matrix(np.outer(psi, np.conj(psi)))


def mix(pairs: Iterable[tuple[float, np.ndarray]], atol: float = TRACE_ATOL) -> np.ndarray:
    """Convex combination of density matrices."""
    pairs = list(pairs)
    if not pairs:
        raise BadWeights("empty mixture")
    weights = np.array([float(w) for w, _ in pairs])
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > atol:
        raise BadWeights(f"weights {weights.tolist()} are not a probability vector")
    shape = np.shape(pairs[0][1])
    out = np.zeros(shape, dtype=complex)
    for w, rho in pairs:
        if np.shape(rho) != shape:
            raise DimensionMismatch("mixture components have different dimensions")
        out += w * np.asarray(rho)
    return density_matrix(out)


def partial_trace(rho, keep: Literal["A", "B"], dims: Sequence[int]) -> np.ndarray:
    """Reduced state of one side of a bipartite density matrix."""
    d_a, d_b = dims
    rho = as_cmatrix(rho)
    if rho.shape != (d_a * d_b, d_a * d_b):
        raise DimensionMismatch(f"state of shape {rho.shape} does not match dims {tuple(dims)}")
    t = rho.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        red = np.einsum("ijkj->ik", t)
    elif keep == "B":
        red = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")
    return density_matrix(red)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    m = g @ dagger(g)
    return density_matrix(m / np.trace(m).real)


def random_pure(n: int, rng: np.random.Generator) -> np.ndarray:
    return normalized(rng.normal(size=n) + 1j * rng.normal(size=n))
