"""Small fixed-size linear algebra used by the state and measurement code.

Matrices are plain numpy arrays. ``kron`` and ``sqrt_psd2`` also accept
``dtype=object`` arrays of mpmath numbers, which is how the extended
precision simulation path reuses them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import NoConvergence, NotPSD

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

PSD_TOL = 1e-10
PINV_RTOL = 1e-12
RANK_RTOL = 64 * 2.220446049250313e-16
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 50
DEGENERACY_GAP = 1e-10

# Degenerate eigenspaces are re-spanned from these axes, in this order.
_CANONICAL_ORDER = (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))


def is_exact(m: np.ndarray) -> bool:
    """True when ``m`` holds mpmath numbers rather than machine floats."""
    return np.asarray(m).dtype == object


def _scalar_sqrt(x, exact: bool):
    if exact:
        return mpmath.sqrt(x)
    return math.sqrt(x)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a[0, 0] * b`` in the top-left block."""
    a, b = np.asarray(a), np.asarray(b)
    (m, n), (p, q) = a.shape, b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(m * p, n * q)


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def _eigvals2(m: np.ndarray, exact: bool):
    # Closed-form spectrum of a 2x2 Hermitian matrix.
    a = m[0, 0].real
    d = m[1, 1].real
    off = abs(m[0, 1])
    half_gap = _scalar_sqrt(((a - d) / 2) ** 2 + off**2, exact)
    mid = (a + d) / 2
    return mid - half_gap, mid + half_gap


def sqrt_psd2(m: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 Hermitian PSD matrix.

    Uses ``X = (m + sqrt(det m) I) / sqrt(tr m + 2 sqrt(det m))`` and falls back
    to an eigendecomposition when the denominator is below 1e-12. A smallest
    eigenvalue within rounding of zero (relative to the largest) counts as
    zero, so numerically rank-1 inputs keep rank-1 roots.
    """
    exact = is_exact(m)
    m = np.asarray(m) if exact else np.asarray(m, dtype=complex)
    lo, hi = _eigvals2(m, exact)
    if lo < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {float(lo):.3e} < -{PSD_TOL}")
    # An eigenvalue at rounding level is zero; its square root would not be.
    floor = mpmath.mpf(10) ** (3 - mpmath.mp.dps) if exact else RANK_RTOL
    if lo <= floor * hi:
        root_det = 0
    else:
        det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
        root_det = _scalar_sqrt(max(det, 0), exact)
    tr = (m[0, 0] + m[1, 1]).real
    denom_sq = tr + 2 * root_det
    if denom_sq > 1e-24:
        eye = np.array([[1, 0], [0, 1]], dtype=object) if exact else I2
        return (m + root_det * eye) / _scalar_sqrt(denom_sq, exact)
    if exact:
        # Only the zero matrix (to working precision) reaches this branch.
        return m * 0
    w, v = np.linalg.eigh(m)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def pinv_sqrt2(m: np.ndarray) -> np.ndarray:
    """Inverse square root of a 2x2 PSD matrix on its support.

    Eigenvalues below ``1e-12 * max eigenvalue`` are treated as zero, so that
    ``X @ m @ X`` is the projector onto the support of ``m``.
    """
    m = np.asarray(m, dtype=complex)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w[0] < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} < -{PSD_TOL}")
    cutoff = PINV_RTOL * max(w[-1], 0.0)
    inv = np.array([1 / math.sqrt(x) if x > cutoff and x > 0 else 0.0 for x in w])
    return (v * inv) @ v.conj().T


def support_projector2(m: np.ndarray) -> np.ndarray:
    x = pinv_sqrt2(m)
    return x @ np.asarray(m, dtype=complex) @ x


@dataclass(frozen=True)
class EigenBasis3:
    """Eigenpairs of a real symmetric 3x3 matrix.

    ``values`` are sorted in descending order and ``vectors[i]`` is the unit
    eigenvector belonging to ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        return iter((self.values, self.vectors))


def _jacobi(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array(s, dtype=float)
    v = np.eye(3)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if off <= JACOBI_TOL * scale:
            return np.diag(a).copy(), v
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
            c = 1.0 / math.hypot(1.0, t)
            sn = t * c
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = c
            rot[p, q] = sn
            rot[q, p] = -sn
            a = rot.T @ a @ rot
            a[p, q] = a[q, p] = 0.0
            v = v @ rot
    off = math.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
    if off <= JACOBI_TOL * scale:
        return np.diag(a).copy(), v
    raise NoConvergence(f"off-diagonal norm {off:.3e} after {JACOBI_MAX_SWEEPS} sweeps")


def canonical_sign(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip ``vec`` so that its first non-negligible component is positive."""
    for x in vec:
        if abs(x) > tol:
            return vec if x > 0 else -vec
    return vec


def _respan_block(block: np.ndarray) -> np.ndarray:
    # Rebuild an orthonormal basis of span(block rows) from canonical axes.
    proj = block.T @ block
    chosen: list[np.ndarray] = []
    for axis in _CANONICAL_ORDER:
        w = proj @ axis
        for u in chosen:
            w = w - (u @ w) * u
        norm = np.linalg.norm(w)
        if norm > 1e-6:
            chosen.append(w / norm)
        if len(chosen) == len(block):
            break
    return np.array(chosen)


def eig_sym3(s: np.ndarray) -> EigenBasis3:
    """Cyclic Jacobi eigensolver for real symmetric 3x3 matrices.

    Eigenvalues come back in descending order. Inside a degenerate cluster
    (gap < 1e-10) the eigenvectors are rebuilt by projecting e3, e1, e2 in that
    order, so e.g. the identity yields (e3, e1, e2). Every vector is sign
    canonicalized.
    """
    s = np.asarray(s, dtype=float)
    s = (s + s.T) / 2
    values, v = _jacobi(s)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order].T.copy()

    start = 0
    while start < 3:
        stop = start + 1
        while stop < 3 and values[stop - 1] - values[stop] < DEGENERACY_GAP:
            stop += 1
        if stop - start > 1:
            vectors[start:stop] = _respan_block(vectors[start:stop])
        start = stop
    vectors = np.array([canonical_sign(x) for x in vectors])
    return EigenBasis3(values=values, vectors=vectors)
