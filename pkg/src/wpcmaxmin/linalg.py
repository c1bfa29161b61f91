"""Dense linear-algebra kernels shared by the model and solver layers.

Everything here operates on small dense NumPy arrays (tens to a few hundred
rows).  Complex Hermitian quadratic forms are bridged to the real-valued
solver through an interleaved real composite: a complex vector ``x`` maps to
the real vector ``[Re x_0, Im x_0, Re x_1, Im x_1, ...]`` and a Hermitian
matrix ``A`` maps to :func:`realify` so that ``x^H A x == z^T realify(A) z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Relative tolerance used when validating that a matrix is Hermitian.
HERMITIAN_RTOL = 1e-12

#: Power-iteration budget and convergence tolerance for principal_eigenpair.
POWER_ITER_MAX = 200
POWER_ITER_TOL = 1e-10


@dataclass(frozen=True)
class EigenPair:
    """Largest eigenvalue of a Hermitian PSD matrix and a unit eigenvector."""

    value: float
    vector: np.ndarray


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(a, b)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise (Hadamard) product of two equal-shape matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch for hadamard product: {a.shape} vs {b.shape}")
    return a * b


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: stacks the columns of ``a`` into one vector."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot unvec length-{v.size} vector into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part ``(A + A^H)/2``; use before any quadratic-form evaluation."""
    return 0.5 * (a + a.conj().T)


def check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    """Raise ``ValueError`` if ``a`` deviates from Hermitian beyond ``rtol``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    dev = np.abs(a - a.conj().T).max()
    if dev > rtol * scale:
        raise ValueError(f"matrix is not Hermitian: deviation {dev:.3e} exceeds {rtol:.1e}*{scale:.3e}")


def principal_eigenpair(a: np.ndarray) -> EigenPair:
    """Principal eigenpair of a Hermitian PSD matrix.

    Runs power iteration from a fixed deterministic start and falls back to a
    dense eigendecomposition when the iteration has not met its residual
    tolerance within the iteration budget.  The returned vector has unit norm
    and residual ``||A v - lambda v|| <= 1e-8 * max(lambda, tiny)``.
    """
    a = np.asarray(a)
    check_hermitian(a)
    a = hermitize(a)
    n = a.shape[0]
    if n == 0:
        raise ValueError("cannot take the eigenpair of an empty matrix")

    # Deterministic start with a mild index ramp so the iterate is almost
    # never orthogonal to the principal eigenspace.
    v = np.ones(n, dtype=complex) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    value = 0.0
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    for _ in range(POWER_ITER_MAX):
        w = a @ v
        norm_w = np.linalg.norm(w)
        if norm_w <= 1e3 * np.finfo(float).tiny * scale:
            # Start vector lies in the null space; dense path decides.
            break
        v = w / norm_w
        value = float(np.real(v.conj() @ (a @ v)))
        residual = np.linalg.norm(a @ v - value * v)
        if residual <= POWER_ITER_TOL * max(abs(value), scale):
            return EigenPair(value=value, vector=v)

    # Power iteration stalled (clustered top eigenvalues, null start, ...).
    eigvals, eigvecs = np.linalg.eigh(a)
    idx = int(np.argmax(eigvals))
    v = eigvecs[:, idx]
    return EigenPair(value=float(eigvals[idx]), vector=v / np.linalg.norm(v))


def max_eig_product(a: np.ndarray, b: np.ndarray) -> float:
    """Largest eigenvalue of ``A @ B`` for Hermitian PSD ``A`` and ``B``.

    The product of two PSD matrices has a real non-negative spectrum; the
    value is computed through the symmetric congruence ``B^{1/2} A B^{1/2}``.
    """
    a = hermitize(np.asarray(a))
    b = hermitize(np.asarray(b))
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    vals_b, vecs_b = np.linalg.eigh(b)
    root = vecs_b * np.sqrt(np.clip(vals_b, 0.0, None))
    sym = root.conj().T @ a @ root
    vals = np.linalg.eigvalsh(hermitize(sym))
    return float(max(vals[-1], 0.0))


def to_real(z: np.ndarray) -> np.ndarray:
    """Interleaved real composite ``[Re z_0, Im z_0, Re z_1, Im z_1, ...]``."""
    z = np.ascontiguousarray(z, dtype=complex)
    return z.view(np.float64).copy()


def to_complex(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_real`."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.size % 2:
        raise ValueError("real composite vector must have even length")
    return x.view(np.complex128).copy()


def realify(a: np.ndarray) -> np.ndarray:
    """Real representation of a complex matrix under the interleaved composite.

    For Hermitian ``A`` the result ``R`` is symmetric and satisfies
    ``x^H A x == to_real(x)^T R to_real(x)`` along with
    ``to_real(A @ x) == R @ to_real(x)``.
    """
    a = np.asarray(a, dtype=complex)
    n, m = a.shape
    out = np.zeros((2 * n, 2 * m))
    out[0::2, 0::2] = a.real
    out[0::2, 1::2] = -a.imag
    out[1::2, 0::2] = a.imag
    out[1::2, 1::2] = a.real
    return out
