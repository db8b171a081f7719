"""Unitary DFT primitives, the symbol-subspace projector and dense test oracles.

All transforms use the unitary normalisation, so ``unitary_dft`` is ``F @ v``
with ``F[k, n] = exp(-2j*pi*k*n/N) / sqrt(N)`` and ``unitary_idft`` is
``F^H @ v``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "ProjectorError",
    "Projector",
    "unitary_dft",
    "unitary_idft",
    "apply_partial_dft",
    "build_projector",
    "apply_projector",
    "dft_matrix",
    "circulant_dense",
    "projector_dense",
]

MAX_GRAM_CONDITION = 1e12
DENSE_ORACLE_LIMIT = 256


class ProjectorError(ValueError):
    """Raised when the symbol/channel Gram matrix cannot be factorised safely."""


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    return v


def unitary_dft(v) -> np.ndarray:
    v = _as_vector(v)
    return np.fft.fft(v, norm="ortho")


def unitary_idft(v) -> np.ndarray:
    v = _as_vector(v)
    return np.fft.ifft(v, norm="ortho")


def apply_partial_dft(h, n_c: int) -> np.ndarray:
    """Apply the first ``len(h)`` columns of the ``n_c``-point unitary DFT to ``h``."""
    h = _as_vector(h)
    if h.size > n_c:
        raise ValueError(f"channel length {h.size} exceeds DFT length {n_c}")
    return np.fft.fft(h, n=n_c, norm="ortho")


def partial_dft_columns(n_c: int, L: int) -> np.ndarray:
    """The ``n_c x L`` semi-unitary matrix of leading DFT columns."""
    k = np.arange(n_c)[:, None]
    l = np.arange(L)[None, :]
    return np.exp(-2j * np.pi * ((k * l) % n_c) / n_c) / np.sqrt(n_c)


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto the column space of ``Diag(s) @ Fcheck``.

    Stored factored: ``basis`` is the ``n_c x L`` matrix ``A = Diag(s) Fcheck``
    and ``gram_factor`` is a Cholesky factor of ``A^H A``. The dense
    ``n_c x n_c`` matrix is never formed.
    """

    basis: np.ndarray
    gram_factor: tuple

    @property
    def n_c(self) -> int:
        return self.basis.shape[0]

    @property
    def L(self) -> int:
        return self.basis.shape[1]

    def gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self.gram_factor, rhs)

    def coefficients(self, v: np.ndarray) -> np.ndarray:
        """Least-squares coefficients ``(A^H A)^{-1} A^H v``."""
        return self.gram_solve(self.basis.conj().T @ v)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.basis @ self.coefficients(v)


def build_projector(s, L: int) -> Projector:
    s = _as_vector(s)
    n_c = s.size
    if not 1 <= L < n_c:
        raise ValueError(f"need 1 <= L < n_c, got L={L}, n_c={n_c}")
    basis = s[:, None] * partial_dft_columns(n_c, L)
    gram = basis.conj().T @ basis
    gram = 0.5 * (gram + gram.conj().T)
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= 0 or eig[-1] / eig[0] > MAX_GRAM_CONDITION:
        raise ProjectorError(
            f"symbol Gram matrix is singular or ill-conditioned (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})"
        )
    factor = scipy.linalg.cho_factor(gram, lower=True)
    basis.setflags(write=False)
    return Projector(basis=basis, gram_factor=factor)


def apply_projector(p: Projector, v) -> np.ndarray:
    v = _as_vector(v)
    if v.size != p.n_c:
        raise ValueError(f"vector length {v.size} does not match projector size {p.n_c}")
    return p.apply(v)


# Dense oracles (tests and small-scale checks only)


def _guard(n: int) -> None:
    if n > DENSE_ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_ORACLE_LIMIT}, got {n}")


def dft_matrix(n: int) -> np.ndarray:
    _guard(n)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def circulant_dense(first_column) -> np.ndarray:
    """Circulant matrix with entry ``(i, j) = c[(i - j) mod n]``."""
    c = _as_vector(first_column)
    n = c.size
    _guard(n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return c[idx]


def projector_dense(s, L: int) -> np.ndarray:
    s = _as_vector(s)
    _guard(s.size)
    A = np.diag(s) @ dft_matrix(s.size)[:, :L]
    return A @ np.linalg.solve(A.conj().T @ A, A.conj().T)
