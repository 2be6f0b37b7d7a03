"""Fixed points, the maximal stationary state and the recurrent/decay split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import KrausChannel, matrix_rep
from .errors import NotCPTPError
from .numerics import DEFAULT_TOL, SubspaceBasis, hermitian_part, null_space, orthonormalize_real


@dataclass(frozen=True, eq=False)
class FixedPointSpace:
    channel_dim: int
    basis: tuple
    hermitian_basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True, eq=False)
class RecurrentSplit:
    recurrent: SubspaceBasis
    decay: SubspaceBasis
    stationary: np.ndarray


def _hermitian_span(mats, dim, tol):
    """Real-orthonormal Hermitian basis of the span of ``mats`` (a †-closed space)."""
    if not mats:
        return ()
    herms = []
    for x in mats:
        herms.append(x + x.conj().T)
        herms.append(1j * (x - x.conj().T))
    # Hermitian matrices as real vectors: (Re, Im) parts concatenated
    real = np.stack([np.concatenate([h.real.ravel(), h.imag.ravel()]) for h in herms], axis=1)
    q = orthonormalize_real(real, tol)
    n2 = dim * dim
    out = []
    for j in range(q.shape[1]):
        h = (q[:n2, j] + 1j * q[n2:, j]).reshape(dim, dim)
        out.append(hermitian_part(h))
    return tuple(out)


def fixed_point_space(channel: KrausChannel, tol: float = DEFAULT_TOL) -> FixedPointSpace:
    """Basis of ``{X : E(X) = X}`` from the null space of ``M - I``."""
    d = channel.dim
    m = matrix_rep(channel)
    ns = null_space(m - np.eye(d * d), tol, 1.0)
    basis = tuple(ns.columns[:, j].reshape(d, d) for j in range(ns.dim))
    return FixedPointSpace(d, basis, _hermitian_span(list(basis), d, tol))


def spectral_projector_at_one(m: np.ndarray, tol: float) -> np.ndarray:
    """Spectral projector of ``m`` onto its eigenvalue-1 eigenspace.

    Built from right and left eigenvectors, ``P = R (L^dagger R)^{-1} L^dagger``,
    which is exact when eigenvalue 1 is semisimple (always true for a
    trace-preserving map) and does not need to invert the full eigenvector
    matrix, which is singular for channels with nilpotent parts.
    """
    n = m.shape[0]
    right = null_space(m - np.eye(n), tol, 1.0).columns
    left = null_space((m - np.eye(n)).conj().T, tol, 1.0).columns
    if right.shape[1] == 0:
        raise NotCPTPError("no eigenvalue 1: the map is not trace preserving")
    if right.shape[1] != left.shape[1]:
        raise NotCPTPError(
            f"eigenvalue 1 is defective (right/left multiplicities "
            f"{right.shape[1]}/{left.shape[1]})"
        )
    gram = left.conj().T @ right
    return right @ np.linalg.solve(gram, left.conj().T)


def support(rho: np.ndarray, tol: float) -> tuple[SubspaceBasis, SubspaceBasis]:
    """Support and kernel of a positive matrix; eigenvalues below ``tol * max`` are zero."""
    w, v = np.linalg.eigh(hermitian_part(rho))
    top = max(w.max(), 0.0)
    keep = w > tol * top
    # eigh sorts ascending; list the support with the largest weight first
    sup = v[:, keep][:, ::-1]
    ker = v[:, ~keep]
    return SubspaceBasis(sup), SubspaceBasis(ker)


def clip_to_state(rho: np.ndarray, tol: float) -> np.ndarray:
    """Hermitise, zero eigenvalues in ``[-tol, 0]`` and normalise the trace."""
    rho = hermitian_part(rho)
    w, v = np.linalg.eigh(rho)
    scale = max(abs(w).max(), 1e-300)
    if w.min() < -np.sqrt(tol) * scale:
        raise NotCPTPError(f"stationary operator is not positive (min eigenvalue {w.min():.3e})")
    w = np.where(w < 0, 0.0, w)
    rho = (v * w) @ v.conj().T
    return rho / np.trace(rho).real


def maximal_stationary_state(channel: KrausChannel, tol: float = DEFAULT_TOL) -> RecurrentSplit:
    """Stationary state of maximal support and the induced recurrent/decay split.

    Projects ``I/D`` with the spectral projector at eigenvalue 1. Because
    ``I/D`` is faithful, its projection has the union of all stationary
    supports as its support.
    """
    d = channel.dim
    proj = spectral_projector_at_one(matrix_rep(channel), tol)
    rho = (proj @ (np.eye(d, dtype=complex) / d).ravel()).reshape(d, d)
    rho = clip_to_state(rho, tol)
    rec, dec = support(rho, tol)
    return RecurrentSplit(rec, dec, rho)


def is_irreducible(channel: KrausChannel, tol: float = DEFAULT_TOL) -> bool:
    """One-dimensional eigenvalue-1 eigenspace and a full-rank stationary state."""
    d = channel.dim
    m = matrix_rep(channel)
    if null_space(m - np.eye(d * d), tol, 1.0).dim != 1:
        return False
    split = maximal_stationary_state(channel, tol)
    return split.decay.dim == 0
