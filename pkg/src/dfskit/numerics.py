"""Dense complex linear-algebra primitives with explicit tolerances.

Every rank or unit-modulus decision in the package goes through the
functions here, and every one of them takes ``tol`` as an argument.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, NearSingularError

DEFAULT_TOL = 1e-9

TWO_PI = 2.0 * np.pi


class EigenPair(NamedTuple):
    value: complex
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal column frame ``V`` (an isometry) for a subspace."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=complex)
        if cols.ndim != 2:
            raise DimensionError("SubspaceBasis needs a 2-d column array")
        if cols.shape[1] > cols.shape[0]:
            raise DimensionError("more columns than the ambient dimension")
        cols = cols.copy()
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def empty(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(np.zeros((ambient_dim, 0), dtype=complex))

    @classmethod
    def full(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(np.eye(ambient_dim, dtype=complex))

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T

    def isometry_defect(self) -> float:
        v = self.columns
        if v.shape[1] == 0:
            return 0.0
        return float(np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1]), 2))

    def __len__(self):
        return self.dim


def _as_matrix(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} has non-finite entries")
    return a


def _as_square(a, name="matrix") -> np.ndarray:
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def phase_of(z: complex, tol: float = 0.0) -> float:
    """Argument of ``z`` in ``[0, 2*pi)``; values within ``tol`` of ``2*pi`` snap to 0."""
    ph = float(np.angle(z)) % TWO_PI
    if ph >= TWO_PI - tol:
        ph = 0.0
    return ph


def wrap_phase(theta: float) -> float:
    """Map a real phase to ``(-pi, pi]``."""
    t = float(theta) % TWO_PI
    if t > np.pi:
        t -= TWO_PI
    return t


def canonical_order(values: Sequence[complex], tol: float) -> list[int]:
    """Indices sorting ``values`` by descending modulus, then ascending phase.

    Moduli closer than ``tol`` compare equal, so an eigenvalue at ``-1``
    does not jump ahead of one at ``1`` because of rounding.
    """
    scale = max(tol, np.finfo(float).eps)
    keys = []
    for i, v in enumerate(values):
        mag = int(np.floor(abs(v) / scale + 0.5))
        keys.append((-mag, phase_of(v, tol), i))
    return [k[-1] for k in sorted(keys)]


def eig(a) -> list[EigenPair]:
    """All eigenpairs of a square complex matrix, canonically ordered."""
    a = _as_square(a)
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = canonical_order(w, DEFAULT_TOL)
    out = []
    for i in order:
        vec = v[:, i]
        nrm = np.linalg.norm(vec)
        out.append(EigenPair(complex(w[i]), vec / nrm if nrm > 0 else vec))
    return out


def peripheral_eigenpairs(a, tol: float = DEFAULT_TOL) -> list[EigenPair]:
    """Eigenpairs with ``|lambda| >= 1 - tol``, canonically ordered."""
    a = _as_square(a)
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    keep = [i for i in range(len(w)) if abs(w[i]) >= 1.0 - tol]
    order = canonical_order([w[i] for i in keep], tol)
    out = []
    for j in order:
        i = keep[j]
        vec = v[:, i]
        out.append(EigenPair(complex(w[i]), vec / np.linalg.norm(vec)))
    return out


def null_space(a, tol: float = DEFAULT_TOL, scale_floor: float = 0.0) -> SubspaceBasis:
    """Orthonormal basis of ``{x : |A x| <= tol |A|}`` decided by singular values.

    ``scale_floor`` bounds the reference norm from below; use it when ``A``
    is a difference such as ``M - I`` whose natural scale is known, so that
    rounding noise on a vanishing ``A`` is not mistaken for rank.
    """
    a = _as_matrix(a)
    n = a.shape[1]
    if a.size == 0:
        return SubspaceBasis.full(n)
    u, s, vh = np.linalg.svd(a)
    smax = max(s[0] if s.size else 0.0, scale_floor)
    if smax == 0.0:
        return SubspaceBasis.full(n)
    rank = int(np.sum(s > tol * smax))
    return SubspaceBasis(vh[rank:].conj().T)


def polar_unitary(x, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary factor ``U`` of the polar decomposition ``X = U P``.

    Raises
    ------
    NearSingularError
        If the smallest singular value is below ``tol`` times the largest,
        in which case ``X`` is not proportional to a unitary times a
        positive definite matrix and no intertwiner should be fabricated.
    """
    x = _as_square(x)
    w, s, vh = np.linalg.svd(x)
    if s.size == 0 or s[-1] <= tol * s[0]:
        ratio = 0.0 if s.size == 0 or s[0] == 0 else s[-1] / s[0]
        raise NearSingularError(
            f"matrix is near-singular (sigma_min/sigma_max = {ratio:.3e}); "
            "eigenvector is not proportional to a unitary"
        )
    return w @ vh


def orthonormalize(vectors, tol: float = DEFAULT_TOL) -> SubspaceBasis:
    """Gram-Schmidt with column pivoting.

    ``vectors`` is either a 2-d array whose columns are the vectors or a
    sequence of 1-d vectors. Vectors whose residual norm drops to ``tol``
    (relative to the largest input norm) are discarded.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        work = np.array(vectors, dtype=complex)
    else:
        vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
        if not vecs:
            raise DimensionError("cannot infer ambient dimension from no vectors")
        work = np.stack(vecs, axis=1)
    n, k = work.shape
    scale = max((np.linalg.norm(work[:, j]) for j in range(k)), default=0.0)
    basis = []
    remaining = list(range(k))
    threshold = tol * max(scale, 1.0)
    while remaining and len(basis) < n:
        norms = [np.linalg.norm(work[:, j]) for j in remaining]
        best = int(np.argmax(norms))
        if norms[best] <= threshold:
            break
        j = remaining.pop(best)
        q = work[:, j].copy()
        # second pass restores orthogonality lost to cancellation
        for _ in range(2):
            for b in basis:
                q -= b * np.vdot(b, q)
        q /= np.linalg.norm(q)
        basis.append(q)
        for r in remaining:
            work[:, r] -= q * np.vdot(q, work[:, r])
    if not basis:
        return SubspaceBasis.empty(n)
    return SubspaceBasis(np.stack(basis, axis=1))


def orthonormalize_real(vectors: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Real Gram-Schmidt on the columns of a real matrix; returns the kept columns."""
    q, r, piv = _qr_pivoted(np.asarray(vectors, dtype=float))
    if r.size == 0:
        return q[:, :0]
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * max(diag[0], 1.0)))
    return q[:, :rank]


def _qr_pivoted(a):
    from scipy.linalg import qr

    return qr(a, mode="economic", pivoting=True)


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random state ``G G^dagger / tr(G G^dagger)`` from complex Gaussian ``G``."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def fix_global_phase(u: np.ndarray) -> np.ndarray:
    """Multiply ``u`` by a unit scalar so the result is deterministic.

    Makes ``tr(u)`` real positive when the trace is not negligible, else
    makes the first largest-modulus entry real positive.
    """
    tr = np.trace(u)
    if abs(tr) > 1e-6 * u.shape[0]:
        return u * (abs(tr) / tr)
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > np.abs(flat).max() * (1 - 1e-9)))
    z = flat[idx]
    return u * (abs(z) / z)
