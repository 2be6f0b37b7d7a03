"""Quantum channels in Kraus form.

Vectorisation is row-major throughout: ``vec`` stacks rows, so the
superoperator of ``X -> sum_k E_k X F_k^dagger`` is ``sum_k E_k (x) conj(F_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DimensionError, InvarianceError
from .numerics import DEFAULT_TOL, SubspaceBasis


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A completely positive map ``X -> sum_k E_k X E_k^dagger``.

    Trace preservation is not enforced here; use :func:`is_cptp`.
    """

    kraus: tuple

    def __post_init__(self):
        ops = [np.array(k, dtype=complex) for k in self.kraus]
        if not ops:
            raise DimensionError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0] if ops[0].ndim == 2 else -1
        for i, op in enumerate(ops):
            if op.ndim != 2 or op.shape != (dim, dim):
                raise DimensionError(
                    f"Kraus operator {i} has shape {op.shape}, expected ({dim}, {dim})"
                )
            if not np.all(np.isfinite(op)):
                raise DimensionError(f"Kraus operator {i} has non-finite entries")
            op.setflags(write=False)
        object.__setattr__(self, "kraus", tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def n_kraus(self) -> int:
        return len(self.kraus)

    def stack(self) -> np.ndarray:
        return np.stack(self.kraus)

    def kraus_norm(self) -> float:
        """Largest spectral norm among the Kraus operators."""
        return max(float(np.linalg.norm(k, 2)) for k in self.kraus)

    def __call__(self, x):
        return apply(self, x)


class CptpReport(NamedTuple):
    trace_preserving: bool
    defect: float
    completely_positive: bool = True


@dataclass(frozen=True, eq=False)
class CrossMap:
    """Associated map between two invariant subspaces and its representation."""

    left_basis: SubspaceBasis
    right_basis: SubspaceBasis
    rep: np.ndarray
    left_kraus: tuple
    right_kraus: tuple

    @property
    def shape(self):
        return (self.left_basis.dim, self.right_basis.dim)


def apply(channel: KrausChannel, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (channel.dim, channel.dim):
        raise DimensionError(
            f"operand has shape {x.shape}, channel acts on {channel.dim}x{channel.dim}"
        )
    out = np.zeros_like(x)
    for e in channel.kraus:
        out += e @ x @ e.conj().T
    return out


def matrix_rep(channel: KrausChannel) -> np.ndarray:
    """``sum_k E_k (x) conj(E_k)``; ``vec(apply(X)) == matrix_rep @ vec(X)``."""
    s = channel.stack()
    return kernels.kron_sum(s, s)


def vec(x) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1)


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape(rows, rows if cols is None else cols)


def is_cptp(channel: KrausChannel, tol: float = DEFAULT_TOL) -> CptpReport:
    """Trace-preservation defect ``|sum_k E_k^dagger E_k - I|`` in spectral norm."""
    s = sum(e.conj().T @ e for e in channel.kraus)
    defect = float(np.linalg.norm(s - np.eye(channel.dim), 2))
    return CptpReport(defect <= tol, defect)


def adjoint(channel: KrausChannel) -> KrausChannel:
    """Dual map with Kraus operators ``E_k^dagger``."""
    return KrausChannel(tuple(e.conj().T for e in channel.kraus))


def invariance_residuals(channel: KrausChannel, basis: SubspaceBasis) -> np.ndarray:
    """Per-Kraus leakage ``|(I - V V^dagger) E_k V|`` out of ``span(V)``."""
    v = basis.columns
    if v.shape[0] != channel.dim:
        raise DimensionError(
            f"subspace lives in dimension {v.shape[0]}, channel in {channel.dim}"
        )
    if v.shape[1] == 0:
        return np.zeros(channel.n_kraus)
    out = []
    for e in channel.kraus:
        ev = e @ v
        out.append(np.linalg.norm(ev - v @ (v.conj().T @ ev), 2))
    return np.array(out)


def check_invariant(channel: KrausChannel, basis: SubspaceBasis, tol: float) -> None:
    res = invariance_residuals(channel, basis)
    threshold = tol * max(channel.kraus_norm(), 1e-300)
    worst = int(np.argmax(res))
    if res[worst] > threshold:
        raise InvarianceError(worst, float(res[worst]), threshold)


def compress(channel: KrausChannel, basis: SubspaceBasis) -> tuple:
    """Kraus blocks ``V^dagger E_k V`` without any invariance check."""
    v = basis.columns
    vh = v.conj().T
    return tuple(vh @ e @ v for e in channel.kraus)


def restrict(channel: KrausChannel, basis: SubspaceBasis, tol: float = DEFAULT_TOL) -> KrausChannel:
    """Channel on an invariant subspace, Kraus ``V^dagger E_k V``.

    Raises
    ------
    InvarianceError
        If some ``E_k`` maps ``span(V)`` out of itself beyond
        ``tol * max_k |E_k|``.
    """
    check_invariant(channel, basis, tol)
    return KrausChannel(compress(channel, basis))


def cross_map(channel: KrausChannel, left: SubspaceBasis, right: SubspaceBasis,
              tol: float = DEFAULT_TOL) -> CrossMap:
    """Map ``X -> sum_k E_{k,p} X E_{k,q}^dagger`` on ``L(H_q, H_p)``.

    ``left`` spans ``H_p`` and ``right`` spans ``H_q``; both must be
    invariant.
    """
    check_invariant(channel, left, tol)
    check_invariant(channel, right, tol)
    lk = compress(channel, left)
    rk = compress(channel, right)
    rep = kernels.kron_sum(np.stack(lk), np.stack(rk))
    return CrossMap(left, right, rep, lk, rk)
