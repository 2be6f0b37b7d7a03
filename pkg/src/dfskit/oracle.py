"""Brute-force cross-checks that avoid the main code paths.

* stationary states by power iteration instead of spectral projection;
* irreducibility of a restriction from a superoperator assembled column by
  column with :func:`apply` and a scipy null space, instead of the
  Kronecker-sum representation and the operator-algebra decomposition;
* Kraus operators rebuilt from the block data and compared to the input.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .channel import KrausChannel, apply, restrict
from .errors import ConvergenceError
from .numerics import DEFAULT_TOL, SubspaceBasis
from .structure import StructureDecomposition


class OracleReport(NamedTuple):
    name: str
    discrepancy: float
    details: dict


class CesaroResult(NamedTuple):
    state: np.ndarray
    n_used: int
    converged: bool
    delta: float


def cesaro_stationary(channel: KrausChannel, n_max: int = 1 << 14, tol: float = DEFAULT_TOL,
                      strict: bool = False) -> CesaroResult:
    """Stationary state of maximal support by averaging ``E^n(I/D)``.

    With ``S_N = (1/N) sum_{n=1..N} E^n(I/D)`` the returned estimate is the
    tail mean ``2 S_{2N} - S_N``, the average over ``n = N+1..2N``, which
    drops the ``O(1/N)`` bias that the transient part leaves in ``S_N``.
    ``N`` doubles until two successive estimates agree within ``tol``.
    """
    d = channel.dim
    x = np.eye(d, dtype=complex) / d
    total = np.zeros((d, d), dtype=complex)
    means = {}
    prev = None
    delta = np.inf
    n = 0
    checkpoint = 1
    est = x
    while checkpoint <= n_max:
        while n < checkpoint:
            x = apply(channel, x)
            total += x
            n += 1
        means[n] = total / n
        if n >= 2 and n // 2 in means:
            est = 2 * means[n] - means[n // 2]
            if prev is not None:
                delta = float(np.linalg.norm(est - prev))
                if delta <= tol:
                    break
            prev = est
        checkpoint *= 2
    converged = delta <= tol
    if strict and not converged:
        raise ConvergenceError(f"Cesaro averages still moving by {delta:.3e} after {n} steps")
    est = 0.5 * (est + est.conj().T)
    est = est / np.trace(est).real
    return CesaroResult(est, n, converged, delta)


def _superoperator_by_columns(channel: KrausChannel) -> np.ndarray:
    d = channel.dim
    cols = []
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            cols.append(apply(channel, unit).ravel())
    return np.stack(cols, axis=1)


def check_minimality(channel: KrausChannel, candidate: SubspaceBasis, tol: float = DEFAULT_TOL) -> OracleReport:
    """Zero discrepancy iff the restriction to ``candidate`` is irreducible.

    Discrepancy is ``(number of independent fixed points - 1)`` plus the
    rank deficiency of the stationary state when it is unique.
    """
    sub = restrict(channel, candidate, np.sqrt(tol))
    d = sub.dim
    s = _superoperator_by_columns(sub)
    _, sv, vh = scipy.linalg.svd(s - np.eye(d * d))
    # S - I is O(1) for a channel, so the threshold is absolute
    rank = int(np.sum(sv > tol * max(sv[0], 1.0)))
    ns = vh[rank:].conj().T
    n_fix = ns.shape[1]
    details = {"fixed_points": n_fix, "dim": d}
    if n_fix != 1:
        return OracleReport("minimality", float(abs(n_fix - 1)), details)
    rho = ns[:, 0].reshape(d, d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    w = np.linalg.eigvalsh(rho)
    deficiency = int(np.sum(w <= tol * w.max()))
    details["min_eigenvalue"] = float(w.min())
    return OracleReport("minimality", float(deficiency), details)


def decay_blocks(channel: KrausChannel, decomposition: StructureDecomposition):
    """``(T_k, K_k)`` read off the channel in the decomposition frame."""
    f = decomposition.frame()
    n_rec = f.shape[1] - decomposition.decay.dim
    out = []
    for e in channel.kraus:
        b = f.conj().T @ e @ f
        out.append((b[:n_rec, n_rec:], b[n_rec:, n_rec:]))
    return out


class Reconstruction(NamedTuple):
    channel: KrausChannel
    residual: float | None


def reconstruct_channel(decomposition: StructureDecomposition, blocks, original: KrausChannel | None = None) -> Reconstruction:
    """Rebuild every ``E_k`` from the block data and the supplied ``(T_k, K_k)``."""
    f = decomposition.frame()
    n_rec = f.shape[1] - decomposition.decay.dim
    rebuilt = []
    for k, (t, kk) in enumerate(blocks):
        b = np.zeros((f.shape[1], f.shape[1]), dtype=complex)
        off = 0
        for blk in decomposition.blocks:
            n = blk.m * blk.b_dim
            b[off:off + n, off:off + n] = np.kron(np.diag(np.exp(1j * np.asarray(blk.phases))), blk.base_kraus[k])
            off += n
        b[:n_rec, n_rec:] = t
        b[n_rec:, n_rec:] = kk
        rebuilt.append(f @ b @ f.conj().T)
    ch = KrausChannel(tuple(rebuilt))
    residual = None
    if original is not None:
        residual = max(float(np.linalg.norm(x - y, 2)) for x, y in zip(ch.kraus, original.kraus))
    return Reconstruction(ch, residual)


def support_agreement(channel: KrausChannel, recurrent: SubspaceBasis, n_max: int = 1 << 14,
                      threshold: float = 1e-6) -> OracleReport:
    """Distance between ``recurrent`` and the support of the Cesaro state.

    The Cesaro support is read with a loose relative eigenvalue threshold,
    since the average converges only like ``1/N`` when there are
    peripheral eigenvalues other than one. Discrepancy is the spectral
    norm of the difference of the two orthogonal projectors (0 when equal,
    1 when the dimensions differ).
    """
    res = cesaro_stationary(channel, n_max)
    w, v = np.linalg.eigh(res.state)
    keep = w > threshold * w.max()
    p_c = v[:, keep] @ v[:, keep].conj().T
    p_r = recurrent.projector()
    diff = float(np.linalg.norm(p_c - p_r, 2))
    details = {"cesaro_rank": int(keep.sum()), "recurrent_dim": recurrent.dim,
               "steps": res.n_used, "converged": res.converged}
    return OracleReport("stationary-support", diff, details)
