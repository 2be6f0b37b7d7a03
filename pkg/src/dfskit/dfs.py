"""Decoherence-free subsystems read off a structure decomposition."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import KrausChannel, apply
from .errors import DimensionError
from .numerics import DEFAULT_TOL, SubspaceBasis, random_density_matrix
from .structure import StructureDecomposition


@dataclass(frozen=True, eq=False)
class DfsBlock:
    block_index: int
    subsystem_dim: int
    unitary: np.ndarray
    embed: SubspaceBasis
    cosubsystem_dim: int


class DfsVerificationReport(NamedTuple):
    samples: int
    max_factorization_error: float
    max_unitary_error: float
    seed: int


def maximal_dfs(decomposition: StructureDecomposition) -> list[DfsBlock]:
    """One maximal decoherence-free subsystem ``C^m`` per block."""
    return [
        DfsBlock(l, b.m, b.unitary, b.W, b.b_dim)
        for l, b in enumerate(decomposition.blocks)
    ]


def is_dfs(decomposition: StructureDecomposition, l: int, candidate, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``candidate`` (columns in ``C^{m_l}``) is a DFS inside block ``l``.

    True iff its projector commutes with the block unitary, i.e. the
    candidate is spanned by eigenvectors of that unitary.
    """
    block = decomposition.blocks[l]
    cols = candidate.columns if isinstance(candidate, SubspaceBasis) else np.asarray(candidate, dtype=complex)
    if cols.ndim == 1:
        cols = cols[:, None]
    if cols.shape[0] != block.m:
        raise DimensionError(f"candidate lives in dimension {cols.shape[0]}, block has m = {block.m}")
    q, _ = np.linalg.qr(cols)
    p = q @ q.conj().T
    u = block.unitary
    return float(np.linalg.norm(p @ u - u @ p, 2)) <= tol


def partial_traces(tau: np.ndarray, m: int, b: int):
    """Reduced operators on ``C^m`` and on ``B`` of an operator on ``C^m (x) B``."""
    t = tau.reshape(m, b, m, b)
    return np.einsum("ijkj->ik", t), np.einsum("ijik->jk", t)


def verify_definition(channel: KrausChannel, dfs: DfsBlock, samples: int = 100, seed: int = 0,
                      tol: float = DEFAULT_TOL) -> DfsVerificationReport:
    """Check ``E(rho_A (x) rho_B) = U rho_A U^dagger (x) sigma_B`` on random product states.

    The output is pulled back into the block frame; weight that leaks out
    of the block counts toward the factorisation error. Norms are Frobenius.
    """
    rng = np.random.default_rng(seed)
    w = dfs.embed.columns
    m, b = dfs.subsystem_dim, dfs.cosubsystem_dim
    u = dfs.unitary
    fact = unit = 0.0
    for _ in range(samples):
        ra = random_density_matrix(m, rng)
        rb = random_density_matrix(b, rng)
        out = apply(channel, w @ np.kron(ra, rb) @ w.conj().T)
        tau = w.conj().T @ out @ w
        leak = float(np.linalg.norm(out - w @ tau @ w.conj().T))
        ta, tb = partial_traces(tau, m, b)
        fact = max(fact, float(np.linalg.norm(tau - np.kron(ta, tb))) + leak)
        unit = max(unit, float(np.linalg.norm(ta - u @ ra @ u.conj().T)))
    return DfsVerificationReport(samples, fact, unit, seed)


def capacity_report(decomposition: StructureDecomposition) -> list[dict]:
    """Qubits storable per block: whole DFS vs. largest noiseless (equal-phase) part."""
    out = []
    for b in decomposition.blocks:
        largest = max(len(c) for c in b.phase_clusters(decomposition.tol))
        out.append({"dfs_qubits": float(np.log2(b.m)), "noiseless_qubits": float(np.log2(largest))})
    return out
