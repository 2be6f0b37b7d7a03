"""Channels and tensors with known structure, for tests, demos and the CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import KrausChannel
from .mps import MpsTensor
from .numerics import random_unitary

# sign of each |x>_A sector in the worked example
EXAMPLE_SIGNS = (1, 1, -1, -1)


def _ket(dim, i):
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def example_channel(aperiodic: bool = False) -> KrausChannel:
    """The 12-dimensional worked example on ``C^4 (x) C^3``.

    ``E1 = sum_x s_x |x0><x1|``, ``E2 = sum_x s_x |x1><x0|``,
    ``E3 = sum_x s_x |x0><x2|`` with ``s = (1, 1, -1, -1)``.

    The second factor of this channel acts on ``span{|0>, |1>}`` as the
    period-2 flip ``{|0><1|, |1><0|}``. With ``aperiodic=True`` the flip is
    mixed half-and-half with the identity (an extra Kraus operator), which
    removes the period while keeping every other feature.
    """

    def op(a, b):
        return sum(s * np.outer(_ket(12, 3 * x + a), _ket(12, 3 * x + b))
                   for x, s in enumerate(EXAMPLE_SIGNS))

    e1, e2, e3 = op(0, 1), op(1, 0), op(0, 2)
    if not aperiodic:
        return KrausChannel((e1, e2, e3))
    r = np.sqrt(0.5)
    e4 = r * (op(0, 0) + op(1, 1))
    return KrausChannel((r * e1, r * e2, e3, e4))


def random_isometry_kraus(dim: int, n_kraus: int, rng: np.random.Generator) -> list:
    """Kraus operators of a random channel: blocks of a random isometry ``C^dim -> C^(K dim)``."""
    g = rng.standard_normal((n_kraus * dim, dim)) + 1j * rng.standard_normal((n_kraus * dim, dim))
    q, _ = np.linalg.qr(g)
    return [q[k * dim:(k + 1) * dim, :] for k in range(n_kraus)]


def random_channel(dim: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    return KrausChannel(tuple(random_isometry_kraus(dim, n_kraus, rng)))


def random_irreducible_tensor(bond_dim: int, phys_dim: int, rng: np.random.Generator) -> MpsTensor:
    """Random tensor with ``sum_k A_k^dagger A_k = I``; irreducible with probability one."""
    return MpsTensor(tuple(random_isometry_kraus(bond_dim, phys_dim, rng)))


def twisted_copy(a: MpsTensor, theta: float, w: np.ndarray) -> MpsTensor:
    """Tensor with matrices ``exp(i*theta) W A_k W^dagger``."""
    ph = np.exp(1j * theta)
    return MpsTensor(tuple(ph * w @ m @ w.conj().T for m in a.matrices))


@dataclass(frozen=True, eq=False)
class BlockSpec:
    phases: tuple
    base_kraus: tuple

    @property
    def m(self) -> int:
        return len(self.phases)

    @property
    def b_dim(self) -> int:
        return self.base_kraus[0].shape[0]


@dataclass(frozen=True, eq=False)
class BlockFormChannel:
    """A channel built in block form, with the ground truth that built it."""

    channel: KrausChannel
    blocks: tuple
    decay_dim: int
    rotation: np.ndarray


def _spectral_radius(kraus) -> float:
    s = np.stack(kraus)
    return float(np.abs(np.linalg.eigvals(kernels.kron_sum(s, s))).max())


def block_form_channel(blocks, decay_dim: int, rng: np.random.Generator, rotate: bool = True,
                       max_tries: int = 50) -> BlockFormChannel:
    """Channel whose Kraus operators are ``Q [[R_k, T_k], [0, K_k]] Q^dagger``.

    ``R_k`` is the block diagonal of ``diag(exp(i*phases_l)) (x) E_{k,l}``.
    The decay columns ``(T_k, K_k)`` are drawn at random in the orthogonal
    complement of the recurrent columns of the stacked Kraus isometry, so
    the result is trace preserving; draws where the decay part is not
    strictly transient are rejected. ``Q`` is Haar random when ``rotate``.
    """
    blocks = tuple(blocks)
    n_kraus = max(len(b.base_kraus) for b in blocks)
    rec_dims = [b.m * b.b_dim for b in blocks]
    d_rec = sum(rec_dims)
    dim = d_rec + decay_dim
    rk = [np.zeros((d_rec, d_rec), dtype=complex) for _ in range(n_kraus)]
    off = 0
    for b, n in zip(blocks, rec_dims):
        u = np.diag(np.exp(1j * np.asarray(b.phases, dtype=float)))
        for k in range(n_kraus):
            ek = b.base_kraus[k] if k < len(b.base_kraus) else np.zeros((b.b_dim, b.b_dim))
            rk[k][off:off + n, off:off + n] = np.kron(u, ek)
        off += n
    for _ in range(max_tries):
        stacked_rec = np.zeros((n_kraus * dim, d_rec), dtype=complex)
        for k in range(n_kraus):
            stacked_rec[k * dim:k * dim + d_rec, :] = rk[k]
        if decay_dim:
            g = rng.standard_normal((n_kraus * dim, decay_dim)) + 1j * rng.standard_normal((n_kraus * dim, decay_dim))
            g -= stacked_rec @ (stacked_rec.conj().T @ g)
            cols, _ = np.linalg.qr(g)
            cols -= stacked_rec @ (stacked_rec.conj().T @ cols)
            cols, _ = np.linalg.qr(cols)
        kraus = []
        kblocks = []
        for k in range(n_kraus):
            e = np.zeros((dim, dim), dtype=complex)
            e[:d_rec, :d_rec] = rk[k]
            if decay_dim:
                e[:, d_rec:] = cols[k * dim:(k + 1) * dim, :]
                e[d_rec:, :d_rec] = 0.0
                kblocks.append(e[d_rec:, d_rec:])
            kraus.append(e)
        if decay_dim and _spectral_radius(kblocks) > 1 - 1e-3:
            continue
        break
    else:
        raise RuntimeError("could not draw a transient decay block")
    q = random_unitary(dim, rng) if rotate else np.eye(dim, dtype=complex)
    ch = KrausChannel(tuple(q @ e @ q.conj().T for e in kraus))
    return BlockFormChannel(ch, blocks, decay_dim, q)


def random_block_spec(m: int, b_dim: int, n_kraus: int, rng: np.random.Generator,
                      phases=None) -> BlockSpec:
    if phases is None:
        phases = [0.0] + list(rng.uniform(0, 2 * np.pi, m - 1))
    return BlockSpec(tuple(float(p) for p in phases), tuple(random_isometry_kraus(b_dim, n_kraus, rng)))


def random_block_channel(rng: np.random.Generator, max_dim: int = 12, max_blocks: int = 2,
                         max_m: int = 4, n_kraus: int = 3, repeated_phases: bool = True) -> BlockFormChannel:
    """Random instance in block form with ``dim <= max_dim``.

    When ``repeated_phases`` is set, roughly one block in three gets a
    duplicated phase so that noiseless sub-blocks also occur.
    """
    while True:
        n_blocks = int(rng.integers(1, max_blocks + 1))
        specs = []
        for _ in range(n_blocks):
            m = int(rng.integers(1, max_m + 1))
            b = int(rng.integers(1, 3))
            phases = [0.0] + list(rng.uniform(0, 2 * np.pi, m - 1))
            if repeated_phases and m > 2 and rng.random() < 0.35:
                phases[-1] = phases[1]
            specs.append(random_block_spec(m, b, n_kraus, rng, phases))
        d_rec = sum(s.m * s.b_dim for s in specs)
        if d_rec > max_dim:
            continue
        decay = int(rng.integers(0, min(3, max_dim - d_rec) + 1))
        return block_form_channel(specs, decay, rng)
