"""Translation-invariant MPS: irreducibility, repeated tensors, bases."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .channel import KrausChannel, is_cptp
from .errors import CapExceededError, DimensionError, NearSingularError, NotIrreducibleError, ToleranceInconsistency
from .fixedpoint import is_irreducible
from .numerics import DEFAULT_TOL, fix_global_phase, peripheral_eigenpairs, polar_unitary, wrap_phase

EXPAND_CAP = 10 ** 6


@dataclass(frozen=True, eq=False)
class MpsTensor:
    """Tensor ``{A_k}`` of ``d`` square ``D x D`` matrices."""

    matrices: tuple

    def __post_init__(self):
        mats = [np.array(a, dtype=complex) for a in self.matrices]
        if not mats:
            raise DimensionError("a tensor needs at least one matrix")
        dim = mats[0].shape[0] if mats[0].ndim == 2 else -1
        for i, a in enumerate(mats):
            if a.shape != (dim, dim):
                raise DimensionError(f"matrix {i} has shape {a.shape}, expected ({dim}, {dim})")
            if not np.all(np.isfinite(a)):
                raise DimensionError(f"matrix {i} has non-finite entries")
            a.setflags(write=False)
        object.__setattr__(self, "matrices", tuple(mats))

    @property
    def phys_dim(self) -> int:
        return len(self.matrices)

    @property
    def bond_dim(self) -> int:
        return self.matrices[0].shape[0]

    def stack(self) -> np.ndarray:
        return np.stack(self.matrices)

    def channel(self) -> KrausChannel:
        return KrausChannel(self.matrices)


@dataclass(frozen=True, eq=False)
class WeightedTensor:
    tensor: MpsTensor
    weights: tuple = (1.0,)

    def __post_init__(self):
        w = tuple(complex(x) for x in self.weights)
        if not w:
            raise ValueError("weights must be nonempty")
        object.__setattr__(self, "weights", w)


class RepeatedVerdict(NamedTuple):
    """``repeated`` iff ``A_k = exp(i*theta) U B_k U^dagger`` for all ``k``."""

    repeated: bool
    theta: float | None = None
    intertwiner: np.ndarray | None = None


def transfer_map(a: MpsTensor, b: MpsTensor) -> np.ndarray:
    """Representation of ``X -> sum_k A_k X B_k^dagger`` (row-major vec)."""
    if a.phys_dim != b.phys_dim:
        raise DimensionError(f"physical dimensions differ: {a.phys_dim} vs {b.phys_dim}")
    return kernels.kron_sum(a.stack(), b.stack())


def is_irreducible_tensor(a: MpsTensor, tol: float = DEFAULT_TOL) -> bool:
    """Associated map ``X -> sum_k A_k X A_k^dagger`` is trace preserving and irreducible."""
    ch = a.channel()
    return is_cptp(ch, tol).trace_preserving and is_irreducible(ch, tol)


def is_repeated(a: MpsTensor, b: MpsTensor, tol: float = DEFAULT_TOL) -> RepeatedVerdict:
    """Decide whether two irreducible tensors are repeated.

    They are iff the transfer map has a unit-modulus eigenvalue
    ``exp(i*theta)``; its eigenvector is ``U rho_B`` and the polar factor
    recovers ``U``.

    Raises
    ------
    NotIrreducibleError
        If either tensor is not irreducible; the spectral criterion is
        meaningless otherwise.
    ToleranceInconsistency
        If the recovered ``(theta, U)`` fails the defining relation.
    """
    if a.phys_dim != b.phys_dim:
        raise DimensionError(f"physical dimensions differ: {a.phys_dim} vs {b.phys_dim}")
    for name, t in (("first", a), ("second", b)):
        if not is_irreducible_tensor(t, tol):
            raise NotIrreducibleError(f"{name} tensor is not irreducible")
    if a.bond_dim != b.bond_dim:
        return RepeatedVerdict(False)
    pairs = peripheral_eigenpairs(transfer_map(a, b), tol)
    if not pairs:
        return RepeatedVerdict(False)
    lam, vec = pairs[0]
    x = vec.reshape(a.bond_dim, b.bond_dim)
    try:
        u = fix_global_phase(polar_unitary(x, tol))
    except NearSingularError as exc:
        raise ToleranceInconsistency(f"transfer eigenvector is not unitary-like: {exc}") from exc
    theta = wrap_phase(np.angle(lam))
    if abs(theta) <= tol:
        theta = 0.0
    ph = np.exp(1j * theta)
    scale = max(max(np.linalg.norm(m, 2) for m in a.matrices), 1e-300)
    residual = max(
        float(np.linalg.norm(am - ph * u @ bm @ u.conj().T, 2))
        for am, bm in zip(a.matrices, b.matrices)
    )
    if residual > 10 * tol * scale:
        raise ToleranceInconsistency(f"repeated-tensor relation residual {residual:.3e}")
    return RepeatedVerdict(True, theta, u)


def expand(a: MpsTensor, n: int, cap: int = EXPAND_CAP) -> np.ndarray:
    """Dense MPS vector ``sum tr(A_{k1}...A_{kn}) |k1...kn>`` of length ``d**n``."""
    if n < 1:
        raise ValueError("n must be positive")
    if a.phys_dim ** n > cap:
        raise CapExceededError(f"d**n = {a.phys_dim}**{n} exceeds the cap {cap}")
    return kernels.expand_traces(a.stack(), n)


def basis_dedup(tensors: Sequence[WeightedTensor], tol: float = DEFAULT_TOL) -> list[WeightedTensor]:
    """Greedily merge repeated tensors into pairwise non-repeated representatives.

    Merging ``(B, mu)`` into ``A`` with ``B_k = exp(i*theta) U A_k U^dagger``
    uses ``mu**n V_n(B) = (mu exp(i*theta))**n V_n(A)``, so the weight
    ``mu * exp(i*theta)`` is appended to the representative.
    """
    reps: list[WeightedTensor] = []
    for item in tensors:
        if not is_irreducible_tensor(item.tensor, tol):
            raise NotIrreducibleError("basis_dedup needs irreducible tensors")
        for i, rep in enumerate(reps):
            if rep.tensor.phys_dim != item.tensor.phys_dim:
                continue
            v = is_repeated(item.tensor, rep.tensor, tol)
            if v.repeated:
                ph = np.exp(1j * v.theta)
                reps[i] = WeightedTensor(rep.tensor, rep.weights + tuple(w * ph for w in item.weights))
                break
        else:
            reps.append(item)
    return reps


def mps_sum(tensors: Sequence[WeightedTensor], n: int, cap: int = EXPAND_CAP) -> np.ndarray:
    """``sum_rep sum_mu mu**n V_n(rep)``."""
    out = None
    for t in tensors:
        coeff = sum(w ** n for w in t.weights)
        v = coeff * expand(t.tensor, n, cap)
        out = v if out is None else out + v
    return out
