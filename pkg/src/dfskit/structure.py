"""Minimal subspaces, coherences between them and the block decomposition.

Pipeline of :func:`structure_decomposition`:

1. split off the decay subspace with the maximal stationary state;
2. on the recurrent part, take the fixed-point algebra of the dual map
   (a *-algebra, the commutant of the Kraus operators);
3. central projections of that algebra give the noiseless blocks, and the
   eigenspaces of a generic Hermitian element inside a block are minimal
   subspaces;
4. pairwise spectral coherence tests group minimal subspaces into classes;
5. each class is phase-aligned to an anchor and assembled into a
   ``C^m (x) B`` frame in which every Kraus operator reads
   ``diag(exp(i*phases)) (x) E_base``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .channel import KrausChannel, adjoint, check_invariant, compress, cross_map, is_cptp, matrix_rep
from .errors import (
    DimensionError,
    NearSingularError,
    NotCPTPError,
    RetryExhausted,
    ToleranceInconsistency,
)
from .fixedpoint import fixed_point_space, is_irreducible, maximal_stationary_state
from .numerics import (
    DEFAULT_TOL,
    TWO_PI,
    SubspaceBasis,
    fix_global_phase,
    orthonormalize_real,
    peripheral_eigenpairs,
    polar_unitary,
    wrap_phase,
)

MAX_DRAWS = 16

NONE = "none"
STATIONARY = "stationary"
CONTINUOUS = "continuous"


@dataclass(frozen=True, eq=False)
class MinimalSubspace:
    basis: SubspaceBasis
    index: int
    # noiseless block (central projection of the algebra) it was cut from
    group: int = 0

    @property
    def dim(self) -> int:
        return self.basis.dim


class CoherenceVerdict(NamedTuple):
    """Outcome of a coherence test between minimal subspaces ``p`` and ``q``.

    When ``kind`` is not ``"none"``:
    ``E_{k,p} = exp(i*theta) U E_{k,q} U^dagger`` for every ``k``, with
    ``U = intertwiner`` mapping ``q``-coordinates to ``p``-coordinates.
    ``eigenvalue`` is the unit-modulus eigenvalue ``exp(i*theta)`` of the
    cross map the verdict was read from.
    """

    kind: str
    theta: float | None = None
    intertwiner: np.ndarray | None = None
    eigenvalue: complex | None = None
    residual: float = 0.0

    @property
    def coherent(self) -> bool:
        return self.kind != NONE


@dataclass(frozen=True, eq=False)
class Block:
    """One coherence block ``C^m (x) B`` of the decomposition."""

    m: int
    b_dim: int
    W: SubspaceBasis
    phases: tuple
    base_kraus: tuple
    rho: np.ndarray
    period: int = 1
    members: tuple = ()

    @property
    def unitary(self) -> np.ndarray:
        return np.diag(np.exp(1j * np.asarray(self.phases, dtype=float)))

    @property
    def phase_period(self) -> float:
        return TWO_PI / self.period

    def phase_clusters(self, tol: float = DEFAULT_TOL) -> list[list[int]]:
        return phase_clusters(self.phases, self.phase_period, tol)

    def fix_dim_contribution(self, tol: float = DEFAULT_TOL) -> int:
        """Complex dimension of ``fix(U . U^dagger)`` for the block unitary."""
        return sum(len(c) ** 2 for c in self.phase_clusters(tol))


@dataclass(frozen=True, eq=False)
class StructureDecomposition:
    dim: int
    blocks: tuple
    decay: SubspaceBasis
    mode: str = "full"
    tol: float = DEFAULT_TOL
    seed: int = 0
    residuals: dict = field(default_factory=dict)

    def frame(self) -> np.ndarray:
        """Concatenated isometry ``[W_1 | ... | W_L | K]``."""
        cols = [b.W.columns for b in self.blocks] + [self.decay.columns]
        return np.concatenate(cols, axis=1)

    def fix_dimension(self) -> int:
        """Fixed-point dimension predicted by the block structure."""
        return sum(b.fix_dim_contribution(self.tol) for b in self.blocks)

    def invariants(self):
        """Gauge-invariant summary: block count, dimensions and phase differences."""
        out = []
        for b in self.blocks:
            out.append((b.m, b.b_dim, phase_difference_multiset(b.phases, b.phase_period)))
        return out


class BlockFormReport(NamedTuple):
    completeness: float
    inter_block: float
    lower_left: float
    diagonal: float
    upper_right: float
    decay_block: float

    @property
    def max_constrained(self) -> float:
        return max(self.completeness, self.inter_block, self.lower_left, self.diagonal)


# ---------------------------------------------------------------------------
# helpers


def cluster_sorted(values: np.ndarray, gap: float) -> list[list[int]]:
    """Split indices of ascending ``values`` at gaps larger than ``gap``."""
    if len(values) == 0:
        return []
    clusters = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > gap:
            clusters.append([i])
        else:
            clusters[-1].append(i)
    return clusters


def phase_clusters(phases: Sequence[float], period: float, tol: float) -> list[list[int]]:
    """Group phases equal modulo ``period``; gap threshold ``sqrt(tol)``."""
    ph = np.asarray(phases, dtype=float) % period
    if ph.size == 0:
        return []
    order = np.argsort(ph, kind="stable")
    gap = np.sqrt(tol)
    groups = [[int(i) for i in order[c]] for c in (np.array(cl) for cl in cluster_sorted(ph[order], gap))]
    # the circle closes: last group may continue into the first
    if len(groups) > 1 and (ph[order[0]] + period) - ph[order[-1]] <= gap:
        groups[0] = groups.pop() + groups[0]
    return groups


def phase_difference_multiset(phases: Sequence[float], period: float = TWO_PI,
                              decimals: int = 8) -> tuple:
    """Sorted pairwise differences ``(phi_p - phi_q) mod period``, rounded."""
    ph = np.asarray(phases, dtype=float)
    diffs = []
    for a in ph:
        for b in ph:
            x = (a - b) % period
            if period - x < 10.0 ** (-decimals):
                x = 0.0
            diffs.append(round(float(x), decimals) + 0.0)
    return tuple(sorted(diffs))


def period_of(kraus: Sequence[np.ndarray], tol: float) -> int:
    """Number of unit-modulus eigenvalues of an irreducible channel's superoperator."""
    s = np.stack(kraus)
    from . import kernels

    return max(1, len(peripheral_eigenpairs(kernels.kron_sum(s, s), tol)))


def _commutator_null(herms: np.ndarray, tol: float) -> np.ndarray:
    """Real coefficient vectors ``c`` with ``[sum_i c_i H_i, H_j] = 0`` for all ``j``."""
    n = herms.shape[0]
    prod = np.einsum("iab,jbc->ijac", herms, herms)
    comm = prod - prod.transpose(1, 0, 2, 3)  # [H_i, H_j]
    # rows: (j, a, c) entries, columns: i
    sys = comm.transpose(1, 2, 3, 0).reshape(-1, n)
    real = np.concatenate([sys.real, sys.imag], axis=0)
    _, s, vh = np.linalg.svd(real, full_matrices=True)
    # the H_i are Frobenius-orthonormal, so commutators are O(1) in scale
    rank = int(np.sum(s > tol * max(s[0] if s.size else 0.0, 1.0)))
    return vh[rank:].T


def _hermitian_draw(herms: np.ndarray, coeffs: np.ndarray, rng) -> np.ndarray:
    g = rng.standard_normal(coeffs.shape[1])
    c = coeffs @ g
    h = np.einsum("i,iab->ab", c, herms)
    return 0.5 * (h + h.conj().T)


def _split_by_element(h: np.ndarray, tol: float):
    w, v = np.linalg.eigh(h)
    spread = w[-1] - w[0]
    scale = max(abs(w).max(), 1e-300)
    if spread <= np.sqrt(tol) * scale:
        return [v], [w.mean()]
    cl = cluster_sorted(w, np.sqrt(tol) * spread)
    return [v[:, c] for c in cl], [w[c].mean() for c in cl]


def _algebra_blocks(channel: KrausChannel, tol: float, rng):
    """Recurrent split plus minimal-subspace frames grouped by noiseless block."""
    split = maximal_stationary_state(channel, tol)
    rec = split.recurrent
    check_invariant(channel, rec, np.sqrt(tol))
    restricted = KrausChannel(compress(channel, rec))
    algebra = fixed_point_space(adjoint(restricted), tol).hermitian_basis
    herms = np.stack(algebra)
    center = _commutator_null(herms, tol)
    n_center = center.shape[1]
    last = "no draw attempted"
    for draw in range(MAX_DRAWS):
        z = _hermitian_draw(herms, center, rng)
        frames, _ = _split_by_element(z, tol)
        if len(frames) != n_center:
            last = f"draw {draw}: {len(frames)} central clusters, centre has dimension {n_center}"
            continue
        groups = []
        ok = True
        for q in frames:
            comp = np.einsum("ai,nab,bj->nij", q.conj(), herms, q)
            flat = np.concatenate([comp.real.reshape(len(comp), -1), comp.imag.reshape(len(comp), -1)], axis=1).T
            alg_dim = orthonormalize_real(flat, tol).shape[1]
            h = _hermitian_draw(comp, np.eye(len(comp)), rng)
            parts, _ = _split_by_element(h, tol)
            sizes = {p.shape[1] for p in parts}
            n = len(parts)
            if len(sizes) != 1 or n * n != alg_dim:
                ok = False
                last = (f"draw {draw}: block of dimension {q.shape[1]} split into sizes "
                        f"{sorted(p.shape[1] for p in parts)}, algebra dimension {alg_dim}")
                break
            groups.append([SubspaceBasis(rec.columns @ (q @ p)) for p in parts])
        if ok:
            return split, groups
    raise RetryExhausted(f"generic element not found after {MAX_DRAWS} draws ({last})")


def _require_cptp(channel: KrausChannel, tol: float) -> None:
    rep = is_cptp(channel, tol * 10)
    if not rep.trace_preserving:
        raise NotCPTPError(f"trace-preservation defect {rep.defect:.3e}")


# ---------------------------------------------------------------------------
# public operations


def minimal_subspaces(channel: KrausChannel, tol: float = DEFAULT_TOL, seed: int = 0) -> list[MinimalSubspace]:
    """Mutually orthogonal minimal subspaces spanning the recurrent subspace."""
    _require_cptp(channel, tol)
    rng = np.random.default_rng(seed)
    _, groups = _algebra_blocks(channel, tol, rng)
    out = []
    for g, frames in enumerate(groups):
        for basis in frames:
            out.append(MinimalSubspace(basis, len(out), g))
    return out


def coherence(channel: KrausChannel, p: MinimalSubspace, q: MinimalSubspace,
              tol: float = DEFAULT_TOL, stationary_only: bool = False) -> CoherenceVerdict:
    """Test for a continuous (or stationary) coherence from ``q`` to ``p``.

    The cross map ``X -> sum_k E_{k,p} X E_{k,q}^dagger`` has a unit-modulus
    eigenvalue ``exp(i*theta)`` exactly when
    ``E_{k,p} = exp(i*theta) U E_{k,q} U^dagger``; its eigenvector is then
    ``U rho_q`` and ``U`` is recovered as the polar factor. Among several
    peripheral eigenvalues the one of smallest phase in ``[0, 2 pi)`` is used.

    Raises
    ------
    ToleranceInconsistency
        If a peripheral eigenvector is not proportional to a unitary times
        a positive matrix, or the recovered relation fails on the Kraus
        operators.
    """
    pb = p.basis if isinstance(p, MinimalSubspace) else p
    qb = q.basis if isinstance(q, MinimalSubspace) else q
    if pb.dim != qb.dim:
        return CoherenceVerdict(NONE)
    cm = cross_map(channel, pb, qb, np.sqrt(tol))
    pairs = peripheral_eigenpairs(cm.rep, tol)
    if stationary_only:
        pairs = [e for e in pairs if abs(e.value - 1.0) <= tol]
    if not pairs:
        return CoherenceVerdict(NONE)
    lam, vec = pairs[0]
    x = vec.reshape(pb.dim, qb.dim)
    try:
        u = fix_global_phase(polar_unitary(x, tol))
    except NearSingularError as exc:
        raise ToleranceInconsistency(f"peripheral eigenvector at {lam:.6g} is not unitary-like: {exc}") from exc
    theta = wrap_phase(np.angle(lam))
    if abs(theta) <= tol:
        theta = 0.0
    ph = np.exp(1j * theta)
    residual = max(
        float(np.linalg.norm(ep - ph * u @ eq @ u.conj().T, 2))
        for ep, eq in zip(cm.left_kraus, cm.right_kraus)
    )
    limit = 10 * tol * max(channel.kraus_norm(), 1.0)
    if residual > limit:
        raise ToleranceInconsistency(
            f"coherence at eigenvalue {lam:.6g}: Kraus relation residual {residual:.3e} > {limit:.3e}"
        )
    kind = STATIONARY if theta == 0.0 else CONTINUOUS
    return CoherenceVerdict(kind, theta, u, complex(lam), residual)


def pairwise_coherences(channel: KrausChannel, minimals: Sequence[MinimalSubspace],
                        tol: float = DEFAULT_TOL, stationary_only: bool = False) -> dict:
    """Verdicts for every ordered pair ``(p, q)`` with ``p < q``."""
    out = {}
    for i in range(len(minimals)):
        for j in range(i + 1, len(minimals)):
            out[(i, j)] = coherence(channel, minimals[i], minimals[j], tol, stationary_only)
    return out


def classes_from_verdicts(n: int, verdicts: dict) -> list[list[int]]:
    """Union-find over coherent pairs, then a transitivity cross-check."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (i, j), v in sorted(verdicts.items()):
        if v.coherent:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    classes: dict[int, list[int]] = {}
    for i in range(n):
        classes.setdefault(find(i), []).append(i)
    out = sorted(classes.values())
    for cls in out:
        for a in cls:
            for b in cls:
                if a < b and (a, b) in verdicts and not verdicts[(a, b)].coherent:
                    raise ToleranceInconsistency(
                        f"coherence is not transitive: {a} and {b} share a class but "
                        "their direct test found no coherence"
                    )
    return out


def equivalence_classes(channel: KrausChannel, minimals: Sequence[MinimalSubspace],
                        tol: float = DEFAULT_TOL, stationary_only: bool = False) -> list[list[int]]:
    """Partition of minimal-subspace indices under the coherence relation."""
    verdicts = pairwise_coherences(channel, minimals, tol, stationary_only)
    return classes_from_verdicts(len(minimals), verdicts)


class AlignedMember(NamedTuple):
    index: int
    phase: float
    intertwiner: np.ndarray
    kraus: tuple


def phase_align(channel: KrausChannel, minimals: Sequence[MinimalSubspace], members: Sequence[int],
                tol: float = DEFAULT_TOL, anchor: int | None = None,
                stationary_only: bool = False) -> list[AlignedMember]:
    """Rotate continuous coherences of one class into stationary ones.

    For each member ``q`` the test against the anchor gives
    ``E_{k,q} = exp(i*phi_q) U_q E_{k,anchor} U_q^dagger``. The member's
    eigenphase is ``phi_q`` and its aligned Kraus set
    ``exp(-i*phi_q) E_{k,q}`` is unitarily equivalent to the anchor's.
    """
    anchor = members[0] if anchor is None else anchor
    out = []
    for q in members:
        if q == anchor:
            d = minimals[q].dim
            phase, u = 0.0, np.eye(d, dtype=complex)
        else:
            v = coherence(channel, minimals[q], minimals[anchor], tol, stationary_only)
            if not v.coherent:
                raise ToleranceInconsistency(f"member {q} has no coherence with anchor {anchor}")
            phase, u = v.theta % TWO_PI, v.intertwiner
            if TWO_PI - phase <= tol:
                phase = 0.0
        kr = compress(channel, minimals[q].basis)
        out.append(AlignedMember(q, phase, u, tuple(np.exp(-1j * phase) * k for k in kr)))
    return out


def _canonical_anchor(aligned: Sequence[AlignedMember], period: float) -> int:
    best_key, best = None, aligned[0].index
    phases = [a.phase for a in aligned]
    for a in aligned:
        shifted = []
        for ph in phases:
            x = (ph - a.phase) % period
            if period - x < 1e-7 * period:
                x = 0.0
            shifted.append(int(round(x / period * 1e6)))
        key = tuple(sorted(shifted))
        if best_key is None or key < best_key:
            best_key, best = key, a.index
    return best


def _spectrum_signature(kraus) -> tuple:
    s = np.stack(kraus)
    from . import kernels

    w = np.linalg.eigvals(kernels.kron_sum(s, s))
    pts = sorted((round(float(z.real), 6) + 0.0, round(float(z.imag), 6) + 0.0) for z in w)
    return tuple(pts)


def _assemble_block(channel, minimals, members, tol, stationary_only) -> Block:
    aligned = phase_align(channel, minimals, members, tol, stationary_only=stationary_only)
    anchor = members[0]
    base = compress(channel, minimals[anchor].basis)
    period = period_of(base, tol)
    if not stationary_only and len(members) > 1:
        a = _canonical_anchor(aligned, TWO_PI / period)
        if a != anchor:
            anchor = a
            aligned = phase_align(channel, minimals, members, tol, anchor=a)
            base = compress(channel, minimals[anchor].basis)
    base_channel = KrausChannel(base)
    if not is_irreducible(base_channel, tol):
        raise ToleranceInconsistency("base channel of a block is not irreducible")
    rho = maximal_stationary_state(base_channel, tol).stationary
    aligned = sorted(aligned, key=lambda a: (round(a.phase, 9), a.index != anchor, a.index))
    cols = [minimals[a.index].basis.columns @ a.intertwiner for a in aligned]
    phases = tuple(0.0 if stationary_only else float(a.phase) for a in aligned)
    b_dim = minimals[anchor].dim
    return Block(
        m=len(aligned),
        b_dim=b_dim,
        W=SubspaceBasis(np.concatenate(cols, axis=1)),
        phases=phases,
        base_kraus=tuple(base),
        rho=rho,
        period=period,
        members=tuple(a.index for a in aligned),
    )


def _block_key(block: Block):
    rounded = tuple(round(p, 6) + 0.0 for p in block.phases)
    return (block.m, block.b_dim, rounded, _spectrum_signature(block.base_kraus))


def structure_decomposition(channel: KrausChannel, tol: float = DEFAULT_TOL, seed: int = 0,
                            mode: str = "full") -> StructureDecomposition:
    """Decompose the space into coherence blocks ``C^m (x) B`` and a decay part.

    ``mode="noiseless"`` groups minimal subspaces by stationary coherence
    only, which reproduces the fixed-point (noiseless) decomposition with
    all block unitaries equal to the identity.

    Phases are reported modulo ``2 pi / period`` where ``period`` is the
    number of unit-modulus eigenvalues of the block's base channel: a
    periodic base channel is unitarily equivalent to its own phase-rotated
    copies, so finer phase information is gauge.
    """
    if mode not in ("full", "noiseless"):
        raise ValueError(f"unknown mode {mode!r}")
    _require_cptp(channel, tol)
    stationary_only = mode == "noiseless"
    rng = np.random.default_rng(seed)
    split, groups = _algebra_blocks(channel, tol, rng)
    minimals = []
    for g, frames in enumerate(groups):
        for basis in frames:
            minimals.append(MinimalSubspace(basis, len(minimals), g))
    verdicts = pairwise_coherences(channel, minimals, tol, stationary_only)
    classes = classes_from_verdicts(len(minimals), verdicts)
    blocks = [_assemble_block(channel, minimals, cls, tol, stationary_only) for cls in classes]
    blocks.sort(key=_block_key)
    dec = StructureDecomposition(channel.dim, tuple(blocks), split.decay, mode, tol, seed)
    report = verify_block_form(channel, dec, tol)
    limit = 10 * tol * max(channel.kraus_norm(), 1.0)
    if report.max_constrained > limit:
        raise ToleranceInconsistency(
            f"block-form residual {report.max_constrained:.3e} exceeds {limit:.3e}: {report}"
        )
    return StructureDecomposition(channel.dim, tuple(blocks), split.decay, mode, tol, seed,
                                  dict(report._asdict()))


def noiseless_decomposition(channel: KrausChannel, tol: float = DEFAULT_TOL, seed: int = 0) -> StructureDecomposition:
    """Fixed-point decomposition: blocks joined by stationary coherences only."""
    return structure_decomposition(channel, tol, seed, mode="noiseless")


def verify_block_form(channel: KrausChannel, decomposition: StructureDecomposition,
                      tol: float = DEFAULT_TOL) -> BlockFormReport:
    """Residuals of every Kraus operator against the block form in the decomposition frame.

    The ``T_k`` (decay to recurrent) and ``K_k`` (decay to decay) blocks are
    unconstrained; their norms are reported for information only.
    """
    f = decomposition.frame()
    if f.shape[0] != channel.dim:
        raise DimensionError("decomposition and channel dimensions differ")
    n_cols = f.shape[1]
    completeness = float(np.linalg.norm(f.conj().T @ f - np.eye(n_cols), 2)) if n_cols else 0.0
    if n_cols != channel.dim:
        completeness = max(completeness, 1.0)
    sizes = [b.m * b.b_dim for b in decomposition.blocks]
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    n_rec = int(offs[-1])
    inter = lower = diag = upper = kblk = 0.0
    for k, e in enumerate(channel.kraus):
        b = f.conj().T @ e @ f
        rec = b[:n_rec, :n_rec]
        mask = np.ones_like(rec, dtype=bool)
        for li, blk in enumerate(decomposition.blocks):
            sl = slice(offs[li], offs[li + 1])
            mask[sl, sl] = False
            target = np.kron(blk.unitary, blk.base_kraus[k])
            diag = max(diag, float(np.linalg.norm(rec[sl, sl] - target, 2)))
        if mask.any():
            inter = max(inter, float(np.abs(rec[mask]).max()))
        if n_rec < b.shape[0]:
            lower = max(lower, float(np.linalg.norm(b[n_rec:, :n_rec], 2)))
            upper = max(upper, float(np.linalg.norm(b[:n_rec, n_rec:], 2)))
            kblk = max(kblk, float(np.linalg.norm(b[n_rec:, n_rec:], 2)))
    return BlockFormReport(completeness, inter, lower, diag, upper, kblk)
