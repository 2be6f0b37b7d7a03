import numpy as np
import pytest

from dfskit import (
    KrausChannel,
    coherence,
    equivalence_classes,
    fixed_point_space,
    is_irreducible,
    minimal_subspaces,
    noiseless_decomposition,
    phase_align,
    restrict,
    structure_decomposition,
    verify_block_form,
)
from dfskit.channel import compress, cross_map, invariance_residuals
from dfskit.constructions import (
    BlockSpec,
    block_form_channel,
    random_block_channel,
    random_block_spec,
    random_channel,
    random_isometry_kraus,
)
from dfskit.errors import NotCPTPError, ToleranceInconsistency
from dfskit.numerics import SubspaceBasis, random_unitary
from dfskit.oracle import check_minimality
from dfskit.structure import (
    CONTINUOUS,
    NONE,
    STATIONARY,
    MinimalSubspace,
    StructureDecomposition,
    classes_from_verdicts,
    phase_clusters,
    period_of,
    phase_difference_multiset,
)

from conftest import block_diag_channel, diag_unitary_channel, sector


def sectors():
    return [MinimalSubspace(sector(x), x) for x in range(4)]


def kraus_relation(channel, p, q, theta, u):
    ep = compress(channel, p)
    eq = compress(channel, q)
    return max(np.linalg.norm(a - np.exp(1j * theta) * u @ b @ u.conj().T, 2) for a, b in zip(ep, eq))


def truth(bf):
    return sorted((b.m, b.b_dim, phase_difference_multiset(b.phases)) for b in bf.blocks)


def same_invariants(got, want, atol=1e-8):
    if len(got) != len(want):
        return False
    for a, b in zip(sorted(got), sorted(want)):
        if a[:2] != b[:2] or len(a[2]) != len(b[2]) or not np.allclose(a[2], b[2], atol=atol):
            return False
    return True


class TestMinimalSubspaces:
    def test_irreducible(self, rng):
        ch = random_channel(4, 3, rng)
        ms = minimal_subspaces(ch)
        assert len(ms) == 1 and ms[0].dim == 4

    def test_example(self, example):
        ms = minimal_subspaces(example)
        assert [m.dim for m in ms] == [2, 2, 2, 2]
        frame = np.concatenate([m.basis.columns for m in ms], axis=1)
        assert np.linalg.norm(frame.conj().T @ frame - np.eye(8)) < 1e-9
        for m in ms:
            assert invariance_residuals(example, m.basis).max() < 1e-9
            assert is_irreducible(restrict(example, m.basis, 1e-9))
        # the spanned space is H_A (x) span{|0>,|1>}_B
        rec = np.concatenate([sector(x).columns for x in range(4)], axis=1)
        assert np.linalg.norm(frame @ frame.conj().T - rec @ rec.conj().T) < 1e-9

    def test_example_sectors_are_minimal(self, example):
        for x in range(4):
            assert check_minimality(example, sector(x)).discrepancy == 0

    def test_two_projections(self):
        ms = minimal_subspaces(KrausChannel((np.diag([1, 0]), np.diag([0, 1]))))
        assert [m.dim for m in ms] == [1, 1]

    def test_non_cptp(self):
        with pytest.raises(NotCPTPError):
            minimal_subspaces(KrausChannel((0.5 * np.eye(2),)))


class TestCoherence:
    def test_identical_blocks(self, rng):
        e = random_isometry_kraus(3, 2, rng)
        ch = block_diag_channel(e, e)
        ms = minimal_subspaces(ch)
        v = coherence(ch, ms[0], ms[1])
        assert v.kind == STATIONARY and v.theta == 0.0
        assert kraus_relation(ch, ms[0].basis, ms[1].basis, 0.0, v.intertwiner) < 1e-9
        # with the coordinate blocks themselves the intertwiner is the identity
        p = SubspaceBasis(np.eye(6)[:, :3])
        q = SubspaceBasis(np.eye(6)[:, 3:])
        v = coherence(ch, p, q)
        assert v.kind == STATIONARY and np.allclose(v.intertwiner, np.eye(3))

    def test_example_sign_flip(self, example):
        s = sectors()
        v = coherence(example, s[0], s[2])
        # E_{k,0} = -E_{k,2}, i.e. theta = pi with U = I ...
        assert kraus_relation(example, sector(0), sector(2), np.pi, np.eye(2)) < 1e-12
        # ... and equally theta = 0 with U = Z, because the flip anticommutes
        # with Z; the canonical (smallest-phase) eigenvalue is the latter
        assert kraus_relation(example, sector(0), sector(2), 0.0, np.diag([1, -1])) < 1e-12
        assert v.kind == STATIONARY
        assert kraus_relation(example, sector(0), sector(2), v.theta, v.intertwiner) < 1e-9

    def test_example_sign_flip_aperiodic(self, example_aperiodic):
        s = sectors()
        v = coherence(example_aperiodic, s[0], s[2])
        assert v.kind == CONTINUOUS and v.theta == pytest.approx(np.pi, abs=1e-9)
        assert np.allclose(v.intertwiner, np.eye(2), atol=1e-9)

    def test_example_identical_sectors(self, example):
        v = coherence(example, sectors()[0], sectors()[1])
        assert v.kind == STATIONARY and np.allclose(v.intertwiner, np.eye(2), atol=1e-9)

    def test_dimension_mismatch_is_none(self):
        ch = block_diag_channel([np.eye(1)], [np.eye(2)])
        p = SubspaceBasis(np.eye(3)[:, :1])
        q = SubspaceBasis(np.eye(3)[:, 1:])
        assert coherence(ch, p, q).kind == NONE

    def test_symmetry(self, rng):
        for seed in range(8):
            bf = random_block_channel(np.random.default_rng(seed))
            ms = minimal_subspaces(bf.channel, seed=seed)
            for i in range(len(ms)):
                for j in range(i + 1, len(ms)):
                    a = coherence(bf.channel, ms[i], ms[j])
                    b = coherence(bf.channel, ms[j], ms[i])
                    assert a.kind == b.kind
                    if a.coherent:
                        # phases negate, up to the period of the base channel
                        period = 2 * np.pi / period_of(compress(bf.channel, ms[i].basis), 1e-9)
                        d = (a.theta + b.theta) % period
                        assert min(d, period - d) < 1e-8

    def test_constructed_eigenvalue(self, rng):
        # E_{k,p} = exp(i theta) U E_{k,q} U^dagger: the map E_{q,p} has exp(-i theta)
        for _ in range(10):
            theta = rng.uniform(-np.pi, np.pi)
            u = random_unitary(3, rng)
            eq = random_isometry_kraus(3, 3, rng)
            ep = [np.exp(1j * theta) * u @ e @ u.conj().T for e in eq]
            ch = block_diag_channel(ep, eq)
            p = SubspaceBasis(np.eye(6)[:, :3])
            q = SubspaceBasis(np.eye(6)[:, 3:])
            w = np.linalg.eigvals(cross_map(ch, q, p).rep)
            assert np.min(np.abs(w - np.exp(-1j * theta))) < 1e-9
            v = coherence(ch, p, q)
            assert v.coherent and kraus_relation(ch, p, q, v.theta, v.intertwiner) < 1e-8


class TestClasses:
    def test_identical_blocks_one_class(self, rng):
        e = random_isometry_kraus(2, 2, rng)
        ch = block_diag_channel(e, e, e)
        assert equivalence_classes(ch, minimal_subspaces(ch)) == [[0, 1, 2]]

    def test_example_one_class(self, example):
        assert equivalence_classes(example, sectors()) == [[0, 1, 2, 3]]

    def test_unrelated_blocks(self, rng):
        ch = block_diag_channel(random_isometry_kraus(2, 2, rng), random_isometry_kraus(2, 2, rng))
        p = SubspaceBasis(np.eye(4)[:, :2])
        q = SubspaceBasis(np.eye(4)[:, 2:])
        rho = np.abs(np.linalg.eigvals(cross_map(ch, p, q).rep)).max()
        assert rho < 1 - 1e-3
        assert equivalence_classes(ch, [MinimalSubspace(p, 0), MinimalSubspace(q, 1)]) == [[0], [1]]

    def test_transitivity_violation_reported(self):
        from dfskit.structure import CoherenceVerdict

        yes, no = CoherenceVerdict(STATIONARY, 0.0, np.eye(1)), CoherenceVerdict(NONE)
        with pytest.raises(ToleranceInconsistency):
            classes_from_verdicts(3, {(0, 1): yes, (1, 2): yes, (0, 2): no})


class TestPhaseAlign:
    def test_single(self, example):
        out = phase_align(example, sectors(), [0])
        assert [a.phase for a in out] == [0.0]

    def test_example_aperiodic(self, example_aperiodic):
        out = phase_align(example_aperiodic, sectors(), [0, 1, 2, 3])
        assert np.allclose([a.phase for a in out], [0, 0, np.pi, np.pi], atol=1e-9)
        # after alignment every member's Kraus set equals the anchor's up to U
        base = out[0].kraus
        for a in out:
            for x, y in zip(a.kraus, base):
                assert np.linalg.norm(x - a.intertwiner @ y @ a.intertwiner.conj().T) < 1e-9

    def test_synthetic_pi_over_3(self, rng):
        spec = random_block_spec(2, 2, 3, rng, phases=(0.0, np.pi / 3))
        bf = block_form_channel([spec], 1, rng)
        dec = structure_decomposition(bf.channel)
        assert len(dec.blocks) == 1
        assert np.allclose(dec.blocks[0].phases, [0, np.pi / 3], atol=1e-9)


class TestDecomposition:
    def test_irreducible(self, rng):
        ch = random_channel(3, 2, rng)
        dec = structure_decomposition(ch)
        assert len(dec.blocks) == 1
        b = dec.blocks[0]
        assert (b.m, b.b_dim, b.phases, dec.decay.dim) == (1, 3, (0.0,), 0)

    def test_example(self, example):
        dec = structure_decomposition(example)
        assert [(b.m, b.b_dim) for b in dec.blocks] == [(4, 2)]
        assert dec.decay.dim == 4
        b = dec.blocks[0]
        # period-2 base channel: phases are defined modulo pi
        assert b.period == 2
        assert np.allclose(np.asarray(b.phases) % np.pi, 0, atol=1e-9)
        assert dec.fix_dimension() == fixed_point_space(example).dim == 16

    def test_example_aperiodic(self, example_aperiodic):
        dec = structure_decomposition(example_aperiodic)
        assert [(b.m, b.b_dim) for b in dec.blocks] == [(4, 2)]
        assert np.allclose(sorted(dec.blocks[0].phases), [0, 0, np.pi, np.pi], atol=1e-8)
        assert dec.decay.dim == 4
        assert dec.fix_dimension() == fixed_point_space(example_aperiodic).dim == 8

    def test_two_blocks(self, rng):
        specs = [random_block_spec(2, 2, 3, rng), random_block_spec(3, 1, 3, rng)]
        bf = block_form_channel(specs, 2, rng)
        dec = structure_decomposition(bf.channel)
        assert same_invariants(dec.invariants(), truth(bf))
        assert dec.decay.dim == 2

    def test_base_is_irreducible_and_frame_complete(self, rng):
        bf = random_block_channel(rng)
        dec = structure_decomposition(bf.channel)
        f = dec.frame()
        assert np.linalg.norm(f.conj().T @ f - np.eye(bf.channel.dim)) < 1e-9
        assert sum(b.m * b.b_dim for b in dec.blocks) + dec.decay.dim == bf.channel.dim
        for b in dec.blocks:
            assert is_irreducible(KrausChannel(b.base_kraus))
            assert b.phases[0] == 0.0

    def test_block_slices_are_minimal(self, rng):
        for seed in range(5):
            bf = random_block_channel(np.random.default_rng(seed))
            dec = structure_decomposition(bf.channel)
            for b in dec.blocks:
                for p in range(b.m):
                    cols = b.W.columns[:, p * b.b_dim:(p + 1) * b.b_dim]
                    assert check_minimality(bf.channel, SubspaceBasis(cols)).discrepancy == 0

    def test_pure_state_slices_are_minimal(self, rng):
        bf = block_form_channel([random_block_spec(3, 2, 3, rng, phases=(0.0, 0.0, 0.0))], 1, rng)
        dec = structure_decomposition(bf.channel)
        b = dec.blocks[0]
        w = b.W.columns.reshape(bf.channel.dim, b.m, b.b_dim)
        for _ in range(5):
            psi = rng.standard_normal(b.m) + 1j * rng.standard_normal(b.m)
            psi /= np.linalg.norm(psi)
            basis = SubspaceBasis(np.einsum("dmb,m->db", w, psi))
            assert invariance_residuals(bf.channel, basis).max() < 1e-9
            assert is_irreducible(restrict(bf.channel, basis, 1e-9))

    def test_gauge_invariance_across_seeds(self):
        for seed in range(5):
            bf = random_block_channel(np.random.default_rng(100 + seed))
            a = structure_decomposition(bf.channel, seed=0).invariants()
            b = structure_decomposition(bf.channel, seed=7).invariants()
            assert same_invariants(a, b)

    def test_bad_mode(self, example):
        with pytest.raises(ValueError):
            structure_decomposition(example, mode="partial")


class TestNoiseless:
    def test_example(self, example):
        dec = noiseless_decomposition(example)
        # the stationary coherences already connect all four sectors
        assert [(b.m, b.b_dim) for b in dec.blocks] == [(4, 2)]

    def test_example_aperiodic(self, example_aperiodic):
        dec = noiseless_decomposition(example_aperiodic)
        assert [(b.m, b.b_dim) for b in dec.blocks] == [(2, 2), (2, 2)]
        assert dec.decay.dim == 4
        assert all(p == 0 for b in dec.blocks for p in b.phases)

    def test_irreducible(self, rng):
        dec = noiseless_decomposition(random_channel(3, 2, rng))
        assert [b.m for b in dec.blocks] == [1]

    def test_unitary_diag(self):
        ch = diag_unitary_channel([0, np.pi])
        assert [b.m for b in noiseless_decomposition(ch).blocks] == [1, 1]
        full = structure_decomposition(ch)
        assert [b.m for b in full.blocks] == [2]
        assert np.allclose(full.blocks[0].phases, [0, np.pi])


class TestVerifyBlockForm:
    def test_example(self, example):
        dec = structure_decomposition(example)
        assert verify_block_form(example, dec).max_constrained <= 1e-9

    def test_identity(self):
        ch = KrausChannel((np.eye(2),))
        dec = structure_decomposition(ch)
        assert verify_block_form(ch, dec).max_constrained < 1e-12

    def test_swapped_columns(self, example_aperiodic):
        dec = structure_decomposition(example_aperiodic)
        b = dec.blocks[0]
        cols = b.W.columns.copy()
        # first vectors of two minimal subspaces with different phases
        j = int(np.argmax(np.abs(np.asarray(b.phases) - b.phases[0]) > 1)) * b.b_dim
        cols[:, [0, j]] = cols[:, [j, 0]]
        from dataclasses import replace

        bad = StructureDecomposition(dec.dim, (replace(b, W=SubspaceBasis(cols)),), dec.decay)
        assert verify_block_form(example_aperiodic, bad).max_constrained >= 0.5


class TestFixFormula:
    def test_corpus(self):
        for seed in range(30):
            bf = random_block_channel(np.random.default_rng(seed), max_dim=10)
            dec = structure_decomposition(bf.channel)
            assert dec.fix_dimension() == fixed_point_space(bf.channel).dim

    def test_phase_clusters_wrap(self):
        assert phase_clusters([0.0, 2 * np.pi - 1e-12, np.pi], 2 * np.pi, 1e-9) == [[1, 0], [2]]

    def test_phase_clusters_modulo_period(self):
        assert len(phase_clusters([0.0, np.pi], np.pi, 1e-9)) == 1
