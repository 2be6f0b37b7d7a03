"""Acceptance criteria, one test each, at the stated tolerances.

Every criterion function returns ``(passed, detail)``. Under pytest the
outcome is asserted and a one-line summary per criterion is printed at the
end of the session; run this file directly to get only the summary lines.
"""
from __future__ import annotations

import io as _stdio
import itertools
import json
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from dfskit import (
    coherence,
    equivalence_classes,
    expand,
    fixed_point_space,
    is_repeated,
    maximal_dfs,
    maximal_stationary_state,
    minimal_subspaces,
    structure_decomposition,
    verify_definition,
)
from dfskit import cli
from dfskit import io as dio
from dfskit.channel import compress, cross_map
from dfskit.constructions import (
    example_channel,
    random_block_channel,
    random_channel,
    random_irreducible_tensor,
    random_isometry_kraus,
    twisted_copy,
)
from dfskit.numerics import SubspaceBasis, random_unitary
from dfskit.oracle import check_minimality, support_agreement
from dfskit.structure import period_of, phase_difference_multiset

CORPUS_SEEDS = range(50)
RESULTS: dict[int, tuple[bool, str]] = {}


def corpus():
    """The worked example, its aperiodic variant and 50 seeded block-form channels (D <= 12)."""
    out = [("example", example_channel()), ("example-aperiodic", example_channel(aperiodic=True))]
    for s in CORPUS_SEEDS:
        out.append((f"block-{s}", random_block_channel(np.random.default_rng(s)).channel))
    return out


def run_cli(*argv) -> tuple[int, str]:
    buf = _stdio.StringIO()
    with redirect_stdout(buf):
        code = cli.main(list(argv))
    return code, buf.getvalue()


def multiset_close(got, want, atol) -> bool:
    return len(got) == len(want) and np.allclose(sorted(got), sorted(want), atol=atol, rtol=0)


def kraus_relation(channel, p, q, theta, u) -> float:
    ep, eq = compress(channel, p), compress(channel, q)
    return max(float(np.linalg.norm(a - np.exp(1j * theta) * u @ b @ u.conj().T, 2)) for a, b in zip(ep, eq))


def angle_gap(a, b, period=2 * np.pi) -> float:
    d = (a - b) % period
    return min(d, period - d)


# ---------------------------------------------------------------------------
# criteria


def criterion_1():
    t0 = time.perf_counter()
    code, out = run_cli("decompose", "--paper-example", "--mode", "full", "--json")
    elapsed = time.perf_counter() - t0
    rep = json.loads(out)
    blocks = rep["blocks"]
    shape_ok = code == 0 and len(blocks) == 1 and blocks[0]["m"] == 4 and blocks[0]["b_dim"] == 2
    phases = blocks[0]["phases"] if blocks else []
    phase_ok = multiset_close(phases, [0, 0, np.pi, np.pi], 1e-8)
    decay_ok = rep["decay_dim"] == 4
    ok = shape_ok and phase_ok and decay_ok and elapsed < 5
    detail = (f"blocks={[(b['m'], b['b_dim']) for b in blocks]} phases={phases} "
              f"period={blocks[0]['period'] if blocks else None} decay_dim={rep['decay_dim']} "
              f"time={elapsed:.2f}s; want one (4,2) block, phases {{0,0,pi,pi}}, decay 4")
    return ok, detail


def criterion_2():
    _, out = run_cli("decompose", "--paper-example", "--mode", "noiseless", "--json")
    rep = json.loads(out)
    shapes = sorted((b["m"], b["b_dim"]) for b in rep["blocks"])
    _, dfs_out = run_cli("dfs", "--paper-example", "--json")
    caps = json.loads(dfs_out)["dfs"]
    cap = [(c["dfs_qubits"], c["noiseless_qubits"]) for c in caps]
    ok = shapes == [(2, 2), (2, 2)] and rep["decay_dim"] == 4 and cap == [(2.0, 1.0)]
    return ok, f"noiseless blocks={shapes} decay_dim={rep['decay_dim']} capacity(dfs, noiseless)={cap}; want [(2,2),(2,2)], [(2,1)]"


def criterion_3():
    channels = [example_channel()]
    for s in range(30):
        channels.append(random_block_channel(np.random.default_rng(1000 + s), max_dim=12, max_blocks=2, max_m=4).channel)
    worst_f = worst_u = 0.0
    n_dfs = 0
    for ch in channels:
        dec = structure_decomposition(ch)
        for d in maximal_dfs(dec):
            r = verify_definition(ch, d, samples=100, seed=n_dfs)
            worst_f = max(worst_f, r.max_factorization_error)
            worst_u = max(worst_u, r.max_unitary_error)
            n_dfs += 1
    ok = worst_f <= 1e-8 and worst_u <= 1e-8
    return ok, f"{n_dfs} DFS blocks over {len(channels)} channels; max factorization {worst_f:.2e}, max unitary {worst_u:.2e} (limit 1e-8)"


def criterion_4():
    bad = []
    n = 60
    for s in range(n):
        bf = random_block_channel(np.random.default_rng(2000 + s))
        dec = structure_decomposition(bf.channel, seed=s)
        want = sorted((b.m, b.b_dim, phase_difference_multiset(b.phases)) for b in bf.blocks)
        got = sorted((b.m, b.b_dim, phase_difference_multiset(b.phases, b.phase_period)) for b in dec.blocks)
        same = (len(want) == len(got) and dec.decay.dim == bf.decay_dim
                and all(w[:2] == g[:2] and multiset_close(g[2], w[2], 1e-8) for w, g in zip(want, got)))
        if not same:
            bad.append(s)
    return not bad, f"{n - len(bad)}/{n} block-form instances recovered exactly" + (f"; failing seeds {bad}" if bad else "")


def criterion_5():
    # constructed coherent pairs
    rng = np.random.default_rng(5)
    eig_err = rel_err = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 5))
        theta = float(rng.uniform(0, 2 * np.pi))
        u = random_unitary(d, rng)
        # at least two Kraus operators, so that q is a minimal subspace
        eq = random_isometry_kraus(d, int(rng.integers(2, 4)), rng)
        ep = [np.exp(1j * theta) * u @ e @ u.conj().T for e in eq]
        kr = []
        for a, b in zip(ep, eq):
            e = np.zeros((2 * d, 2 * d), dtype=complex)
            e[:d, :d], e[d:, d:] = a, b
            kr.append(e)
        from dfskit import KrausChannel

        ch = KrausChannel(tuple(kr))
        p, q = SubspaceBasis(np.eye(2 * d)[:, :d]), SubspaceBasis(np.eye(2 * d)[:, d:])
        w = np.linalg.eigvals(cross_map(ch, q, p).rep)
        eig_err = max(eig_err, float(np.min(np.abs(w - np.exp(-1j * theta)))))
        v = coherence(ch, p, q)
        if not v.coherent:
            eig_err = np.inf
            continue
        rel_err = max(rel_err, kraus_relation(ch, p, q, v.theta, v.intertwiner))
    # symmetry and transitivity over the corpus
    sym_bad = trans_bad = 0
    inconsistencies = 0
    for _, ch in corpus():
        ms = minimal_subspaces(ch)
        linked = {}
        for i, j in itertools.combinations(range(len(ms)), 2):
            a, b = coherence(ch, ms[i], ms[j]), coherence(ch, ms[j], ms[i])
            linked[(i, j)] = linked[(j, i)] = a.coherent
            if a.kind != b.kind:
                sym_bad += 1
            elif a.coherent:
                rel_err = max(rel_err, kraus_relation(ch, ms[i].basis, ms[j].basis, a.theta, a.intertwiner),
                              kraus_relation(ch, ms[j].basis, ms[i].basis, b.theta, b.intertwiner))
                period = 2 * np.pi / period_of(compress(ch, ms[i].basis), 1e-9)
                if angle_gap(a.theta, -b.theta, period) > 1e-8:
                    sym_bad += 1
        for i, j, k in itertools.permutations(range(len(ms)), 3):
            if linked[(i, j)] and linked[(j, k)] and not linked[(i, k)]:
                trans_bad += 1
        try:
            equivalence_classes(ch, ms)
        except Exception:
            inconsistencies += 1
    ok = eig_err <= 1e-9 and rel_err <= 1e-8 and sym_bad == trans_bad == inconsistencies == 0
    return ok, (f"cross-map eigenvalue error {eig_err:.2e} (limit 1e-9), Kraus relation {rel_err:.2e} (limit 1e-8), "
                f"symmetry failures {sym_bad}, transitivity failures {trans_bad}, inconsistency reports {inconsistencies}")


def _non_repeated_pair(rng, bond, phys):
    while True:
        a = random_irreducible_tensor(bond, phys, rng)
        b = random_irreducible_tensor(bond, phys, rng)
        parallel = True
        for n in range(1, 5):
            va, vb = expand(a, n), expand(b, n)
            if abs(np.vdot(va, vb)) < (1 - 1e-6) * np.linalg.norm(va) * np.linalg.norm(vb):
                parallel = False
                break
        if not parallel:
            return a, b


def criterion_6():
    rng = np.random.default_rng(6)
    phase_err = u_err = expand_err = 0.0
    missed = 0
    for _ in range(50):
        bond, phys = int(rng.integers(1, 7)), int(rng.integers(2, 6))
        theta0 = float(rng.uniform(0, 2 * np.pi))
        w = random_unitary(bond, rng)
        b = random_irreducible_tensor(bond, phys, rng)
        a = twisted_copy(b, theta0, w)
        v = is_repeated(a, b)
        if not v.repeated:
            missed += 1
            continue
        phase_err = max(phase_err, angle_gap(v.theta, theta0))
        c = np.trace(v.intertwiner @ w.conj().T) / bond
        c = c / abs(c)
        u_err = max(u_err, float(np.linalg.norm(v.intertwiner @ w.conj().T - c * np.eye(bond), 2)))
        for n in range(1, 6):
            expand_err = max(expand_err, float(np.linalg.norm(expand(a, n) - np.exp(1j * n * theta0) * expand(b, n))))
    false_pos = 0
    for _ in range(50):
        a, b = _non_repeated_pair(rng, int(rng.integers(1, 7)), int(rng.integers(2, 6)))
        false_pos += is_repeated(a, b).repeated
    ok = missed == 0 and false_pos == 0 and phase_err <= 1e-8 and u_err <= 1e-8 and expand_err <= 1e-8
    return ok, (f"missed {missed}/50 repeated, accepted {false_pos}/50 non-repeated; phase error {phase_err:.2e}, "
                f"intertwiner error {u_err:.2e}, expansion error {expand_err:.2e} (limits 1e-8)")


def criterion_7():
    rng = np.random.default_rng(7)
    worst_support = 0.0
    for _ in range(50):
        ch = random_channel(int(rng.integers(1, 7)), int(rng.integers(1, 4)), rng)
        worst_support = max(worst_support, support_agreement(ch, maximal_stationary_state(ch).recurrent).discrepancy)
    minimal_bad = fix_bad = n_min = 0
    for _, ch in corpus():
        for ms in minimal_subspaces(ch):
            n_min += 1
            if check_minimality(ch, ms.basis).discrepancy > 1e-9:
                minimal_bad += 1
        if structure_decomposition(ch).fix_dimension() != fixed_point_space(ch).dim:
            fix_bad += 1
    ok = worst_support < 1e-6 and minimal_bad == 0 and fix_bad == 0
    return ok, (f"support distance max {worst_support:.2e} over 50 channels; {minimal_bad}/{n_min} minimal subspaces "
                f"fail the oracle; fix-dimension formula mismatches {fix_bad}")


def criterion_8():
    differing = []
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        for name, ch in corpus():
            path = Path(tmp) / f"{name}.json"
            dio.write_channel(path, ch)
            for mode in ("full", "noiseless"):
                first = run_cli("decompose", str(path), "--json", "--mode", mode, "--seed", "11")[1]
                second = run_cli("decompose", str(path), "--json", "--mode", mode, "--seed", "11")[1]
                if first != second:
                    differing.append(f"{name}/{mode}")
    n = 2 * len(corpus())
    return not differing, f"{n - len(differing)}/{n} report pairs byte-identical" + (f"; differing {differing}" if differing else "")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}

TITLES = {
    1: "worked example, full decomposition",
    2: "worked example, noiseless mode and capacity",
    3: "DFS definition on product states",
    4: "block-form roundtrip",
    5: "coherence biconditional, symmetry, transitivity",
    6: "repeated MPS tensors",
    7: "oracle agreement",
    8: "determinism",
}


def summary_line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"criterion {n} [{'PASS' if ok else 'FAIL'}] {TITLES[n]}: {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    RESULTS[n] = CRITERIA[n]()
    ok, detail = RESULTS[n]
    assert ok, summary_line(n)


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        RESULTS[n] = CRITERIA[n]()
        print(summary_line(n), flush=True)
