"""Command-line front end.

Exit codes: 0 success, 1 semantic failure (validation or verification),
2 usage or parse error. Reports go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import io
from .channel import KrausChannel, is_cptp
from .constructions import example_channel
from .dfs import capacity_report, maximal_dfs, verify_definition
from .errors import CapExceededError, DfsKitError, NotIrreducibleError
from .mps import basis_dedup, expand, is_irreducible_tensor, is_repeated, mps_sum
from .numerics import DEFAULT_TOL, SubspaceBasis
from .oracle import check_minimality, decay_blocks, reconstruct_channel, support_agreement
from .structure import StructureDecomposition, structure_decomposition, verify_block_form

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PHASE_DECIMALS = 9
MAX_DENOMINATOR = 12
VERIFY_SAMPLES = 100
MPS_CHECK_N = 5


class UsageError(Exception):
    pass


def default_tol() -> float:
    raw = os.environ.get("DFSKIT_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"DFSKIT_TOL={raw!r} is not a number") from None
    if not tol > 0:
        raise UsageError(f"DFSKIT_TOL must be positive, got {raw!r}")
    return tol


def pi_fraction(phase: float, tol: float) -> str | None:
    """``"p*pi/q"``-style label when ``phase`` is within ``tol`` of ``p/q * pi`` with ``q <= 12``."""
    x = Fraction(phase / np.pi).limit_denominator(MAX_DENOMINATOR)
    if abs(float(x) * np.pi - phase) > tol:
        return None
    p, q = x.numerator, x.denominator
    if p == 0:
        return "0"
    num = "pi" if p == 1 else ("-pi" if p == -1 else f"{p}pi")
    return num if q == 1 else f"{num}/{q}"


def fmt_residual(x: float, tol: float) -> str:
    """Residuals below ``tol`` are rounding noise; print them as a fixed bucket."""
    return f"<{tol:.0e}" if x < tol else f"{x:.3e}"


def decomposition_report(dec: StructureDecomposition) -> dict:
    caps = capacity_report(dec)
    blocks = []
    for b, cap in zip(dec.blocks, caps):
        phases = [round(float(p), PHASE_DECIMALS) + 0.0 for p in b.phases]
        blocks.append({
            "m": b.m,
            "b_dim": b.b_dim,
            "phases": phases,
            "phases_pi": [pi_fraction(p, max(dec.tol, 10.0 ** -PHASE_DECIMALS)) for p in b.phases],
            "period": b.period,
            "fix_dim_contribution": b.fix_dim_contribution(dec.tol),
            "dfs_qubits": round(cap["dfs_qubits"], PHASE_DECIMALS),
            "noiseless_qubits": round(cap["noiseless_qubits"], PHASE_DECIMALS),
        })
    return {
        "dim": dec.dim,
        "mode": dec.mode,
        "blocks": blocks,
        "decay_dim": dec.decay.dim,
        "fix_dim": dec.fix_dimension(),
        "tolerance": dec.tol,
        "seed": dec.seed,
        "residuals": {k: fmt_residual(v, dec.tol) for k, v in sorted(dec.residuals.items())},
    }


def _qubits(x: float) -> str:
    q = round(x, 6)
    n = int(q) if q == int(q) else q
    return f"{n} qubit" + ("" if n == 1 else "s")


def _text_report(rep: dict) -> str:
    lines = [f"dimension {rep['dim']}, mode {rep['mode']}, {len(rep['blocks'])} block(s), "
             f"decay dimension {rep['decay_dim']}, fix dimension {rep['fix_dim']}"]
    for i, b in enumerate(rep["blocks"]):
        labels = [lab if lab is not None else f"{p:.9f}" for p, lab in zip(b["phases"], b["phases_pi"])]
        lines.append(f"block {i}: C^{b['m']} (x) B^{b['b_dim']}, phases [{', '.join(labels)}], "
                     f"period {b['period']}, fix contribution {b['fix_dim_contribution']}")
    lines.append("residuals: " + ", ".join(f"{k}={v}" for k, v in rep["residuals"].items()))
    return "\n".join(lines)


def _emit(obj, as_json: bool, text: str) -> None:
    if as_json:
        sys.stdout.write(json.dumps(obj, indent=2) + "\n")
    else:
        sys.stdout.write(text + "\n")


def _load_channel(args) -> KrausChannel:
    if args.paper_example:
        if args.channel is not None:
            raise UsageError("give either a channel file or --paper-example, not both")
        return example_channel()
    if args.channel is None:
        raise UsageError("a channel file (or --paper-example) is required")
    return io.read_channel(args.channel)


def _decompose(args, ch: KrausChannel) -> StructureDecomposition:
    return structure_decomposition(ch, args.tol, args.seed, mode=args.mode)


def verify_decomposition(ch: KrausChannel, dec: StructureDecomposition, samples: int = VERIFY_SAMPLES) -> dict:
    """Independent checks behind ``--verify``; every value should be near zero."""
    out = {}
    out["block_form"] = verify_block_form(ch, dec, dec.tol).max_constrained
    worst = 0.0
    for b in dec.blocks:
        for p in range(b.m):
            cols = b.W.columns[:, p * b.b_dim:(p + 1) * b.b_dim]
            worst = max(worst, check_minimality(ch, SubspaceBasis(cols), dec.tol).discrepancy)
    out["minimality"] = worst
    rec_cols = [b.W.columns for b in dec.blocks]
    rec = SubspaceBasis(np.concatenate(rec_cols, axis=1)) if rec_cols else SubspaceBasis.empty(ch.dim)
    out["stationary_support"] = support_agreement(ch, rec).discrepancy
    out["reconstruction"] = reconstruct_channel(dec, decay_blocks(ch, dec), ch).residual
    fact = unit = 0.0
    for d in maximal_dfs(dec):
        r = verify_definition(ch, d, samples=samples, seed=dec.seed, tol=dec.tol)
        fact = max(fact, r.max_factorization_error)
        unit = max(unit, r.max_unitary_error)
    out["dfs_factorization"] = fact
    out["dfs_unitary"] = unit
    return out


def verify_limit(ch: KrausChannel, tol: float) -> float:
    return max(1e-8, 10 * tol * max(ch.kraus_norm(), 1.0))


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    ch = _load_channel(args)
    rep = is_cptp(ch, args.tol)
    obj = {"dim": ch.dim, "n_kraus": ch.n_kraus, "trace_preserving": rep.trace_preserving,
           "completely_positive": rep.completely_positive, "defect": rep.defect, "tolerance": args.tol}
    verdict = "trace preserving" if rep.trace_preserving else "NOT trace preserving"
    _emit(obj, args.json, f"dimension {ch.dim}, {ch.n_kraus} Kraus operator(s): {verdict}, "
                          f"defect {rep.defect:.6g} (tol {args.tol:g}); completely positive (Kraus form)")
    return EXIT_OK if rep.trace_preserving else EXIT_FAIL


def cmd_decompose(args) -> int:
    ch = _load_channel(args)
    dec = _decompose(args, ch)
    rep = decomposition_report(dec)
    status = EXIT_OK
    text = _text_report(rep)
    if args.verify:
        checks = verify_decomposition(ch, dec)
        limit = verify_limit(ch, args.tol)
        failed = sorted(k for k, v in checks.items() if v > limit)
        rep["verification"] = {
            "checks": {k: fmt_residual(v, args.tol) for k, v in sorted(checks.items())},
            "limit": f"{limit:.3e}",
            "passed": not failed,
        }
        text += "\nverification: " + ", ".join(f"{k}={fmt_residual(v, args.tol)}" for k, v in sorted(checks.items()))
        text += f"\nverification {'passed' if not failed else 'FAILED: ' + ', '.join(failed)}"
        if failed:
            print(f"verification failed: {', '.join(failed)} above {limit:.3e}", file=sys.stderr)
            status = EXIT_FAIL
    _emit(rep, args.json, text)
    return status


def cmd_dfs(args) -> int:
    ch = _load_channel(args)
    dec = _decompose(args, ch)
    caps = capacity_report(dec)
    rows = []
    lines = []
    for d, cap in zip(maximal_dfs(dec), caps):
        rows.append({"block": d.block_index, "subsystem_dim": d.subsystem_dim,
                     "cosubsystem_dim": d.cosubsystem_dim,
                     "unitary_phases": [round(float(p), PHASE_DECIMALS) + 0.0 for p in dec.blocks[d.block_index].phases],
                     "dfs_qubits": round(cap["dfs_qubits"], PHASE_DECIMALS),
                     "noiseless_qubits": round(cap["noiseless_qubits"], PHASE_DECIMALS)})
        lines.append(f"DFS: C^{d.subsystem_dim}, store {_qubits(cap['dfs_qubits'])} "
                     f"(noiseless: {_qubits(cap['noiseless_qubits'])})")
    if not rows:
        lines.append("no recurrent subspace: no DFS")
    _emit({"dfs": rows, "decay_dim": dec.decay.dim, "tolerance": args.tol, "seed": args.seed},
          args.json, "\n".join(lines))
    return EXIT_OK


def _tensor(path):
    return io.read_tensor(path).tensor


def cmd_mps_repeated(args) -> int:
    a, b = _tensor(args.a), _tensor(args.b)
    v = is_repeated(a, b, args.tol)
    obj = {"repeated": v.repeated}
    if v.repeated:
        lab = pi_fraction(v.theta, max(args.tol, 1e-12))
        obj["theta"] = v.theta
        obj["theta_pi"] = lab
        text = f"repeated, theta={v.theta:.10f}" + (f" (={lab})" if lab else "")
        if args.intertwiner_out:
            io._dump(args.intertwiner_out, {"intertwiner": io.encode_matrix(v.intertwiner)})
            obj["intertwiner_file"] = args.intertwiner_out
            text += f", U written to {args.intertwiner_out}"
    else:
        text = "not repeated"
    _emit(obj, args.json, text)
    return EXIT_OK


def cmd_mps_irreducible(args) -> int:
    t = _tensor(args.a)
    ok = is_irreducible_tensor(t, args.tol)
    _emit({"irreducible": ok}, args.json, "irreducible" if ok else "reducible")
    return EXIT_OK


def cmd_mps_basis(args) -> int:
    items = io.read_tensor_list(args.list)
    reps = basis_dedup(items, args.tol)
    rows = []
    lines = [f"{len(items)} tensor(s) -> {len(reps)} representative(s)"]
    for i, r in enumerate(reps):
        rows.append({"bond_dim": r.tensor.bond_dim, "phys_dim": r.tensor.phys_dim,
                     "weights": [io.encode_complex(w) for w in r.weights]})
        ws = ", ".join(f"{w.real:.9f}{w.imag:+.9f}j" for w in r.weights)
        lines.append(f"representative {i}: D={r.tensor.bond_dim}, weights [{ws}]")
    # the basis must reproduce the original weighted MPS family
    worst = 0.0
    checked = []
    for n in range(1, args.check_n + 1):
        try:
            ref = mps_sum(items, n)
            got = mps_sum(reps, n)
        except CapExceededError:
            break
        scale = max(float(np.linalg.norm(ref)), 1.0)
        worst = max(worst, float(np.linalg.norm(ref - got)) / scale)
        checked.append(n)
    limit = max(1e-8, 10 * args.tol)
    passed = worst <= limit
    lines.append(f"mps_sum cross-check n<={max(checked) if checked else 0}: "
                 f"{'passed' if passed else 'FAILED'} (relative error {worst:.3e})")
    _emit({"representatives": rows, "cross_check": {"n": checked, "relative_error": fmt_residual(worst, args.tol),
                                                     "passed": passed}},
          args.json, "\n".join(lines))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_mps_expand(args) -> int:
    t = io.read_tensor(args.a)
    w = t.weights[0]
    v = (w ** args.n) * expand(t.tensor, args.n, args.cap)
    obj = {"n": args.n, "length": int(v.size), "vector": [io.encode_complex(x) for x in v]}
    if args.out:
        io._dump(args.out, obj)
        _emit({"n": args.n, "length": int(v.size), "file": args.out}, args.json,
              f"expanded n={args.n}: {v.size} amplitudes written to {args.out}")
    else:
        sys.stdout.write(json.dumps(obj) + "\n")
    return EXIT_OK


def cmd_example(args) -> int:
    ch = example_channel(aperiodic=args.aperiodic)
    if args.out:
        io.write_channel(args.out, ch)
    else:
        sys.stdout.write(json.dumps(io.channel_to_json(ch)) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser(tol: float) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dfskit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, channel=True):
        sp.add_argument("--tol", type=_positive_float, default=tol,
                        help="numerical tolerance (default: $DFSKIT_TOL or 1e-9)")
        fmt = sp.add_mutually_exclusive_group()
        fmt.add_argument("--json", action="store_true", help="machine-readable JSON output")
        fmt.add_argument("--text", dest="json", action="store_false", help="human-readable output (default)")
        if channel:
            sp.add_argument("channel", nargs="?", help="channel JSON file")
            sp.add_argument("--paper-example", action="store_true",
                            help="use the built-in 12-dimensional worked example instead of a file")

    sp = sub.add_parser("validate", help="check trace preservation")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    for name, func, hlp in (("decompose", cmd_decompose, "block decomposition"),
                            ("dfs", cmd_dfs, "maximal decoherence-free subsystems")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--seed", type=int, default=0, help="seed for the randomized algebra step")
        sp.add_argument("--mode", choices=("full", "noiseless"), default="full")
        if name == "decompose":
            sp.add_argument("--verify", action="store_true", help="run the independent checks too")
        sp.set_defaults(func=func)

    mp = sub.add_parser("mps", help="matrix product state tools")
    msub = mp.add_subparsers(dest="mps_command", required=True)
    sp = msub.add_parser("repeated", help="are two irreducible tensors repeated?")
    common(sp, channel=False)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--intertwiner-out", help="write U to this JSON file")
    sp.set_defaults(func=cmd_mps_repeated)
    sp = msub.add_parser("irreducible", help="irreducibility of a tensor")
    common(sp, channel=False)
    sp.add_argument("a")
    sp.set_defaults(func=cmd_mps_irreducible)
    sp = msub.add_parser("basis", help="merge repeated tensors of a list")
    common(sp, channel=False)
    sp.add_argument("list")
    sp.add_argument("--check-n", type=int, default=MPS_CHECK_N, help="cross-check the MPS sum up to this n")
    sp.set_defaults(func=cmd_mps_basis)
    sp = msub.add_parser("expand", help="dense MPS vector")
    common(sp, channel=False)
    sp.add_argument("a")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--cap", type=int, default=10 ** 6)
    sp.add_argument("--out", help="write the vector here instead of stdout")
    sp.set_defaults(func=cmd_mps_expand)

    sp = sub.add_parser("example", help="write the worked example channel as JSON")
    sp.add_argument("--aperiodic", action="store_true")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    try:
        tol = default_tol()
    except UsageError as exc:
        print(f"dfskit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser(tol)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, io.ParseError, CapExceededError) as exc:
        print(f"dfskit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotIrreducibleError as exc:
        print(f"dfskit: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (DfsKitError, ValueError) as exc:
        print(f"dfskit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
