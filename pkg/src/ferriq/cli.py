"""Command-line front end.

Exit codes:
    0: success.
    2: invalid input, unreadable file or a cap exceeded.
    3: a requested verification failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from collections.abc import Sequence

import numpy as np

from . import __version__
from .ffft import (
    build_ffft_1d,
    build_ffft_2d,
    catalysis_report,
    dft_matrix,
    djw_interleave_cost,
    fswap_interleave_cost,
)
from .ir import CircuitFormatError, CompiledCircuit, circuit_to_json, cost_report, deserialize
from .jw import OrderingMap, Permutation
from .majorana import compile_majorana_permutation, majorana_targets
from .perm import compile_permutation, crossing_spec
from .verify import (
    OracleCapError,
    channel_matches,
    gaussian_unitary,
    mode_transfer,
    verify_majorana_images,
    verify_permutation_circuit,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VERIFY = 3

_OUTPUT_KEYS = {"out", "report", "dump_parity", "plot", "func", "cmd", "syk_cmd"}


class InputError(ValueError):
    """User input the CLI rejects with exit code 2."""


# ---------------------------------------------------------------------------
# helpers


def _round_floats(obj, digits: int = 12):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    return obj


def run_info(args: argparse.Namespace) -> dict:
    """Version, seed and a hash of every setting that affects the result."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _OUTPUT_KEYS}
    text = json.dumps(cfg, sort_keys=True, default=str)
    return {
        "tool": "ferriq",
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config_hash": hashlib.sha256(text.encode()).hexdigest()[:16],
        "config": cfg,
    }


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ferriq-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2, sort_keys=True) + "\n"


def _emit(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def parse_perm(text: str | None, path: str | None) -> Permutation:
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
    if not text:
        raise InputError("a permutation is required (--perm or --perm-file)")
    try:
        return Permutation.from_string(text)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _circuit_artifact(c: CompiledCircuit, info: dict) -> dict:
    obj = circuit_to_json(c)
    obj["run"] = info
    return obj


def _report(c: CompiledCircuit, info: dict, extra: dict | None = None) -> dict:
    rep = {"run": info, "cost": cost_report(c).to_dict(), "metadata": c.metadata}
    if extra:
        rep.update(extra)
    return rep


def _verification(rep) -> dict:
    d = rep.to_dict()
    d.pop("timings", None)
    return d


def _finish(args, c: CompiledCircuit, info: dict, extra: dict, ok: bool) -> int:
    if getattr(args, "materialize_swaps", False):
        c = c.materialize_swaps()
    _emit(args.out, dump_json(_circuit_artifact(c, info)))
    if args.report:
        _emit(args.report, dump_json(_report(c, info, extra)))
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# commands


def cmd_compile_perm(args: argparse.Namespace) -> int:
    p = parse_perm(args.perm, args.perm_file)
    info = run_info(args)
    c = compile_permutation(p, args.strategy, args.interleave_method, args.cascade_mode)
    extra, ok = {}, True
    if args.verify:
        rep = verify_permutation_circuit(c, None, OrderingMap(list(p)))
        extra["verification"] = _verification(rep)
        ok = rep.passed
    if args.dump_parity:
        spec = crossing_spec(p)
        _emit(args.dump_parity, dump_json({"run": info, "cz_pairs": spec.pairs.to_json(), "zmask": spec.zmask}))
    return _finish(args, c, info, extra, ok)


def cmd_compile_mperm(args: argparse.Namespace) -> int:
    p = parse_perm(args.perm, args.perm_file)
    if p.n % 2:
        raise InputError("a Majorana permutation needs an even number of entries")
    info = run_info(args)
    c = compile_majorana_permutation(p, args.strategy, args.interleave_method, args.cascade_mode)
    extra, ok = {}, True
    if args.verify:
        src, tgt = majorana_targets(p)
        rep = verify_majorana_images(c, src, tgt)
        extra["verification"] = _verification(rep)
        ok = rep.passed
    return _finish(args, c, info, extra, ok)


def cmd_compile_ffft(args: argparse.Namespace) -> int:
    info = run_info(args)
    if args.n < 1:
        raise InputError("--n must be at least 1")
    if args.dim == 1:
        c, _ = build_ffft_1d(args.n, args.interleave_method, args.cascade_mode)
        target = dft_matrix(1 << args.n)
    else:
        L = 1 << args.n
        c, _ = build_ffft_2d(L, args.interleave_method, args.cascade_mode)
        target = np.kron(dft_matrix(L), dft_matrix(L))
    extra, ok = {}, True
    if args.verify or args.verify_sector is not None:
        err = float(np.max(np.abs(mode_transfer(c).U - target)))
        extra["transfer_max_error"] = err
        ok = err <= 1e-10
    if args.verify_sector is not None:
        k = args.verify_sector
        n = c.n_system
        if not 0 <= k <= n:
            raise InputError(f"sector {k} out of range for {n} modes")
        cols = [s for s in range(1 << n) if bin(s).count("1") == k]
        inputs = np.zeros((1 << n, len(cols)), dtype=complex)
        inputs[cols, range(len(cols))] = 1.0
        rng = np.random.default_rng(args.seed)
        good = all(channel_matches(c, gaussian_unitary(target), 1e-9, inputs, rng) for _ in range(args.samples))
        extra["sector"] = {"particles": k, "sampled_branches": args.samples, "pass": good}
        ok = ok and good
    return _finish(args, c, info, extra, ok)


def _load_instance(path: str):
    from .syk import SykInstance

    try:
        with open(path, encoding="utf-8") as fh:
            return SykInstance.from_dict(json.load(fh))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot load SYK instance {path}: {exc}") from exc


def _sample_instance(args):
    from .syk import sample_complete_syk, sample_interleave_syk, sample_sparse_syk

    if args.kind == "sparse":
        return sample_sparse_syk(args.n, args.d, args.J, args.seed)
    if args.kind == "interleave":
        return sample_interleave_syk(args.n, args.rounds, args.J, args.seed)
    return sample_complete_syk(args.n, args.J, args.seed)


def cmd_syk_sample(args: argparse.Namespace) -> int:
    info = run_info(args)
    inst = _sample_instance(args)
    obj = inst.to_dict()
    obj["run"] = info
    _emit(args.out, dump_json(obj))
    return EXIT_OK


def cmd_syk_compile(args: argparse.Namespace) -> int:
    from .syk import color_interactions, compile_trotter_cycle, interleave_schedule

    info = run_info(args)
    inst = _load_instance(args.instance) if args.instance else _sample_instance(args)
    sched = interleave_schedule(inst) if inst.kind == "interleave" and inst.steps else color_interactions(inst)
    c = compile_trotter_cycle(
        sched, args.dt, close=not args.open, interleave_method=args.interleave_method, cascade_mode=args.cascade_mode
    )
    cost = cost_report(c)
    extra = {
        "classes": sched.n_classes,
        "clifford_per_majorana": cost.clifford_count / inst.n_majorana,
    }
    return _finish(args, c, info, extra, True)


def cmd_syk_sff(args: argparse.Namespace) -> int:
    from .syk import bootstrap_dip, sample_complete_syk, sample_interleave_syk, sample_sparse_syk, spectral_form_factor

    info = run_info(args)
    times = np.logspace(np.log10(args.tmin), np.log10(args.tmax), args.points)
    base = 0 if args.seed is None else args.seed
    if args.kind == "sparse":
        insts = [sample_sparse_syk(args.n, args.d, args.J, base + s) for s in range(args.instances)]
    elif args.kind == "interleave":
        insts = [sample_interleave_syk(args.n, args.rounds, args.J, base + s) for s in range(args.instances)]
    else:
        insts = [sample_complete_syk(args.n, args.J, base + s) for s in range(args.instances)]
    res = spectral_form_factor(insts, times, beta=args.beta, normalize=args.normalize)
    dip, dip_err = bootstrap_dip(res, seed=base)
    header = f"# ferriq {info['version']} seed={info['seed']} config_hash={info['config_hash']} dip={dip:.6e} dip_err={dip_err:.6e}\n"
    _emit(args.out, header + res.to_csv())
    if args.plot:
        from .plotting import plot_sff

        plot_sff({args.kind: res}, args.plot, title=f"SFF, {args.n} Majoranas, {args.instances} instances")
    return EXIT_OK


def table_rows(which: str) -> list[dict]:
    """Rows of the reproduced tables."""
    if which in ("s1", "s1-ccz"):
        rows = []
        for n in range(1, 9):
            r = catalysis_report(n)
            rows.append({"N": r.n_modes, "ccz_rz": r.rz_total, "ccz_rz_per_mode": str(r.rz_per_mode)})
        return rows
    if which in ("s2", "s2-interleave"):
        return [
            {"N": 1 << n, "fswap_over_3": fswap_interleave_cost(n) // 3, "djw_over_3": djw_interleave_cost(n) // 3}
            for n in range(1, 9)
        ]
    if which in ("table1", "table1-asymptotics"):
        return [
            {"scheme": "swap network", "ffft_1d": "O(L)", "reflection_2d": "O(L^2)", "ffft_2d": "O(L^2)"},
            {"scheme": "compact encoding", "ffft_1d": "O(L)", "reflection_2d": "N/A", "ffft_2d": "O(L)"},
            {"scheme": "dynamic JW", "ffft_1d": "O(log L)", "reflection_2d": "O(1)", "ffft_2d": "O(log L)"},
        ]
    raise InputError(f"unknown table {which!r}")


def measured_table1(max_log: int = 4) -> list[dict]:
    """Measured Clifford gates per qubit of this compiler's 2D FFFT and 2D reflection."""
    from .perm import synth_reflection_2d

    rows = []
    for k in range(1, max_log + 1):
        L = 1 << k
        c, _ = build_ffft_2d(L)
        r = synth_reflection_2d(L, L)
        n = L * L
        rows.append(
            {
                "L": L,
                "ffft_2d_clifford_per_qubit": round(cost_report(c).clifford_count / n, 6),
                "reflection_2d_clifford_per_qubit": round(cost_report(r).clifford_count / n, 6),
            }
        )
    return rows


def _csv(rows: Sequence[dict]) -> str:
    keys = list(rows[0])
    lines = [",".join(keys)] + [",".join(str(r[k]) for k in keys) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_tables(args: argparse.Namespace) -> int:
    rows = table_rows(args.which)
    text = _csv(rows)
    if args.which in ("table1", "table1-asymptotics") and args.measured:
        text += "\n" + _csv(measured_table1(args.measured))
    _emit(args.out, text)
    if args.plot:
        from .plotting import plot_table_series

        if args.which in ("s1", "s1-ccz"):
            plot_table_series([r["N"] for r in rows], {"CCZ per mode": [float(r["ccz_rz_per_mode"]) for r in rows]}, args.plot, "N", "CCZ / N")
        elif args.which in ("s2", "s2-interleave"):
            series = {"FSWAP / 3": [max(r["fswap_over_3"], 1e-1) for r in rows], "DJW / 3": [max(r["djw_over_3"], 1e-1) for r in rows]}
            plot_table_series([r["N"] for r in rows], series, args.plot, "N", "gates / 3", logy=True)
        else:
            m = measured_table1(args.measured or 4)
            plot_table_series(
                [r["L"] for r in m],
                {
                    "2D FFFT": [r["ffft_2d_clifford_per_qubit"] for r in m],
                    "2D reflection": [r["reflection_2d_clifford_per_qubit"] for r in m],
                },
                args.plot,
                "L",
                "Clifford gates per qubit",
            )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        with open(args.circuit, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {args.circuit}: {exc}") from exc
    try:
        obj = json.loads(text)
        obj.pop("run", None)
        c = deserialize(json.dumps(obj))
    except (json.JSONDecodeError, CircuitFormatError, AttributeError) as exc:
        raise InputError(f"bad circuit file: {exc}") from exc
    m0 = OrderingMap(list(Permutation.from_string(args.m0))) if args.m0 else None
    if args.m1:
        m1 = OrderingMap(list(Permutation.from_string(args.m1)))
    else:
        perm = c.metadata.get("perm") if c.metadata else None
        if perm is None:
            outer = [b for b in c.blocks if b.kind == "fermionic_permutation" and b.start == 0 and b.stop == len(c.instructions)]
            perm = list(outer[0].perm) if outer and outer[0].perm else None
        m1 = OrderingMap(perm) if perm is not None else None
    rep = verify_permutation_circuit(c, m0, m1)
    _emit(args.report, dump_json({"run": run_info(args), "verification": _verification(rep)}))
    return EXIT_OK if rep.passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser


def _compile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--interleave-method", choices=["cascade", "ancilla_cz"], default="cascade")
    p.add_argument("--cascade-mode", choices=["constant_depth", "serial"], default="constant_depth")
    p.add_argument("--out", default="-", help="circuit JSON path ('-' for stdout)")
    p.add_argument("--report", default=None, help="cost/verification report JSON path")
    p.add_argument("--materialize-swaps", action="store_true", help="replace relabels by SWAP gates")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ferriq", description="Dynamic Jordan-Wigner compiler")
    ap.add_argument("--version", action="version", version=f"ferriq {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("compile-perm", help="compile a fermionic permutation")
    p.add_argument("--perm", help="comma-separated image list")
    p.add_argument("--perm-file")
    p.add_argument("--strategy", choices=["auto", "mergesort", "structured", "fswap"], default="auto")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--dump-parity", default=None, help="write the CZ parity matrix JSON here")
    _compile_flags(p)
    p.set_defaults(func=cmd_compile_perm)

    p = sub.add_parser("compile-mperm", help="compile a Majorana permutation")
    p.add_argument("--perm", help="comma-separated image list of length 2N")
    p.add_argument("--perm-file")
    p.add_argument("--strategy", choices=["auto", "mergesort", "structured", "fswap"], default="auto")
    p.add_argument("--verify", action="store_true")
    _compile_flags(p)
    p.set_defaults(func=cmd_compile_mperm)

    p = sub.add_parser("compile-ffft", help="compile a 1D or 2D FFFT")
    p.add_argument("--dim", type=int, choices=[1, 2], default=1)
    p.add_argument("--n", type=int, required=True, help="log2 of the modes (1D) or of the side (2D)")
    p.add_argument("--verify", action="store_true", help="check the single-particle transfer")
    p.add_argument("--verify-sector", type=int, default=None, help="dense check on a particle-number sector")
    p.add_argument("--samples", type=int, default=8, help="sampled measurement branches for --verify-sector")
    _compile_flags(p)
    p.set_defaults(func=cmd_compile_ffft)

    syk = sub.add_parser("syk", help="SYK instances, Trotter cycles and spectral form factors")
    ssub = syk.add_subparsers(dest="syk_cmd", required=True)

    def inst_flags(q):
        q.add_argument("--n", type=int, default=14, help="number of Majoranas")
        q.add_argument("--d", type=int, default=4)
        q.add_argument("--rounds", type=int, default=4)
        q.add_argument("--kind", choices=["sparse", "interleave", "complete"], default="sparse")
        q.add_argument("--J", type=float, default=1.0)
        q.add_argument("--seed", type=int, default=0)

    q = ssub.add_parser("sample")
    inst_flags(q)
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_syk_sample)

    q = ssub.add_parser("compile")
    inst_flags(q)
    q.add_argument("--instance", default=None, help="instance JSON from 'syk sample'")
    q.add_argument("--dt", type=float, default=0.05)
    q.add_argument("--open", action="store_true", help="omit the final permutation back to the start placement")
    q.add_argument("--interleave-method", choices=["cascade", "ancilla_cz"], default="ancilla_cz")
    q.add_argument("--cascade-mode", choices=["constant_depth", "serial"], default="constant_depth")
    q.add_argument("--out", default="-")
    q.add_argument("--report", default=None)
    q.add_argument("--materialize-swaps", action="store_true")
    q.set_defaults(func=cmd_syk_compile)

    q = ssub.add_parser("sff")
    inst_flags(q)
    q.add_argument("--instances", type=int, default=50)
    q.add_argument("--tmin", type=float, default=0.1)
    q.add_argument("--tmax", type=float, default=3000.0)
    q.add_argument("--points", type=int, default=200)
    q.add_argument("--beta", type=float, default=0.0)
    q.add_argument("--normalize", action="store_true", help="rescale every H to Tr H^2 / dim = 1")
    q.add_argument("--out", default="-")
    q.add_argument("--plot", default=None, help="PNG path for the curve")
    q.set_defaults(func=cmd_syk_sff)

    p = sub.add_parser("tables", help="reproduce the cost tables as CSV")
    p.add_argument("--which", required=True, choices=["table1", "table1-asymptotics", "s1", "s1-ccz", "s2", "s2-interleave"])
    p.add_argument("--measured", type=int, default=0, help="append measured rows for L = 2 .. 2^k (table1)")
    p.add_argument("--out", default="-")
    p.add_argument("--plot", default=None, help="PNG path")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("verify", help="verify a permutation circuit JSON")
    p.add_argument("--circuit", required=True)
    p.add_argument("--m0", default=None, help="initial ordering (default identity)")
    p.add_argument("--m1", default=None, help="final ordering (default from the circuit)")
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (InputError, OracleCapError, CircuitFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
