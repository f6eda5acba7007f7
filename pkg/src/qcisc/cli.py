"""Command-line entry point: ``qcisc <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds as bd
from .assembler import cnnot as cn
from .assembler import cu
from .assembler.metrics import reported_metrics, slope_metrics
from .assembler.qft import QftPlan, assemble_qft, qft_gate_defs
from .assembler.swap import SwapPlan, assemble_swap, assemble_swap_odd, enumerate_swap_plans
from .errors import MissingBlockEntry, PlanConstraintViolated, QcIscError
from .library import MAX_CONTROLS, default_library
from .model import (circuit_duration, circuit_quality, load_block_library, load_circuit,
                    save_circuit)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _globals(p, suppress: bool):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--library", help="block library JSON (default: $QCISC_LIBRARY or bundled)",
                   **kw)
    p.add_argument("--json", action="store_true", help="emit JSON", **kw)
    p.add_argument("--seed", type=int, help="random seed", **({"default": argparse.SUPPRESS}
                                                               if suppress else {"default": 0}))
    p.add_argument("--out", help="output path", **kw)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _globals(common, suppress=True)
    p = _Parser(prog="qcisc", description="Assemble large gates from multi-qubit blocks and score them")
    _globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    b = sub.add_parser("bounds", parents=[common], help="gate and slot lower bounds")
    b.add_argument("--n", type=int)
    b.add_argument("--m", type=int)
    b.add_argument("--mu", type=int)
    b.add_argument("--table", action="store_true", help="print the full bound table")

    a = sub.add_parser("assemble", parents=[common], help="assemble a circuit from blocks")
    a.add_argument("family", choices=["swap", "qft", "cnnot", "cu"])
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--plan", help="swap block sizes, comma separated (outer to centre)")
    a.add_argument("--max-m", type=int, default=8, help="largest swap block when searching")
    a.add_argument("--m", type=int, help="qft register size")
    a.add_argument("--variant", choices=["I", "II"], default="I")
    a.add_argument("--threshold", type=float, default=None,
                   help="qft truncation threshold in radians (0 disables)")
    a.add_argument("--scheme", choices=["basic", "backbone"], default="backbone")
    a.add_argument("--m1", type=int)
    a.add_argument("--m2", type=int)
    a.add_argument("--m3", type=int)
    a.add_argument("--unitary", choices=["x", "y", "z", "h", "random"], default="x",
                   help="single-qubit gate for the cu family")
    a.add_argument("--emit", help="write the circuit JSON here")
    a.add_argument("--report", action="store_true", help="print the report (default)")

    v = sub.add_parser("verify", parents=[common], help="simulate a circuit against a target")
    v.add_argument("--circuit", required=True)
    v.add_argument("--target", required=True,
                   choices=["swap", "qft", "cnnot", "toffoli", "cnot-indirect"])
    v.add_argument("--tol", type=float, default=1e-10)

    g = sub.add_parser("grape", parents=[common], help="optimal-control compilation")
    g.add_argument("--system", choices=["ising"], default="ising")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--target", required=True, help="cnot, swap, qft, identity or a JSON file")
    g.add_argument("--T", type=float)
    g.add_argument("--M", type=int)
    g.add_argument("--sweep", help="a:b:step grid of total times")
    g.add_argument("--restarts", type=int, default=5)
    g.add_argument("--max-iters", type=int, default=2000)

    mc = sub.add_parser("mc-errors", parents=[common], help="Monte-Carlo error propagation")
    mc.add_argument("--m", type=int, required=True)
    mc.add_argument("--F", type=float, default=0.99999)
    mc.add_argument("--rmax", type=int, default=200)
    mc.add_argument("--trials", type=int, default=10)

    me = sub.add_parser("metrics", parents=[common], help="slope metrics")
    me.add_argument("--family", choices=["swap", "qft", "cnnot"], required=True)
    me.add_argument("--source", choices=["reported", "library"], default="reported")
    me.add_argument("--delta-inf", type=float, default=None,
                    help="extrapolated slope (library source)")
    me.add_argument("--n-max", type=int, default=20)

    fd = sub.add_parser("figure-data", parents=[common], help="CSV behind the duration plots")
    fd.add_argument("--family", choices=["swap", "qft", "cnnot"], required=True)
    fd.add_argument("--n-min", type=int, default=2)
    fd.add_argument("--n-max", type=int, default=20)
    return p


# -- helpers ----------------------------------------------------------------

def _library(args):
    path = getattr(args, "library", None) or os.environ.get("QCISC_LIBRARY")
    if path:
        if not Path(path).is_file():
            raise UsageError(f"--library: no such file {path}")
        return load_block_library(path)
    return default_library()


def _report(c, lib) -> dict:
    q = circuit_quality(c, lib)
    hist = {str(k): v for k, v in sorted(c.histogram().items(), key=lambda kv: str(kv[0]))}
    return {"n": c.n, "duration": float(q.duration), "duration_exact": str(q.duration),
            "fidelity": q.fidelity, "quality": q.quality, "slot_count": c.num_slots,
            "block_histogram": hist}


def best_swap(n: int, max_m: int, lib):
    """Fastest SWAP_{1,n}: direct plans and, for odd n, reductions of n+1 plans."""
    cands = []
    direct = enumerate_swap_plans(n, max_m, lib)
    if direct:
        cands.append(assemble_swap(direct[0]))
    if n % 2:
        up = enumerate_swap_plans(n + 1, max_m, lib)
        if up:
            cands.append(assemble_swap_odd(n, up[0]))
    if not cands:
        raise PlanConstraintViolated(f"no SWAP plan for n={n} with blocks <= {max_m}")
    return min(cands, key=lambda c: (circuit_duration(c, lib), c.num_slots))


def default_basic_plan(n: int, m1=None, m2=None, m3=None):
    """Largest outer blocks the library supports, then the best k, m3 split."""
    if (m1 is None) != (m2 is None):
        raise UsageError("give both --m1 and --m2 or neither")
    if m1 is None:
        pairs = [(a, b_) for a in range(MAX_CONTROLS, 0, -1) for b_ in (a, a - 1)
                 if b_ >= 1 and n - (a + b_ + 1) >= 2 and (n - a - b_ - 1) % 2 == 0]
        if not pairs:
            raise PlanConstraintViolated(f"no basic plan for n={n}")
        m1, m2 = pairs[0]
    if m3 is None:
        k, m3, _ = cn.optimize_m3_split(n, m1, m2)
    else:
        rest = n - (m1 + m2 + 1)
        if rest % (2 * m3):
            raise PlanConstraintViolated(f"m3={m3} does not divide the interior of n={n}")
        k = rest // (2 * m3)
    return cn.CnNotPlan(n, m1, m2, cn.BASIC, m3=m3, k=k)


def _single_qubit(name: str, rng) -> np.ndarray:
    from .sim import haar_unitary
    mats = {"x": cu.SX, "y": cu.SY, "z": cu.SZ,
            "h": (cu.SX + cu.SZ) / np.sqrt(2)}
    if name == "random":
        u = haar_unitary(2, rng)
        return u / np.sqrt(np.linalg.det(u))
    return mats[name]


def _emit(text: str, args, default_stdout=True):
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    elif default_stdout:
        sys.stdout.write(text)


def _print(obj, args, text=None):
    if args.json or text is None:
        print(json.dumps(obj, sort_keys=True))
    else:
        print(text)


# -- subcommands ---------------------------------------------------------------

def cmd_bounds(args, lib=None):
    if args.table:
        rows = bd.table1()
        if args.json:
            print(json.dumps({"n": list(bd.TABLE_NS), **{k: [None if x is None else str(x)
                                                              for x in v]
                                                          for k, v in rows.items()}}))
        else:
            print(bd.format_table(rows))
        return 0
    if args.n is None or args.m is None:
        raise UsageError("bounds: --n and --m are required unless --table is given")
    r = bd.bound(bd.BoundQuery(args.n, args.m, args.mu))
    d = r.as_dict()
    d["g"], d["t"] = str(r.g), str(r.t)
    _print(d, args, f"g={r.g} t={r.t} (mu={r.params_used[2]}, {r.variant})")
    return 0


def cmd_assemble(args):
    lib = _library(args)
    n = args.n
    if args.family == "swap":
        if args.plan:
            sizes = tuple(int(x) for x in args.plan.split(","))
            try:
                c = assemble_swap(SwapPlan(n, sizes))
            except PlanConstraintViolated:
                if n % 2 == 0:
                    raise
                c = assemble_swap_odd(n, SwapPlan(n + 1, sizes))
        else:
            c = best_swap(n, args.max_m, lib)
    elif args.family == "qft":
        m = args.m or n
        if n % m:
            raise PlanConstraintViolated(f"n={n} is not a multiple of m={m}")
        kw = {} if args.threshold is None else {"truncation_threshold": args.threshold}
        c = assemble_qft(QftPlan(m, n // m, args.variant, **kw))
    elif args.family == "cnnot":
        c = _cnnot_circuit(args, n)
    else:
        base = _cnnot_circuit(args, n)
        u = _single_qubit(args.unitary, np.random.default_rng(args.seed))
        if cu.classify(u) == "self-inverse":
            c = cu.controlled_self_inverse(base, u)
        else:
            if abs(np.linalg.det(u) - 1) > 1e-10:
                u = u / np.sqrt(np.linalg.det(u))
            c = cu.controlled_su2(base, u)
    rep = _report(c, lib)
    rep["family"] = args.family
    if args.emit:
        save_circuit(c, args.emit)
        rep["emitted"] = args.emit
    text = (f"{args.family} n={n}: tau={rep['duration']:.6g} F={rep['fidelity']:.8f} "
            f"q={rep['quality']:.6f} slots={rep['slot_count']}")
    _print(rep, args, text)
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(rep, sort_keys=True) + "\n")
    return 0


def _cnnot_circuit(args, n):
    if args.scheme == "backbone":
        return cn.assemble_cnnot(cn.plan_backbone(n))
    return cn.assemble_cnnot(default_basic_plan(n, args.m1, args.m2, args.m3))


def cmd_verify(args):
    from .sim import verify_assembly
    if not Path(args.circuit).is_file():
        raise UsageError(f"--circuit: no such file {args.circuit}")
    c = load_circuit(args.circuit)
    gate_defs = None
    meta = c.metadata or {}
    if meta.get("family") == "qft":
        gate_defs = qft_gate_defs(QftPlan(meta["m"], meta["k"], meta["variant"],
                                          meta["threshold"]))
    res = verify_assembly(c, args.target, args.tol, gate_defs)
    d = {"fidelity": res.fidelity, "passed": res.passed, "target": args.target, "n": c.n}
    _print(d, args, f"F_tr={res.fidelity:.12f} {'PASS' if res.passed else 'FAIL'}")
    return 0 if res.passed else 2


def _grape_target(name, n):
    from .control import named_target
    p = Path(name)
    if name.endswith(".json"):
        if not p.is_file():
            raise UsageError(f"--target: no such file {name}")
        data = json.loads(p.read_text())
        return np.array(data["real"], dtype=float) + 1j * np.array(data["imag"], dtype=float)
    if name not in ("cnot", "swap", "qft", "identity"):
        raise UsageError(f"--target: unknown target {name!r}")
    return named_target(name, n)


def _grid(spec: str):
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise UsageError(f"--sweep: expected a:b:step, got {spec!r}") from None
    if step <= 0 or b < a:
        raise UsageError("--sweep: need a <= b and step > 0")
    count = int(round((b - a) / step)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def cmd_grape(args):
    from .control import (GrapeOptions, best_of, build_ising_chain, minimal_time_sweep,
                          special_unitary)
    sys_ = build_ising_chain(args.n)
    target = special_unitary(_grape_target(args.target, args.n))
    opts = GrapeOptions(max_iters=args.max_iters)
    if args.sweep:
        rows, env = minimal_time_sweep(sys_, target, _grid(args.sweep), args.M,
                                       args.restarts, args.seed, opts)
        d = {"sweep": [{"T": t, "fidelity": f, "envelope": e}
                       for (t, f), e in zip(rows, env)]}
        text = "\n".join(f"T={t:.4g} F={f:.8f}" for t, f in rows)
        _print(d, args, text)
        return 0
    if args.T is None:
        raise UsageError("grape: --T is required without --sweep")
    r = best_of(sys_, target, args.T, args.M, args.restarts, args.seed, opts)
    d = {"fidelity": r.fidelity, "T": args.T, "M": r.schedule.M,
         "iterations": r.iterations, "converged": r.converged}
    if getattr(args, "out", None):
        Path(args.out).write_text(r.schedule.to_csv(sys_.labels))
        d["pulses"] = args.out
    _print(d, args, f"F_tr={r.fidelity:.8f} T={args.T} M={r.schedule.M} "
                    f"iterations={r.iterations} converged={r.converged}")
    return 0


def cmd_mc(args):
    from .sim import McConfig, run_error_propagation
    res = run_error_propagation(McConfig(args.m, args.F, args.rmax, args.trials, args.seed))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "aaaa_median", "aaaa_best", "aaaa_worst",
                "abcd_median", "abcd_best", "abcd_worst", "f_ind"])
    for row in res.rows():
        w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
    _emit(buf.getvalue(), args)
    if getattr(args, "out", None) and args.json:
        print(json.dumps({"out": args.out, "rows": len(res.r)}))
    return 0


def _durations(family, n_max, lib):
    out = {}
    if family == "swap":
        for m in range(2, 9):
            out[m] = {n: circuit_duration(best_swap(n, m, lib), lib) for n in range(2, n_max + 1)}
    elif family == "qft":
        for m in range(2, 6):
            out[m] = {m * k: circuit_duration(assemble_qft(QftPlan(m, k)), lib)
                      for k in range(1, n_max // m + 1)}
    else:
        out["basic"] = {}
        for n in range(5, n_max + 1):
            try:
                out["basic"][n] = circuit_duration(cn.assemble_cnnot(default_basic_plan(n)), lib)
            except QcIscError:
                pass
        out["backbone"] = {n: circuit_duration(cn.assemble_cnnot(cn.plan_backbone(n)), lib)
                           for n in range(5, n_max + 1)}
    return {m: pts for m, pts in out.items() if len(pts) >= 2}


def cmd_metrics(args):
    if args.source == "reported":
        sm = reported_metrics(args.family)
    else:
        lib = _library(args)
        durs = _durations(args.family, args.n_max, lib)
        if args.delta_inf is None:
            raise UsageError("metrics: --delta-inf is required with --source library")
        base = 2 if args.family != "cnnot" else "basic"
        sm = slope_metrics(durs, args.delta_inf, base)
    d = sm.to_json()
    text = f"pi_cisc={sm.pi_cisc:.4g} " + " ".join(
        f"eta[{m}]={sm.eta[m]:.3g} xi[{m}]={sm.xi[m]:.3g}" for m in sm.slopes)
    _print(d, args, text)
    return 0


def figure_rows(family: str, ns, lib):
    """Header and rows of (tau, F, q) per block size or scheme."""
    t_r = lib.cost_model.t_r
    if family == "swap":
        cols = list(range(2, 9))
    elif family == "qft":
        cols = list(range(2, 6))
    else:
        cols = ["basic", "backbone"]
    header = ["n"]
    for c in cols:
        header += [f"tau_{c}", f"F_{c}", f"q_{c}"]
    rows = []
    for n in ns:
        row = [n]
        for c in cols:
            try:
                if family == "swap":
                    circ = best_swap(n, c, lib)
                elif family == "qft":
                    if n % c:
                        raise PlanConstraintViolated("n not a multiple of m")
                    circ = assemble_qft(QftPlan(c, n // c))
                elif c == "basic":
                    circ = cn.assemble_cnnot(default_basic_plan(n))
                else:
                    circ = cn.assemble_cnnot(cn.plan_backbone(n))
                q = circuit_quality(circ, lib)
                row += [float(q.duration), q.fidelity, q.quality]
            except (PlanConstraintViolated, MissingBlockEntry, QcIscError):
                row += ["", "", ""]
        rows.append(row)
    return header, rows, t_r


def cmd_figure(args):
    lib = _library(args)
    ns = range(args.n_min, args.n_max + 1)
    header, rows, _ = figure_rows(args.family, ns, lib)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    _emit(buf.getvalue(), args)
    return 0


COMMANDS = {"bounds": cmd_bounds, "assemble": cmd_assemble, "verify": cmd_verify,
            "grape": cmd_grape, "mc-errors": cmd_mc, "metrics": cmd_metrics,
            "figure-data": cmd_figure}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:   # --help
        return int(exc.code or 0)
    except QcIscError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
