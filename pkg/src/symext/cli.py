"""Command-line front end.

Every command writes a JSON result document (stdout, or ``--out FILE``).
Exit codes: 0 ok, 2 input/parse error, 3 inconclusive, 4 cost guard.
``SYMEXT_THREADS`` limits the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import MATRIX_FORMAT_VERSION, RESULT_FORMAT_VERSION, __version__
from ._ext import BACKEND
from .bench import bench_kernels, bench_levels
from .hierarchy import DimensionCapError, ckmr_bound, definetti_bound, definetti_crossover, required_k
from .io import MatrixFileError, matrix_to_doc, read_operator, read_state, write_doc
from .linalg import DensityMatrix
from .nets import NetCostError, product_min
from .solver import (
    Decision,
    bss,
    bss_bruteforce,
    cmi_inequality_check,
    meanfield_ground_energy,
    nearest_ppt_distance,
    ppt_check,
    ppt_min_eigenvalue,
    wsep,
)
from .states import rng

EXIT_OK, EXIT_PARSE, EXIT_INCONCLUSIVE, EXIT_GUARD = 0, 2, 3, 4
WITNESS_NET_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _result(command: str, inputs: dict, **fields) -> dict:
    doc = {"command": command, "inputs": inputs}
    doc.update(fields)
    doc["version"] = {"tool": __version__, "matrix_format": MATRIX_FORMAT_VERSION,
                      "result_format": RESULT_FORMAT_VERSION}
    return doc


def _seed_of(doc: dict):
    recipe = doc.get("recipe") if isinstance(doc, dict) else None
    return recipe.get("seed") if isinstance(recipe, dict) else None


def _emit(doc: dict, args, started: float) -> None:
    doc["timings"] = {"wall_s": time.perf_counter() - started}
    text = write_doc(doc, args.out)
    if args.out is None:
        sys.stdout.write(text)


def _cmd_sep_check(args) -> int:
    rho, doc = read_state(args.input)
    if len(rho.dims) != 2:
        raise MatrixFileError(f"sep-check needs 2 factors, got dims {list(rho.dims)}")
    if args.norm == "locc":
        print("note: locc mode differs from frobenius only in the choice of k", file=sys.stderr)
    v = wsep(rho, args.eps, args.norm, k_cap=args.kcap, ppt_cuts=args.ppt_cuts)
    out = _result(
        "sep-check",
        {"in": args.input, "eps": args.eps, "norm": args.norm, "kcap": args.kcap,
         "ppt_cuts": args.ppt_cuts, "dims": list(rho.dims)},
        verdict=v.decision.value, k_used=v.k_used, k_target=v.k_target, sdp_value=v.sdp_value,
        certificate=v.certificate, reason=v.reason, diagnostics=v.diagnostics,
        witness=matrix_to_doc(v.witness, "witness") if v.witness is not None else None,
        seed=_seed_of(doc),
    )
    _emit(out, args, args._t0)
    return EXIT_INCONCLUSIVE if v.decision == Decision.INCONCLUSIVE else EXIT_OK


def _cmd_bss(args) -> int:
    op, doc = read_operator(args.op)
    if args.auto:
        res = bss(op, args.eps, "frobenius_bound", k_cap=args.kcap)
    else:
        res = bss(op, mode="fixed_k", k=args.k)
    fields = {
        "value": res.value, "k_used": res.k_used, "k_required": res.k_required,
        "capped": res.capped, "error_bound": res.error_bound, "method": res.method,
    }
    if args.oracle:
        net = bss_bruteforce(op, args.mesh)
        fields["oracle"] = {"value": net.value, "error_bound": net.error_bound,
                            "mesh": args.mesh, "points": net.points, "method": net.method}
    out = _result("bss", {"op": args.op, "eps": args.eps, "k": args.k, "auto": args.auto,
                          "kcap": args.kcap, "oracle": args.oracle, "dims": list(op.dims)},
                  seed=_seed_of(doc), **fields)
    _emit(out, args, args._t0)
    return EXIT_OK


def _cmd_meanfield(args) -> int:
    op, doc = read_operator(args.k_op)
    if len(op.dims) != 2 or op.dims[0] != op.dims[1]:
        raise MatrixFileError(f"meanfield needs a two-body operator on d (x) d, got dims {list(op.dims)}")
    res = meanfield_ground_energy(op, args.eps, k_cap=args.kcap)
    out = _result("meanfield", {"k_op": args.k_op, "eps": args.eps, "kcap": args.kcap,
                                "dims": list(op.dims)},
                  energy=res.value, k_used=res.k_used, k_required=res.k_required,
                  capped=res.capped, error_bound=res.error_bound, seed=_seed_of(doc))
    _emit(out, args, args._t0)
    return EXIT_OK


def _cmd_definetti_k(args) -> int:
    k = required_k(args.eps, args.dimA, args.norm)
    fields = {"k": k, "bound_at_k": definetti_bound(k, args.dimA, args.norm)}
    if args.dimB is not None:
        fields["ckmr_bound_at_k"] = ckmr_bound(args.dimB, k)
        fields["crossover"] = definetti_crossover(args.dimA, args.dimB, args.norm)
    out = _result("definetti-k", {"eps": args.eps, "dimA": args.dimA, "dimB": args.dimB,
                                  "norm": args.norm}, **fields)
    _emit(out, args, args._t0)
    return EXIT_OK


def _cmd_oracle_ppt(args) -> int:
    rho, doc = read_state(args.input)
    if len(rho.dims) != 2:
        raise MatrixFileError(f"oracle-ppt needs 2 factors, got dims {list(rho.dims)}")
    ppt = ppt_check(rho)
    out = _result("oracle-ppt", {"in": args.input, "dims": list(rho.dims)},
                  ppt=ppt, min_pt_eigenvalue=ppt_min_eigenvalue(rho),
                  distance_to_ppt=nearest_ppt_distance(rho),
                  ppt_is_exact=rho.side <= 6, seed=_seed_of(doc))
    _emit(out, args, args._t0)
    return EXIT_OK


def _cmd_witness_verify(args) -> int:
    w, _ = read_operator(args.witness)
    rho, doc = read_state(args.state)
    if w.dims != rho.dims:
        raise MatrixFileError(f"witness dims {list(w.dims)} != state dims {list(rho.dims)}")
    value = w.expectation(rho)
    net = product_min(w, args.mesh)
    ok = value < 0 and net.value >= -WITNESS_NET_TOL
    out = _result("witness-verify", {"witness": args.witness, "state": args.state, "mesh": args.mesh},
                  trace_with_state=value, product_net_min=net.value, net_error_bound=net.error_bound,
                  net_points=net.points, net_method=net.method, verified=ok, seed=_seed_of(doc))
    _emit(out, args, args._t0)
    return EXIT_OK if ok else EXIT_INCONCLUSIVE


def random_pure_tripartite(seed: int) -> DensityMatrix:
    gen = rng(seed)
    v = gen.standard_normal(8) + 1j * gen.standard_normal(8)
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), [2, 2, 2], check=False)


def _cmd_cmi_test(args) -> int:
    rows, held = [], 0
    for s in range(args.seed0, args.seed0 + args.seeds):
        lhs, rhs, ok = cmi_inequality_check(random_pure_tripartite(s))
        held += bool(ok)
        rows.append({"seed": s, "lhs": lhs, "rhs": rhs, "holds": ok})
    out = _result("cmi-test", {"seeds": args.seeds, "seed0": args.seed0},
                  held=held, total=args.seeds, all_hold=held == args.seeds,
                  min_margin=min((r["lhs"] - r["rhs"] for r in rows), default=math.nan),
                  samples=rows if args.verbose else None)
    print(f"{held}/{args.seeds} hold", file=sys.stderr)
    _emit(out, args, args._t0)
    return EXIT_OK if held == args.seeds else EXIT_INCONCLUSIVE


def _cmd_bench(args) -> int:
    try:
        dims = tuple(int(x) for x in args.dims.split(","))
    except ValueError:
        raise MatrixFileError(f"--dims expects A,B got {args.dims!r}") from None
    if len(dims) != 2:
        raise MatrixFileError(f"--dims expects A,B got {args.dims!r}")
    res = bench_levels(dims, args.kmin, args.kmax, seed=args.seed, repeat=args.repeat)
    print(f"{'k':>4} {'side':>6} {'expected':>8} {'vars':>6} {'build_s':>10} {'solve_s':>10} {'iters':>5}",
          file=sys.stderr)
    for r in res["rows"]:
        print(f"{r['k']:>4} {r['block_side']:>6} {r['expected_side']:>8} {r['variables']:>6} "
              f"{r['build_s']:>10.4f} {r['solve_s']:>10.4f} {r['iterations']:>5}", file=sys.stderr)
    print(f"log-log slope of time vs side: {res['loglog_slope']:.3f}", file=sys.stderr)
    fields = dict(res)
    if args.kernels:
        fields["kernels"] = bench_kernels(seed=args.seed, repeat=args.repeat)
        for k in fields["kernels"]["kernels"]:
            line = f"{k['kernel']:<14} python {k['python_s']:.4f}s"
            if "cython_s" in k:
                line += f"  cython {k['cython_s']:.4f}s  speedup {k['speedup']:.2f}x"
            print(line, file=sys.stderr)
    out = _result("bench", {"dims": list(dims), "kmin": args.kmin, "kmax": args.kmax,
                            "repeat": args.repeat, "kernels": args.kernels}, seed=args.seed, **fields)
    _emit(out, args, args._t0)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="symext", description="Separability tests via symmetric extensions.")
    p.add_argument("--version", action="version",
                   version=f"symext {__version__} (matrix format {MATRIX_FORMAT_VERSION}, "
                           f"result format {RESULT_FORMAT_VERSION}, kernels {BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp_ = sub.add_parser(name, help=help_)
        sp_.set_defaults(fn=fn)
        sp_.add_argument("--out", default=None, help="write the result JSON here")
        return sp_

    s = add("sep-check", _cmd_sep_check, "weak-membership decision for a state")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--norm", choices=["locc", "frobenius"], default="frobenius")
    s.add_argument("--kcap", type=int, default=64)
    s.add_argument("--ppt-cuts", action="store_true")

    s = add("bss", _cmd_bss, "upper bound on the best separable expectation")
    s.add_argument("--op", required=True)
    s.add_argument("--eps", type=float, default=None)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--auto", action="store_true")
    s.add_argument("--kcap", type=int, default=64)
    s.add_argument("--oracle", action="store_true", help="compare with the product-net brute force")
    s.add_argument("--mesh", type=float, default=0.01)

    s = add("meanfield", _cmd_meanfield, "mean-field ground-energy lower bound")
    s.add_argument("--k-op", dest="k_op", required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--kcap", type=int, default=64)

    s = add("definetti-k", _cmd_definetti_k, "extension level needed for accuracy eps")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--dimA", type=int, required=True)
    s.add_argument("--dimB", type=int, default=None)
    s.add_argument("--norm", choices=["locc", "frobenius"], default="frobenius")

    s = add("oracle-ppt", _cmd_oracle_ppt, "PPT test and distance to the PPT set")
    s.add_argument("--in", dest="input", required=True)

    s = add("witness-verify", _cmd_witness_verify, "check a witness on a state and a product net")
    s.add_argument("--witness", required=True)
    s.add_argument("--state", required=True)
    s.add_argument("--mesh", type=float, default=0.01)

    s = add("cmi-test", _cmd_cmi_test, "squashed-entanglement style CMI bound on random states")
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--seed0", type=int, default=0)
    s.add_argument("--verbose", action="store_true", help="include every sample in the output")

    s = add("bench", _cmd_bench, "time the extension SDPs versus k")
    s.add_argument("--dims", default="2,2")
    s.add_argument("--kmin", type=int, default=2)
    s.add_argument("--kmax", type=int, default=10)
    s.add_argument("--repeat", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kernels", action="store_true", help="also compare compiled and numpy kernels")
    return p


def _run(args) -> int:
    threads = os.environ.get("SYMEXT_THREADS")
    if threads:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=int(threads)):
            return args.fn(args)
    return args.fn(args)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.perf_counter()
    try:
        return _run(args)
    except (NetCostError, DimensionCapError) as exc:
        print(f"symext {args.command}: cost guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (MatrixFileError, ValueError, IndexError) as exc:
        print(f"symext {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
