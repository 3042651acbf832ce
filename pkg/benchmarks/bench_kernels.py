"""Compiled kernels versus the numpy fallback.

Run ``python benchmarks/bench_kernels.py``.  The first table times each
kernel under both implementations in one process; the second times the
level-k extension solves with the backend picked at import and again in a
subprocess with ``SYMEXT_PURE_PYTHON=1``.
"""

import argparse
import json
import os
import subprocess
import sys

from symext.bench import bench_kernels


def levels_in_subprocess(kmax: int, pure: bool) -> dict:
    env = dict(os.environ)
    if pure:
        env["SYMEXT_PURE_PYTHON"] = "1"
    else:
        env.pop("SYMEXT_PURE_PYTHON", None)
    code = (
        "import json, symext; from symext.bench import bench_levels; "
        f"r = bench_levels((2, 2), 2, {kmax}, repeat=1); r['backend'] = symext.BACKEND; "
        "print(json.dumps(r))"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmax", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    res = bench_kernels(repeat=args.repeat)
    print(f"backend at import: {res['backend']}")
    print(f"{'kernel':<14}{'workload':<30}{'python s':>10}{'cython s':>10}{'speedup':>9}")
    for k in res["kernels"]:
        print(f"{k['kernel']:<14}{k['workload']:<30}{k['python_s']:>10.4f}"
              f"{k.get('cython_s', float('nan')):>10.4f}{k.get('speedup', float('nan')):>9.1f}")

    print()
    runs = {pure: levels_in_subprocess(args.kmax, pure) for pure in (False, True)}
    print(f"{'k':>3}{'side':>6}" + "".join(f"{runs[p]['backend'] + ' s':>12}" for p in runs))
    for rows in zip(*(runs[p]["rows"] for p in runs)):
        t = [r["build_s"] + r["solve_s"] for r in rows]
        print(f"{rows[0]['k']:>3}{rows[0]['block_side']:>6}" + "".join(f"{x:>12.4f}" for x in t))
    for p in runs:
        print(f"log-log slope ({runs[p]['backend']}): {runs[p]['loglog_slope']:.2f}")


if __name__ == "__main__":
    main()
