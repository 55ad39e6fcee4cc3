"""Compare the compiled kernels with the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 1000,100000] [--repeat 20]

Prints the median time per call for each kernel and backend, then the wall
time of one end-to-end solve under each backend (selected through
``QREG_PURE`` in a subprocess, exactly as a user would).
"""

import argparse
import os
import statistics
import subprocess
import sys
import timeit

import numpy as np

from qregpn import _kernels_py

try:
    from qregpn import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _cases(n, rng):
    z = rng.standard_normal(n)
    b = np.where(rng.standard_normal(n) > 0, 1.0, -1.0)
    return {
        "soft_threshold": lambda k: k.soft_threshold(z, 0.3),
        "project_simplex": lambda k: k.project_simplex(z),
        "logistic_terms": lambda k: k.logistic_terms(z, b),
        "student_t_terms": lambda k: k.student_t_terms(z, 0.25),
    }


def _median_time(fn, repeat):
    return statistics.median(timeit.repeat(fn, number=1, repeat=repeat))


SOLVE_SNIPPET = """
import time, numpy as np
from qregpn import solve, SolverConfig
from qregpn.problems import gen_student_t_instance
inst = gen_student_t_instance(4096, 20, 0)
t = time.perf_counter()
solve(inst.problem, inst.x0, SolverConfig(q=2.3, eps=1e-5))
print(time.perf_counter() - t)
"""


def _solve_time(pure):
    env = dict(os.environ, QREG_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,100000")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--no-solve", action="store_true")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)]
    if _kernels_c is not None:
        backends.append(("cython", _kernels_c))
    else:
        print("compiled kernels not built; timing the fallback only")

    print(f"{'kernel':<18}{'n':>9}" + "".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    for n in (int(s) for s in args.sizes.split(",")):
        for kname, fn in _cases(n, rng).items():
            times = [_median_time(lambda: fn(mod), args.repeat) for _, mod in backends]
            cells = "".join(f"{1e6 * t:>10.1f}us" for t in times)
            speed = f"{times[0] / times[1]:>9.2f}x" if len(times) == 2 else ""
            print(f"{kname:<18}{n:>9}{cells}{speed}")
    if not args.no_solve:
        tp = _solve_time(pure=True)
        line = f"student_t n=4096 solve: python {tp:.3f}s"
        if _kernels_c is not None:
            tc = _solve_time(pure=False)
            line += f", cython {tc:.3f}s"
        print(line)


if __name__ == "__main__":
    main()
