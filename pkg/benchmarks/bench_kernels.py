"""Compiled vs interpreted kernels.

Runs the same workload twice in fresh interpreters, once with numba and
once with ``TDQHO_DISABLE_JIT=1``, and reports wall times and the largest
difference between the two results.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, time
import numpy as np
from tdqho import _jit
from tdqho.protocols import LinearSymmetric, OscillatorParams, SuddenQuench
from tdqho.ermakov import adiabatic_ics, equilibrium_ics, integrate
from tdqho.specfun import airy

def workload():
    P = OscillatorParams()
    p = LinearSymmetric(1.0 / 50.0)
    tr = integrate(p, P, adiabatic_ics(p, -50.0, P), (-50.0, 100.0))
    q = SuddenQuench(1.0, 3.0, 0.0)
    tq = integrate(q, P, equilibrium_ics(q, 0.0, P), (0.0, 10.0))
    ai = airy(np.linspace(-80.0, 5.0, 20001))
    return np.concatenate([tr.at(np.linspace(-50, 100, 101))[0], tq.at(np.linspace(0, 10, 101))[0],
                           ai[0][::200]])

t0 = time.perf_counter(); ref = workload(); first = time.perf_counter() - t0
times = []
for _ in range(REPEAT):
    t0 = time.perf_counter(); out = workload(); times.append(time.perf_counter() - t0)
print(json.dumps({"backend": _jit.backend_name(), "first_call": first, "best": min(times),
                  "values": out.tolist()}))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["TDQHO_DISABLE_JIT"] = "1"
    else:
        env.pop("TDQHO_DISABLE_JIT", None)
    code = WORKER.replace("REPEAT", str(repeat))
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    jit = run(False, args.repeat)
    py = run(True, max(1, args.repeat // 3))
    diff = max(abs(a - b) for a, b in zip(jit["values"], py["values"]))
    print(f"{'backend':<8} {'first call [s]':>15} {'best [s]':>10}")
    for r in (jit, py):
        print(f"{r['backend']:<8} {r['first_call']:>15.3f} {r['best']:>10.4f}")
    print(f"speed-up (best): {py['best'] / jit['best']:.1f}x")
    print(f"max |numba - python| on sampled outputs: {diff:.3e}")
    print(f"total benchmark time: {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
