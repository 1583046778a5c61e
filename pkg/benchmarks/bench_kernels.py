#!/usr/bin/env python3
"""Benchmark the numba-jitted statevector kernels against the numpy fallback.

Each backend runs in a subprocess with QDISSECT_BACKEND set, so the module
picks its implementation cleanly at import time. Reported numbers are
best-of-repeat wall times; the script also cross-checks that both backends
produce bit-identical amplitudes.

Usage: python3 benchmarks/bench_kernels.py [--qubits 8,12,16,20] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, sys, time
import numpy as np

from qdissect._kernels import BACKEND, apply_rzy_inplace, term_expectations

params = json.loads(sys.argv[1])
repeat = params["repeat"]
results = {"backend": BACKEND, "rzy": {}, "expect": {}, "digest": {}}

for n in params["qubits"]:
    dim = 1 << n
    rng = np.random.default_rng(7)
    base = (rng.normal(size=dim) + 1j * rng.normal(size=dim)).astype(np.complex128)
    base /= np.linalg.norm(base)
    gates = [(int(a), int(b), float(t)) for a, b, t in
             zip(rng.integers(0, n, 64), (rng.integers(0, n - 1, 64) + 1) % n,
                 rng.normal(size=64)) if a != b][:32]

    # warm-up triggers jit compilation so it is excluded from timing
    amps = base.copy()
    for a, b, t in gates:
        apply_rzy_inplace(amps, n, a, b, t)
    results["digest"][str(n)] = [float(amps.real.sum()), float(amps.imag.sum())]

    best = float("inf")
    for _ in range(repeat):
        amps = base.copy()
        t0 = time.perf_counter()
        for a, b, t in gates:
            apply_rzy_inplace(amps, n, a, b, t)
        best = min(best, time.perf_counter() - t0)
    results["rzy"][str(n)] = best / len(gates)

    probs = np.abs(base) ** 2
    signs = np.where(rng.random((64, dim)) < 0.5, 1.0, -1.0)
    term_expectations(probs, signs)  # warm-up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        term_expectations(probs, signs)
        best = min(best, time.perf_counter() - t0)
    results["expect"][str(n)] = best

print(json.dumps(results))
"""


def run_backend(backend: str, params: dict) -> dict:
    env = dict(os.environ, QDISSECT_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", WORKER, json.dumps(params)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().split("\n")[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--qubits", default="8,12,16,20")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    params = {"qubits": [int(x) for x in args.qubits.split(",")],
            "repeat": args.repeat}

    numpy_res = run_backend("numpy", params)
    numba_res = run_backend("numba", params)
    assert numpy_res["backend"] == "numpy"
    assert numba_res["backend"] == "numba"

    for n, digest in numpy_res["digest"].items():
        if digest != numba_res["digest"][n]:
            print(f"MISMATCH at n={n}: backends disagree", file=sys.stderr)
            return 1
    print("cross-check: both backends bit-identical on all sizes\n")

    header = f"{'kernel':<16}{'qubits':>8}{'numpy (s)':>14}{'numba (s)':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for kernel in ("rzy", "expect"):
        for n in params["qubits"]:
            t_np = numpy_res[kernel][str(n)]
            t_nb = numba_res[kernel][str(n)]
            print(f"{kernel:<16}{n:>8}{t_np:>14.3e}{t_nb:>14.3e}{t_np / t_nb:>10.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
