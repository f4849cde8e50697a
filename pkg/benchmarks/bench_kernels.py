"""Compare the compiled kernels with the pure-Python fallback.

Runs ``aerialpush bench`` once per backend in a fresh interpreter (the
backend is fixed at import time) and prints a side-by-side table::

    python benchmarks/bench_kernels.py --n-envs 32 --steps 100
"""

import argparse
import json
import os
import subprocess
import sys


def run(disable, n_envs, steps, workers):
    env = dict(os.environ, AERIALPUSH_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, "-m", "aerialpush", "bench", "--n-envs", str(n_envs), "--steps", str(steps),
           "--workers", str(workers)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-envs", type=int, default=32)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)
    fast = run(False, args.n_envs, args.steps, args.workers)
    slow = run(True, args.n_envs, max(args.steps // 10, 2), args.workers)
    keys = [k for k in fast if k != "backend"]
    print(f"{'metric':<26}{fast['backend']:>14}{slow['backend']:>14}{'speedup':>10}")
    for k in keys:
        print(f"{k:<26}{fast[k]:>14.1f}{slow[k]:>14.1f}{fast[k] / slow[k]:>9.1f}x")


if __name__ == "__main__":
    main()
