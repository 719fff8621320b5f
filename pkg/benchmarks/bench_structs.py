#!/usr/bin/env python3
"""Benchmark the compiled queue/prefix-sum core against the pure-Python twin.

Two layers:
  * raw structure operations (heap insert/update/pop mixes, Fenwick
    set/total/find mixes) at several sizes;
  * end-to-end events/second on the token-ring model, where those
    structures dominate the per-event cost.

Usage: python benchmarks/bench_structs.py [--sizes 1024,16384] [--events 4000]
"""

import argparse
import importlib
import time

import numpy as np


def bench_queue(mod, n, ops, seed=7):
    """Pop-and-reinsert plus random key updates, like a sampler's absorb loop.

    All randomness is pre-generated so the loop measures the heap itself.
    """
    rng = np.random.default_rng(seed)
    q = mod.PutativeQueue()
    for cid in range(n):
        q.insert(cid, float(rng.exponential()))
    choice = rng.random(ops) < 0.4
    upd_ids = rng.integers(0, n, size=ops)
    exps = rng.exponential(size=ops)
    now = 0.0
    t0 = time.perf_counter()
    for k in range(ops):
        if choice[k]:
            cid, now = q.pop()
            q.insert(cid, now + exps[k])
        else:
            q.update(upd_ids[k], now + exps[k])
    return ops / (time.perf_counter() - t0)


def bench_tree(mod, n, ops, seed=7):
    rng = np.random.default_rng(seed)
    t = mod.PrefixSumTree(capacity=n)
    for i in range(n):
        t.set(i, float(rng.random()))
    ids = rng.integers(0, n, size=ops)
    vals = rng.random(ops)
    qs = rng.random(ops)
    t0 = time.perf_counter()
    for k in range(ops):
        t.set(ids[k], vals[k])
        total = t.total()
        t.find(qs[k] * total)
    return ops / (time.perf_counter() - t0)


def bench_ring(backend_env, m, events, seed=3):
    """Events/second on the ring model under the given backend.

    Runs in a subprocess so the import-time backend selection applies.
    """
    import subprocess
    import sys

    script = (
        "import time\n"
        "from clocksim.models import build\n"
        "from clocksim.kernel import CountingStream, Engine, derived_generator\n"
        "from clocksim.samplers import make_sampler\n"
        "import clocksim.structs as structs\n"
        f"model = build('ring', {{'m': {m}}})\n"
        f"engine = Engine(model, make_sampler('direct'), CountingStream(derived_generator({seed}, 0)))\n"
        "for _ in range(200):\n"
        "    engine.step()\n"
        "t0 = time.perf_counter()\n"
        f"for _ in range({events}):\n"
        "    engine.step()\n"
        f"print(structs.BACKEND, {events} / (time.perf_counter() - t0))\n"
    )
    import os

    env = dict(os.environ)
    env["CLOCKSIM_PURE_PYTHON"] = backend_env
    out = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True, env=env)
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    backend, rate = out.stdout.split()
    return backend, float(rate)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1024,16384")
    parser.add_argument("--ops", type=int, default=30_000)
    parser.add_argument("--events", type=int, default=4_000)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    import clocksim._structs_py as py_mod

    backends = [("python", py_mod)]
    try:
        cy_mod = importlib.import_module("clocksim._structs")
        backends.append(("compiled", cy_mod))
    except ImportError:
        print("compiled backend not built; benchmarking the fallback only")

    print(f"{'structure':<14} {'n':>7} " + " ".join(f"{name:>12}" for name, _ in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    for n in sizes:
        rates = [bench_queue(mod, n, args.ops) for _, mod in backends]
        line = f"{'queue ops/s':<14} {n:>7} " + " ".join(f"{r:12.0f}" for r in rates)
        if len(rates) == 2:
            line += f"   x{rates[1] / rates[0]:.2f}"
        print(line)
        rates = [bench_tree(mod, n, args.ops) for _, mod in backends]
        line = f"{'tree ops/s':<14} {n:>7} " + " ".join(f"{r:12.0f}" for r in rates)
        if len(rates) == 2:
            line += f"   x{rates[1] / rates[0]:.2f}"
        print(line)

    print()
    for m in sizes:
        results = [bench_ring(flag, m, args.events) for flag in ("1", "0")]
        line = f"{'ring events/s':<14} {m:>7} "
        line += " ".join(f"{rate:12.0f}" for _, rate in results)
        if len(results) == 2 and results[0][0] != results[1][0]:
            line += f"   x{results[1][1] / results[0][1]:.2f}"
        print(line)


if __name__ == "__main__":
    main()
