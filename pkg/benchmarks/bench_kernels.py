"""Compiled kernel vs numpy fallback: raw program throughput and end-to-end queries.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from belcal import kernels, library
from belcal.dsl import parse_formula, parse_query
from belcal.engine import EngineConfig, bel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def program_bench(n, repeat):
    robot = library.theory("robot1d")
    sonar = robot.action("sonar").likelihood
    phi = parse_formula(robot, "h <= 9 and (v > -1 or h > 7 * v) and not h = 3")
    bind = lambda node: ("col", node.name)
    rng = np.random.default_rng(0)
    cols = {"h": rng.uniform(2, 12, n), "v": rng.normal(0, 4, n), "z": np.full(n, 5.0)}
    rows = []
    for label, node in (("sonar likelihood", sonar), ("compound formula", phi)):
        prog = kernels.compile_node(node, bind, lambda _: False)
        X = [cols[k] for k in prog.inputs]
        for kernel in kernels.AVAILABLE:
            t = best_of(lambda: kernels.evaluate(prog, X, n, kernel=kernel), repeat)
            rows.append((label, kernel, t, n / t / 1e6))
    return rows


def query_bench(repeat):
    rows = []
    for theory, text in (("robot1d", "bel (h <= 9) after [sonar(5), sonar(5)]"),
                         ("noisy", "bel (h >= 11) after [nmove(-2), sonar2(11.5)]")):
        spec = library.theory(theory)
        q = parse_query(text, spec)
        for kernel in kernels.AVAILABLE:
            cfg = replace(EngineConfig(), kernel=kernel)
            t = best_of(lambda: bel(spec, q, cfg), repeat)
            rows.append((text, kernel, t))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"kernels available: {', '.join(kernels.AVAILABLE)} (default {kernels.ACTIVE})")
    print(f"\nprogram evaluation, {args.points} points, best of {args.repeat}")
    for label, kernel, t, rate in program_bench(args.points, args.repeat):
        print(f"  {label:18s} {kernel:9s} {t * 1e3:8.1f} ms  {rate:7.1f} Mpts/s")
    print("\nend-to-end quadrature queries (default grid)")
    for text, kernel, t in query_bench(args.repeat):
        print(f"  {text:48s} {kernel:9s} {t:6.2f} s")


if __name__ == "__main__":
    main()
