"""Compare the Cython and pure-Python kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times each hot kernel on fixed inputs, then whole protocol trials, under every
available backend. Results are identical across backends (see
``tests/test_kernels.py``); only the speed differs.
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from otlab import kernels
from otlab.ech import EchConfig, EchSets, run_ech
from otlab.ot12 import Ot12Config, run_ot12
from otlab.rng import Stream


def _cases():
    raw = Stream(1).raw(4096)
    keys = Stream(2).raw(4096)
    honest = np.ones(4096, dtype=np.uint8)
    prio = (np.arange(4096) % 7 == 0).astype(np.uint8)
    ech_cfg = EchConfig(0.45, 2, 200)
    sets = EchSets.leading(200, 2, 10)
    ot_cfg = Ot12Config(c=3, beta=3.0, bigN=200, alpha=0.45, rounds_x=2)
    counter = iter(range(10**9))
    return {
        "transfer (4096)": (lambda: kernels.transfer(honest, raw), 2000),
        "select_top (4096 -> 1800)": (lambda: kernels.select_top(honest, prio, keys, 1800), 500),
        "ech_round (4096)": (lambda: kernels.ech_round(honest, prio, raw, keys, 1800), 500),
        "splitmix_block (4096)": (lambda: kernels.splitmix_block(7, 0, 4096), 2000),
        "ECH trial (0.45, 2, 200)": (lambda: run_ech(ech_cfg, sets, seed=next(counter)), 300),
        "ot12 trial (c=3, N=200)": (lambda: run_ot12(ot_cfg, (0, 1), 1, seed=next(counter)), 100),
    }


def run(repeat: int) -> dict[str, dict[str, float]]:
    """Best-of-``repeat`` seconds per call, keyed by case then backend."""
    results: dict[str, dict[str, float]] = {}
    original = kernels.BACKEND
    try:
        for backend in kernels.available_backends():
            kernels.set_backend(backend)
            for name, (fn, number) in _cases().items():
                fn()  # warm up
                best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
                results.setdefault(name, {})[backend] = best
    finally:
        kernels.set_backend(original)
    return results


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write results to this file")
    args = parser.parse_args(argv)
    results = run(args.repeat)
    backends = kernels.available_backends()
    header = f"{'case':<28}" + "".join(f"{b + ' (us)':>16}" for b in backends)
    if "cython" in backends:
        header += f"{'speedup':>10}"
    print(header)
    for name, row in results.items():
        line = f"{name:<28}" + "".join(f"{row[b] * 1e6:>16.1f}" for b in backends)
        if "cython" in backends:
            line += f"{row['python'] / row['cython']:>9.2f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
