"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from swarmtopo.kernels import available_backends
from swarmtopo.prufer import random_tree


def cases(rng):
    tree = random_tree(2000, rng)
    edges = sorted(tree.edges)
    seq = [int(x) for x in rng.integers(1, 2001, size=1998)]
    pos = rng.uniform(0, 20, size=(200, 2))
    small = random_tree(200, rng)
    e = np.array(sorted(small.edges), dtype=np.int64) - 1
    # keep links short so the barrier stays finite
    for u, v in e:
        pos[v] = pos[u] + rng.uniform(-0.4, 0.4, size=2)
    t = np.full(len(e), 0.8)
    return {
        "prufer_encode n=2000": lambda k: k.prufer_encode(2000, edges),
        "prufer_decode n=2000": lambda k: k.prufer_decode(2000, seq),
        "edge_velocities n=200": lambda k: k.edge_velocities(pos, e, t, 1.0, 1.0, 0.01, 1.0, 0.1),
        "potential_energy n=200": lambda k: k.potential_energy(pos, e, t, 1.0, 1.0, 0.01),
        "disk_union_cells n=200": lambda k: k.disk_union_cells(
            pos, 1.0, pos[:, 0].min() - 1.1, pos[:, 1].min() - 1.1, 0.02,
            int(np.ptp(pos[:, 0]) / 0.02) + 120, int(np.ptp(pos[:, 1]) / 0.02) + 120),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':28s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")
    for name, fn in cases(np.random.default_rng(0)).items():
        times = {}
        for b, mod in backends.items():
            times[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{name:28s}" + "".join(f"{times[b] * 1e3:12.3f}ms" for b in backends)
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
