"""Compare the numba kernels against the pure-numpy fallbacks.

Run with `python3 benchmarks/bench_kernels.py [n]`.  The same kernels are
selected at import time by the FAULTCAST_NO_NUMBA environment flag; here both
implementations are timed directly.
"""

import sys
import time

import numpy as np

from faultcast import _kernels
from faultcast.topology import build_complete


def bench(label, fn, args, repeat=20):
    fn(*args)  # warm-up (numba compilation)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    dt = (time.perf_counter() - t0) / repeat
    print(f"  {label:32s} {dt * 1e3:9.3f} ms")
    return dt


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
    topo = build_complete(n)
    rng = np.random.default_rng(0)
    aware = rng.random(n) < 0.5
    marks = rng.random(topo.num_arcs) < 0.5
    informed = aware
    passive = marks

    pairs = [
        ("collect_sends", (aware, marks, topo.arc_src)),
        ("arc_state_counts", (informed, passive, topo.arc_src, topo.arc_dst)),
        ("edge_boundary", (informed, topo.arc_src, topo.arc_dst)),
        ("nonpassive_out_degrees", (marks, topo.arc_src, n)),
    ]
    print(f"K_{n}: {topo.num_arcs} arcs; numba available: {_kernels.numba is not None}")
    for name, args in pairs:
        np_fn = getattr(_kernels, f"_{name}_np")
        t_np = bench(f"{name} (numpy)", np_fn, args)
        if _kernels.numba is not None:
            nb_fn = getattr(_kernels, f"_{name}_nb")
            t_nb = bench(f"{name} (numba)", nb_fn, args)
            print(f"  {'speedup':32s} {t_np / t_nb:9.2f}x")


if __name__ == "__main__":
    main()
