"""Compiled vs pure-Python kernel timings.

Run with ``python benchmarks/bench_kernels.py``; prints one line per kernel.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tcra import _pykernels as pure
from tcra import kernels
from tcra.density_evolution import _Evaluator, bundled_design
from tcra.gf2codes import cyclic_code, CYCLIC_24_14
from tcra.simulator import FrameConfig, frame_graph, make_frame, outer_code


def clock(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases():
    d = bundled_design("tableII_eps01")
    ev = _Evaluator(d)
    q = ev.q(0.238)
    ldpc_args = (ev.g_node, ev.g_edge, ev.l_node, ev.l_edge, ev.rho, 0.1, 7, q, 5000, 1e-9, 1e-12)

    d6 = bundled_design("tableIII_na31")
    e6 = _Evaluator(d6)
    map_args = (e6.g_node, e6.v2c, True, e6.prof, e6.n, 0.1, 31, e6.q(0.045), 5000, 1e-9, 1e-12)

    code = cyclic_code(CYCLIC_24_14, 24)
    cols = code.h.column_words
    orders = np.argsort(np.random.default_rng(0).random((2000, 24)), axis=1)[:, :11].astype(np.int32)

    cfg = FrameConfig.for_design(d, 1000, 7)
    ldpc = outer_code(d, 1000, np.random.default_rng(1))
    fr = make_frame(d, cfg, ldpc, 3)
    g = frame_graph(fr.patterns, cfg.t_slots, ldpc, True)
    r = fr.r.astype(np.int32)

    def peel_args():
        v = np.full(g.n_users * g.n, -1, dtype=np.int8)
        return (v, r, g.vs_ptr, g.vs_idx, g.sv_ptr, g.sv_idx, g.vc_ptr, g.vc_idx,
                g.cv_ptr, g.cv_idx, True, True, 200)

    return {
        "ldpc_de": (lambda m: m.ldpc_de(*ldpc_args)),
        "map_de": (lambda m: m.map_de(*map_args)),
        "count_independent": (lambda m: m.count_independent(cols, 10)),
        "first_dependency": (lambda m: m.first_dependency(cols, orders)),
        "peel": (lambda m: m.peel(*peel_args())),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not available; only the pure backend can be timed")
    print(f"{'kernel':<20}{'compiled [ms]':>15}{'pure [ms]':>13}{'speedup':>10}")
    for name, fn in cases().items():
        tp = clock(lambda: fn(pure), args.repeat)
        if kernels.compiled is not None:
            tc = clock(lambda: fn(kernels.compiled), args.repeat)
            print(f"{name:<20}{tc * 1e3:>15.3f}{tp * 1e3:>13.3f}{tp / tc:>10.1f}")
        else:
            print(f"{name:<20}{'-':>15}{tp * 1e3:>13.3f}{'-':>10}")


if __name__ == "__main__":
    main()
