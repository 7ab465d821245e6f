"""Hot per-arc kernels.

Every simulation step scans the arc arrays of the network (up to ~1M arcs for
K_1024), so these few operations dominate runtime.  Each kernel has a numba
``@njit`` implementation and a pure-numpy fallback; set ``FAULTCAST_NO_NUMBA=1``
to force the numpy path.  ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

import numpy as np

_NUMBA_DISABLED = os.environ.get("FAULTCAST_NO_NUMBA", "").lower() in {"1", "true", "yes"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and not _NUMBA_DISABLED


# ---------------------------------------------------------------------------
# numpy implementations


def _collect_sends_np(aware, marks, arc_src):
    """Arc ids on which an aware vertex would send: aware source, unmarked arc."""
    return np.flatnonzero(aware[arc_src] & ~marks)


def _arc_state_counts_np(informed, passive, arc_src, arc_dst):
    """(active, hyperactive, passive) arc counts over out-arcs of informed vertices."""
    src_inf = informed[arc_src]
    dst_inf = informed[arc_dst]
    active = int(np.count_nonzero(src_inf & ~dst_inf))
    hyper = int(np.count_nonzero(src_inf & dst_inf & ~passive))
    return active, hyper, int(np.count_nonzero(passive))


def _edge_boundary_np(member, arc_src, arc_dst):
    """Undirected edges with exactly one endpoint in the member set."""
    return int(np.count_nonzero(member[arc_src] & ~member[arc_dst]))


def _nonpassive_out_degrees_np(marks, arc_src, n):
    """Per-vertex count of unmarked out-arcs."""
    return np.bincount(arc_src[~marks], minlength=n)


# ---------------------------------------------------------------------------
# numba implementations

if NUMBA_ENABLED:

    @numba.njit(cache=True)
    def _collect_sends_nb(aware, marks, arc_src):
        a = arc_src.shape[0]
        out = np.empty(a, dtype=np.int64)
        m = 0
        for i in range(a):
            if aware[arc_src[i]] and not marks[i]:
                out[m] = i
                m += 1
        return out[:m].copy()

    @numba.njit(cache=True)
    def _arc_state_counts_nb(informed, passive, arc_src, arc_dst):
        active = 0
        hyper = 0
        b = 0
        for i in range(arc_src.shape[0]):
            if passive[i]:
                b += 1
            elif informed[arc_src[i]]:
                if informed[arc_dst[i]]:
                    hyper += 1
                else:
                    active += 1
        return active, hyper, b

    @numba.njit(cache=True)
    def _edge_boundary_nb(member, arc_src, arc_dst):
        count = 0
        for i in range(arc_src.shape[0]):
            if member[arc_src[i]] and not member[arc_dst[i]]:
                count += 1
        return count

    @numba.njit(cache=True)
    def _nonpassive_out_degrees_nb(marks, arc_src, n):
        deg = np.zeros(n, dtype=np.int64)
        for i in range(arc_src.shape[0]):
            if not marks[i]:
                deg[arc_src[i]] += 1
        return deg

    collect_sends = _collect_sends_nb
    arc_state_counts = _arc_state_counts_nb
    edge_boundary_count = _edge_boundary_nb
    nonpassive_out_degrees = _nonpassive_out_degrees_nb
else:
    collect_sends = _collect_sends_np
    arc_state_counts = _arc_state_counts_np
    edge_boundary_count = _edge_boundary_np
    nonpassive_out_degrees = _nonpassive_out_degrees_np
