"""Topology construction, arc indexing, labeling, and edge boundaries."""

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from faultcast import topology
from faultcast.errors import InvalidParameterError, UnsupportedTopologyError


@pytest.mark.parametrize("n", [2, 3, 5, 16])
def test_complete_shape(n):
    topo = topology.build_complete(n)
    assert topo.num_arcs == n * (n - 1)
    assert topo.edge_connectivity == n - 1
    assert topo.degree == n - 1
    # opp is an involution that swaps endpoints.
    assert np.all(topo.opp[topo.opp] == np.arange(topo.num_arcs))
    assert np.all(topo.arc_src[topo.opp] == topo.arc_dst)
    assert np.all(topo.arc_dst[topo.opp] == topo.arc_src)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_hypercube_shape(d):
    topo = topology.build_hypercube(d)
    n = 1 << d
    assert topo.n == n
    assert topo.num_arcs == n * d
    assert topo.edge_connectivity == d
    assert np.all(topo.opp[topo.opp] == np.arange(topo.num_arcs))
    # Each arc flips exactly one bit.
    diff = topo.arc_src ^ topo.arc_dst
    assert np.all(diff & (diff - 1) == 0) and np.all(diff > 0)


def test_arc_id_consistency():
    for topo in (topology.build_complete(6), topology.build_hypercube(3)):
        for a in range(topo.num_arcs):
            u, v = int(topo.arc_src[a]), int(topo.arc_dst[a])
            assert topo.arc_id(u, v) == a


def test_arc_id_rejects_non_arcs():
    kn = topology.build_complete(4)
    with pytest.raises(InvalidParameterError):
        kn.arc_id(2, 2)
    qd = topology.build_hypercube(3)
    with pytest.raises(InvalidParameterError):
        qd.arc_id(0, 3)  # Hamming distance 2


def test_out_slice_covers_all_arcs():
    for topo in (topology.build_complete(5), topology.build_hypercube(3)):
        seen = np.concatenate([topo.out_slice(v) for v in range(topo.n)])
        assert sorted(seen) == list(range(topo.num_arcs))
        for v in range(topo.n):
            assert np.all(topo.arc_src[topo.out_slice(v)] == v)


def test_port_seed_shuffles_reproducibly():
    a = topology.build_complete(8, port_seed=1)
    b = topology.build_complete(8, port_seed=1)
    c = topology.build_complete(8, port_seed=2)
    assert np.array_equal(a.out_arcs, b.out_arcs)
    assert not np.array_equal(a.out_arcs, c.out_arcs)


def test_chordal_labeling():
    topo = topology.build_complete(7, chordal=True)
    lab = topo.labeling
    assert lab is not None
    # Port p of u leads to (u+p+1) mod n, so labels at u are 1..n-1 in order.
    for u in range(7):
        dests = topo.arc_dst[topo.out_slice(u)]
        assert [lab.arc_label(u, int(v)) for v in dests] == list(range(1, 7))
        for v in dests:
            assert lab.dest(u, lab.arc_label(u, int(v))) == int(v)
    assert lab.labels_at(0) == list(range(1, 7))


def test_chordal_labels_function():
    assert topology.chordal_labels(topology.build_complete(5)).n == 5
    with pytest.raises(UnsupportedTopologyError):
        topology.chordal_labels(topology.build_hypercube(3))


def test_edge_boundary_brute_force():
    topo = topology.build_hypercube(3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = set(np.flatnonzero(rng.random(topo.n) < 0.5))
        brute = sum(1 for u in s for v in range(topo.n)
                    if v not in s and bin(u ^ v).count("1") == 1)
        assert topology.edge_boundary(topo, s) == brute


def test_edge_boundary_accepts_mask():
    topo = topology.build_complete(6)
    mask = np.zeros(6, dtype=bool)
    mask[:2] = True
    assert topology.edge_boundary(topo, mask) == 2 * 4


def test_iso_lower_bound_subcubes_tight():
    # Subcubes achieve k(d - lg k) exactly.
    for d in (3, 4):
        topo = topology.build_hypercube(d)
        for sub in range(d + 1):
            k = 1 << sub
            s = set(range(k))  # a sub-dimensional subcube
            assert topology.edge_boundary(topo, s) == pytest.approx(
                topology.iso_lower_bound(k, d))


def test_iso_lower_bound_domain():
    with pytest.raises(InvalidParameterError):
        topology.iso_lower_bound(0, 3)
    with pytest.raises(InvalidParameterError):
        topology.iso_lower_bound(9, 3)


@given(st.integers(min_value=1, max_value=15))
def test_iso_bound_holds_on_random_sets_d4(bits):
    topo = topology.build_hypercube(4)
    rng = np.random.default_rng(bits)
    s = set(int(v) for v in rng.choice(16, size=bits, replace=False))
    assert topology.edge_boundary(topo, s) >= topology.iso_lower_bound(len(s), 4) - 1e-9


def test_build_domain_errors():
    with pytest.raises(InvalidParameterError):
        topology.build_complete(1)
    with pytest.raises(InvalidParameterError):
        topology.build_hypercube(0)
