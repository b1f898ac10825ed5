import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvcomplex.baseline_mincut import (brute_force_cut, build_network, cut_value, min_cut,
                                         network_from_arcs, segment_mincut)
from curvcomplex.cell_complex import build_complex
from curvcomplex.energy import DataCost


def all_cut_values(net, chunk=1 << 15):
    """Capacity of every source/sink partition of the ordinary nodes, vectorized."""
    n = net.num_nodes - 2
    fwd = np.arange(0, len(net.tail), 2)
    u, v, cap = net.tail[fwd], net.head[fwd], net.capacity[fwd]
    out = np.empty(1 << n)
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n))
        side = np.zeros((len(codes), n + 2), dtype=bool)
        side[:, :n] = (codes[:, None] >> np.arange(n)) & 1
        side[:, n] = True
        out[codes] = (side[:, u] & ~side[:, v]) @ cap
    return out


def length_energy(cc, data, nu, labels):
    """Data energy plus nu times the length of the labeling's boundary (border included)."""
    labels = np.asarray(labels, dtype=float)
    jump = np.zeros(cc.num_edges)
    for k in range(2):
        f = cc.edge_faces[:, k]
        ok = f >= 0
        jump[ok] += cc.edge_signs[ok, k] * labels[f[ok]]
    return data.offset + data.costs @ labels + nu * np.abs(jump) @ cc.edge_length


def random_network(rng, n, density=0.3):
    arcs = []
    for u in range(n):
        if rng.random() < 0.6:
            arcs.append((-1, u, rng.uniform(0, 5)))
        if rng.random() < 0.6:
            arcs.append((u, -2, rng.uniform(0, 5)))
        for v in range(n):
            if u != v and rng.random() < density:
                arcs.append((u, v, rng.uniform(0, 3)))
    return network_from_arcs(n, arcs)


def test_single_node():
    net = network_from_arcs(1, [(-1, 0, 5.0), (0, -2, 3.0)])
    value, side = min_cut(net)
    assert value == 3.0
    assert side.tolist() == [True]


def test_disconnected_terminals():
    net = network_from_arcs(3, [(0, 1, 2.0), (1, 2, 1.0)])
    assert min_cut(net)[0] == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_twenty_node_networks(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 20, density=0.15)
    value, side = min_cut(net)
    assert value == pytest.approx(all_cut_values(net).min(), abs=1e-9)
    assert cut_value(net, side) == pytest.approx(value, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 9))
def test_small_networks(seed, n):
    net = random_network(np.random.default_rng(seed), n)
    value, side = min_cut(net)
    assert value == pytest.approx(all_cut_values(net).min(), abs=1e-9)
    assert brute_force_cut(net)[0] == pytest.approx(value, abs=1e-9)
    assert cut_value(net, side) == pytest.approx(value, abs=1e-9)


def test_no_length_term():
    cc = build_complex(2, 2, 8)
    rng = np.random.default_rng(1)
    d = DataCost(rng.normal(size=16), 4.0)
    labels, energy = segment_mincut(cc, d, 0.0)
    assert energy == pytest.approx(d.offset + np.minimum(d.costs, 0).sum())
    assert np.array_equal(labels, (d.costs < 0).astype(np.int8))
    assert build_network(cc, d, 0.0).tail.size == 2 * 16


def test_uniform_background():
    cc = build_complex(3, 3, 8)
    labels, energy = segment_mincut(cc, DataCost(np.full(36, 2.0), 7.0), 1.0)
    assert not labels.any() and energy == 7.0


@pytest.mark.parametrize("nu", [0.1, 1.0, 10.0])
def test_exhaustive_labelings(nu):
    cc = build_complex(2, 2, 8)
    rng = np.random.default_rng(int(nu * 10))
    d = DataCost(rng.normal(0, 3, 16), 2.0)
    labels, energy = segment_mincut(cc, d, nu)
    codes = np.arange(1 << 16)
    bits = (codes[:, None] >> np.arange(16)) & 1
    jump = np.zeros((len(codes), cc.num_edges))
    for k in range(2):
        f = cc.edge_faces[:, k]
        ok = np.flatnonzero(f >= 0)
        jump[:, ok] += cc.edge_signs[ok, k] * bits[:, f[ok]]
    totals = d.offset + bits @ d.costs + nu * np.abs(jump) @ cc.edge_length
    assert energy == pytest.approx(totals.min(), abs=1e-9)
    assert length_energy(cc, d, nu, labels) == pytest.approx(energy, abs=1e-9)


def test_bad_inputs():
    cc = build_complex(1, 1, 8)
    with pytest.raises(ValueError):
        build_network(cc, DataCost(np.zeros(3)), 1.0)
    with pytest.raises(ValueError):
        build_network(cc, DataCost(np.zeros(4)), -1.0)
    with pytest.raises(ValueError):
        network_from_arcs(2, [(0, 1, -1.0)])
