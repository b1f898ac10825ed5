"""Length-only graph cut baseline on the basic regions of a cell complex.

Every face is a node; faces sharing an edge ``e`` are linked in both
directions with capacity ``nu * |e|``.  Edges on the image border have no
neighbor, so their length cost is folded into the unary term of the single
incident face.  The source side of the cut is the foreground.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

import numpy as np

from .cell_complex import CellComplex
from .energy import DataCost


@dataclass
class FlowNetwork:
    """Directed network with paired residual arcs.

    Arc ``a`` and its reverse ``a ^ 1`` are stored next to each other.
    Node ``num_nodes - 2`` is the source and ``num_nodes - 1`` the sink.
    """

    num_nodes: int
    tail: np.ndarray
    head: np.ndarray
    capacity: np.ndarray
    constant: float = 0.0

    @property
    def source(self) -> int:
        return self.num_nodes - 2

    @property
    def sink(self) -> int:
        return self.num_nodes - 1


def network_from_arcs(num_inner: int, arcs, constant: float = 0.0) -> FlowNetwork:
    """Network with ``num_inner`` ordinary nodes plus source and sink.

    ``arcs`` holds ``(u, v, capacity)``; use ``-1`` for the source and
    ``-2`` for the sink.
    """
    s, t = num_inner, num_inner + 1
    tails, heads, caps = [], [], []
    for u, v, c in arcs:
        if c < 0:
            raise ValueError("negative capacity")
        u = s if u == -1 else t if u == -2 else u
        v = s if v == -1 else t if v == -2 else v
        tails += [u, v]
        heads += [v, u]
        caps += [float(c), 0.0]
    return FlowNetwork(num_inner + 2, np.asarray(tails, dtype=np.int64),
                       np.asarray(heads, dtype=np.int64), np.asarray(caps, dtype=float),
                       constant)


def unary_terms(cc: CellComplex, data: DataCost, nu: float) -> np.ndarray:
    """Foreground cost per face including the length of its border edges."""
    c = np.asarray(data.costs, dtype=float).copy()
    border = np.flatnonzero(cc.on_border)
    faces = cc.edge_faces[border]
    f = np.where(faces[:, 0] >= 0, faces[:, 0], faces[:, 1])
    np.add.at(c, f, nu * cc.edge_length[border])
    return c


def build_network(cc: CellComplex, data: DataCost, nu: float) -> FlowNetwork:
    if len(data.costs) != cc.num_faces:
        raise ValueError("data costs do not match the complex")
    if nu < 0:
        raise ValueError("nu must be non-negative")
    c = unary_terms(cc, data, nu)
    arcs = []
    for f in range(cc.num_faces):
        if c[f] > 0:
            arcs.append((f, -2, c[f]))
        elif c[f] < 0:
            arcs.append((-1, f, -c[f]))
    if nu > 0:
        inner = np.flatnonzero(~cc.on_border)
        for e in inner:
            f, g = cc.edge_faces[e]
            w = nu * cc.edge_length[e]
            arcs.append((int(f), int(g), w))
            arcs.append((int(g), int(f), w))
    constant = float(data.offset + np.minimum(c, 0.0).sum())
    return network_from_arcs(cc.num_faces, arcs, constant)


def _adjacency(net: FlowNetwork):
    order = np.argsort(net.tail, kind="stable")
    start = np.searchsorted(net.tail[order], np.arange(net.num_nodes + 1))
    return [order[start[u]:start[u + 1]].tolist() for u in range(net.num_nodes)]


def min_cut(net: FlowNetwork):
    """Edmonds-Karp max flow; returns (cut value, source-side mask).

    The cut value excludes ``net.constant``.  The returned mask covers the
    ordinary nodes only.
    """
    adj = _adjacency(net)
    head = net.head.tolist()
    res = net.capacity.tolist()
    s, t = net.source, net.sink
    flow = 0.0
    eps = 1e-12
    while True:
        pred = [-1] * net.num_nodes
        pred[s] = -2
        queue = deque([s])
        while queue and pred[t] == -1:
            u = queue.popleft()
            for a in adj[u]:
                v = head[a]
                if pred[v] == -1 and res[a] > eps:
                    pred[v] = a
                    queue.append(v)
        if pred[t] == -1:
            break
        push = np.inf
        v = t
        while v != s:
            a = pred[v]
            push = min(push, res[a])
            v = head[a ^ 1]
        v = t
        while v != s:
            a = pred[v]
            res[a] -= push
            res[a ^ 1] += push
            v = head[a ^ 1]
        flow += push
    reached = np.array([p != -1 for p in pred], dtype=bool)
    return flow, reached[: net.num_nodes - 2]


def cut_value(net: FlowNetwork, side) -> float:
    """Capacity of the cut given the source-side mask of the ordinary nodes."""
    on_source = np.concatenate([np.asarray(side, dtype=bool), [True, False]])
    forward = np.arange(0, len(net.tail), 2)
    u, v = net.tail[forward], net.head[forward]
    crossing = on_source[u] & ~on_source[v]
    return float(net.capacity[forward][crossing].sum())


def brute_force_cut(net: FlowNetwork):
    """Exhaustive minimum cut over all 2^n node partitions."""
    n = net.num_nodes - 2
    if n > 22:
        raise ValueError("too many nodes for exhaustive enumeration")
    best, best_side = np.inf, None
    for bits in product((False, True), repeat=n):
        v = cut_value(net, bits)
        if v < best:
            best, best_side = v, np.array(bits)
    return best, best_side


def segment_mincut(cc: CellComplex, data: DataCost, nu: float):
    """Optimal length-regularized labeling; returns (labels, energy)."""
    net = build_network(cc, data, nu)
    value, side = min_cut(net)
    return side.astype(np.int8), value + net.constant
