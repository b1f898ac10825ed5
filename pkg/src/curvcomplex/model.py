"""Assembly of the segmentation and inpainting integer linear programs.

Three programs share one sparse container, :class:`LinearModel`:

* the length model: one region variable per face and one boundary
  variable per oriented line, tied by one surface-continuation row per edge;
* the curvature model: boundary variables live on line pairs, with
  surface-continuation, boundary-continuation and boundary-consistency
  rows, and optional crossing-prevention rows;
* the inpainting model: the curvature model restricted to a damaged
  component and its retained band, with integral intensity variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cell_complex import CellComplex
from .energy import DataCost, EnergyParams, length_cost, pair_cost_parts

EQ, LE, GE = "E", "L", "G"


@dataclass
class LinearModel:
    """min c'x  s.t.  A x (sense) rhs,  lower <= x <= upper."""

    objective: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    var_names: list
    row_names: list
    name: str = "model"

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def copy(self) -> "LinearModel":
        return LinearModel(self.objective.copy(), self.A.copy(), self.sense.copy(),
                           self.rhs.copy(), self.lower.copy(), self.upper.copy(),
                           self.integer.copy(), list(self.var_names),
                           list(self.row_names), self.name)

    def add_rows(self, block, sense, rhs, names) -> None:
        block = sp.csr_matrix(block, shape=(len(rhs), self.num_vars))
        self.A = sp.vstack([self.A, block], format="csr")
        self.sense = np.concatenate([self.sense, np.broadcast_to(np.asarray(sense), len(rhs))])
        self.rhs = np.concatenate([self.rhs, np.asarray(rhs, dtype=float)])
        self.row_names = self.row_names + list(names)

    def fix(self, variables, values) -> None:
        self.lower[variables] = values
        self.upper[variables] = values

    def validate(self) -> None:
        if self.A.shape[1] != self.num_vars:
            raise ValueError("constraint matrix width does not match the variable count")
        if np.any(self.lower > self.upper):
            raise ValueError("inconsistent variable bounds")
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective must be finite")

    def row_activity(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float)

    def violations(self, x) -> tuple[float, float]:
        """(max bound violation, max row violation) of a point."""
        x = np.asarray(x, dtype=float)
        vb = max(0.0, float(np.max(self.lower - x, initial=0.0)),
                 float(np.max(x - self.upper, initial=0.0)))
        act = self.row_activity(x)
        viol = np.where(self.sense == EQ, np.abs(act - self.rhs),
                        np.where(self.sense == LE, act - self.rhs, self.rhs - act))
        return vb, max(0.0, float(np.max(viol, initial=0.0)))

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        vb, vr = self.violations(x)
        return vb <= tol and vr <= tol


@dataclass
class VariableMap:
    """Provenance of each model variable.

    ``region[f]`` is the variable of face ``f`` (-1 if absent);
    ``boundary_items[k]`` is the pair (or line, for the length model)
    carried by variable ``boundary_offset + k``.
    """

    kind: str
    region: np.ndarray
    boundary_items: np.ndarray
    boundary_offset: int
    faces: np.ndarray
    capacity: float = 1.0
    boundary_of: np.ndarray = field(default=None, repr=False)
    crossing_rows: set = field(default_factory=set, repr=False)
    # share of each boundary variable's cost that is length (the rest is curvature)
    length_part: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.boundary_of is None:
            n = int(self.boundary_items.max()) + 1 if len(self.boundary_items) else 0
            self.boundary_of = np.full(n, -1, dtype=np.int64)
            self.boundary_of[self.boundary_items] = self.boundary_offset + np.arange(
                len(self.boundary_items))

    @property
    def region_vars(self) -> np.ndarray:
        return self.region[self.faces]

    @property
    def boundary_vars(self) -> np.ndarray:
        return self.boundary_offset + np.arange(len(self.boundary_items))

    def boundary_var(self, item: int) -> int:
        if item >= len(self.boundary_of):
            return -1
        return int(self.boundary_of[item])

    def boundary_var_array(self, items) -> np.ndarray:
        items = np.asarray(items, dtype=np.int64)
        out = np.full(len(items), -1, dtype=np.int64)
        inside = items < len(self.boundary_of)
        out[inside] = self.boundary_of[items[inside]]
        return out


def _coo(rows, cols, vals, shape):
    return sp.csr_matrix((np.concatenate(vals).astype(float),
                          (np.concatenate(rows), np.concatenate(cols))), shape=shape)


def _region_incidence(cc: CellComplex, faces, edge_row, region_var):
    rows, cols, vals = [], [], []
    for f in faces:
        for e, s in cc.face_edges[f]:
            rows.append(edge_row[e])
            cols.append(region_var[f])
            vals.append(s)
    return (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
            np.asarray(vals, dtype=float))


def build_length_model(cc: CellComplex, data: DataCost, nu: float):
    """Length-regularized segmentation ILP over regions and oriented lines."""
    nf, ne, nl = cc.num_faces, cc.num_edges, cc.num_lines
    faces = np.arange(nf)
    region = np.arange(nf)
    edge_row = np.arange(ne)
    rr, rc, rv = _region_incidence(cc, faces, edge_row, region)
    lines = np.arange(nl)
    lr = lines // 2
    lv = -cc.line_sign(lines).astype(float)
    A = _coo([rr, lr], [rc, nf + lines], [rv, lv], (ne, nf + nl))
    obj = np.concatenate([data.costs, length_cost(cc, nu)])
    n = nf + nl
    model = LinearModel(
        objective=obj, A=A, sense=np.full(ne, EQ), rhs=np.zeros(ne),
        lower=np.zeros(n), upper=np.ones(n), integer=np.ones(n, dtype=bool),
        var_names=[f"R{f}" for f in range(nf)] + [f"L{l}" for l in range(nl)],
        row_names=[f"S{e}" for e in range(ne)], name="length")
    vmap = VariableMap("length", region, lines, nf, faces, length_part=obj[nf:].copy())
    return model, vmap


def build_pair_model(cc: CellComplex, faces, pair_ids, region_cost, boundary_cost,
                     capacity: float = 1.0, consistency: bool = True,
                     include_crossings: bool = False, kind: str = "curvature",
                     length_part=None):
    """Curvature-type ILP over a face subset and a set of line pairs.

    Rows: surface continuation per edge of the faces, boundary continuation
    per line used by the pairs, boundary consistency per edge (right-hand
    side ``capacity``), and optionally crossing prevention.
    """
    faces = np.asarray(faces, dtype=np.int64)
    pair_ids = np.asarray(pair_ids, dtype=np.int64)
    nf, npairs = len(faces), len(pair_ids)
    region = np.full(cc.num_faces, -1, dtype=np.int64)
    region[faces] = np.arange(nf)
    pv = nf + np.arange(npairs)
    first = cc.pairs[pair_ids, 0]
    second = cc.pairs[pair_ids, 1]

    edges = np.unique(np.concatenate([[e for e, _ in cc.face_edges[f]] for f in faces])) \
        if nf else np.zeros(0, dtype=np.int64)
    edge_row = np.full(cc.num_edges, -1, dtype=np.int64)
    edge_row[edges] = np.arange(len(edges))
    if np.any(edge_row[first // 2] < 0) or np.any(edge_row[second // 2] < 0):
        raise ValueError("pair uses an edge outside the face subset")

    rows, cols, vals = [], [], []
    names = []
    # surface continuation
    rr, rc, rv = _region_incidence(cc, faces, edge_row, region)
    rows += [rr, edge_row[first // 2]]
    cols += [rc, pv]
    vals += [rv, -cc.line_sign(first).astype(float)]
    names += [f"S{e}" for e in edges]
    nrow = len(edges)
    sense = [np.full(len(edges), EQ)]
    rhs = [np.zeros(len(edges))]

    # boundary continuation: inflow(l) - outflow(l) = 0
    used = np.unique(np.concatenate([first, second]))
    line_row = np.full(cc.num_lines, -1, dtype=np.int64)
    line_row[used] = nrow + np.arange(len(used))
    rows += [line_row[second], line_row[first]]
    cols += [pv, pv]
    vals += [np.ones(npairs), -np.ones(npairs)]
    names += [f"C{l}" for l in used]
    nrow += len(used)
    sense.append(np.full(len(used), EQ))
    rhs.append(np.zeros(len(used)))

    if consistency:
        # pairs ending in the negative orientation or starting in the positive one
        ends_neg = (second % 2) == 1
        starts_pos = (first % 2) == 0
        rows += [nrow + edge_row[second[ends_neg] // 2], nrow + edge_row[first[starts_pos] // 2]]
        cols += [pv[ends_neg], pv[starts_pos]]
        vals += [np.ones(ends_neg.sum()), np.ones(starts_pos.sum())]
        names += [f"K{e}" for e in edges]
        nrow += len(edges)
        sense.append(np.full(len(edges), LE))
        rhs.append(np.full(len(edges), float(capacity)))

    n = nf + npairs
    A = _coo(rows, cols, vals, (nrow, n))
    A.sum_duplicates()
    model = LinearModel(
        objective=np.concatenate([np.asarray(region_cost, dtype=float),
                                  np.asarray(boundary_cost, dtype=float)]),
        A=A, sense=np.concatenate(sense), rhs=np.concatenate(rhs),
        lower=np.zeros(n), upper=np.full(n, float(capacity)),
        integer=np.ones(n, dtype=bool),
        var_names=[f"R{f}" for f in faces] + [f"P{p}" for p in pair_ids],
        row_names=names, name=kind)
    vmap = VariableMap(kind, region, pair_ids, nf, faces, capacity=float(capacity),
                       length_part=None if length_part is None
                       else np.asarray(length_part, dtype=float))
    if include_crossings:
        add_crossing_rows(model, vmap, relevant_crossings(cc, vmap))
    return model, vmap


def build_curvature_model(cc: CellComplex, data: DataCost, params: EnergyParams,
                          include_crossings: bool = False, consistency: bool = True,
                          pair_cost_override=None):
    """Curvature (plus length) regularized segmentation ILP on the whole domain."""
    length_part, curv_part = pair_cost_parts(cc, params)
    costs = length_part + curv_part if pair_cost_override is None else pair_cost_override
    return build_pair_model(cc, np.arange(cc.num_faces), np.arange(cc.num_pairs),
                            data.costs, costs, consistency=consistency,
                            include_crossings=include_crossings, length_part=length_part)


def relevant_crossings(cc: CellComplex, vmap: VariableMap) -> np.ndarray:
    """Crossing pairs whose both line pairs are model variables."""
    cr = cc.crossing_pairs()
    if len(cr) == 0:
        return cr
    ok = (vmap.boundary_var_array(cr[:, 0]) >= 0) & (vmap.boundary_var_array(cr[:, 1]) >= 0)
    return cr[ok]


def crossing_block(vmap: VariableMap, crossings, num_vars: int):
    crossings = np.asarray(crossings, dtype=np.int64).reshape(-1, 2)
    k = len(crossings)
    cols = np.concatenate([vmap.boundary_var_array(crossings[:, 0]),
                           vmap.boundary_var_array(crossings[:, 1])])
    rows = np.concatenate([np.arange(k), np.arange(k)])
    return sp.csr_matrix((np.ones(2 * k), (rows, cols)), shape=(k, num_vars))


def add_crossing_rows(model: LinearModel, vmap: VariableMap, crossings) -> int:
    """Append ``y_p + y_q <= capacity`` rows for crossings not yet present."""
    new = [tuple(map(int, c)) for c in np.asarray(crossings).reshape(-1, 2)
           if tuple(map(int, c)) not in vmap.crossing_rows]
    if not new:
        return 0
    block = crossing_block(vmap, new, model.num_vars)
    model.add_rows(block, LE, np.full(len(new), vmap.capacity),
                   [f"X{a}_{b}" for a, b in new])
    vmap.crossing_rows.update(new)
    return len(new)


def fix_seeds(model: LinearModel, vmap: VariableMap, cc: CellComplex, seeds) -> LinearModel:
    """Fix region variables of seeded pixels.

    ``seeds`` is either a label array (0 none, 1 background, 2 foreground)
    or a ``(foreground_mask, background_mask)`` tuple.
    """
    if isinstance(seeds, tuple):
        fg, bg = (np.asarray(m, dtype=bool) for m in seeds)
        if np.any(fg & bg):
            raise ValueError("a pixel is seeded as both foreground and background")
    else:
        seeds = np.asarray(seeds)
        if not np.isin(seeds, (0, 1, 2)).all():
            raise ValueError("seed labels must be 0 (none), 1 (background) or 2 (foreground)")
        fg, bg = seeds == 2, seeds == 1
    if fg.shape != (cc.height, cc.width):
        raise ValueError("seed mask does not match the image")
    px = cc.face_pixel
    for mask, value in ((fg, 1.0), (bg, 0.0)):
        hit = mask[px[:, 1], px[:, 0]]
        var = vmap.region[np.flatnonzero(hit)]
        var = var[var >= 0]
        model.fix(var, value)
    return model


def face_labels(cc: CellComplex, pixel_labels) -> np.ndarray:
    """Per-face labels from a per-pixel array."""
    pixel_labels = np.asarray(pixel_labels)
    return pixel_labels[cc.face_pixel[:, 1], cc.face_pixel[:, 0]]


def boundary_completion(cc: CellComplex, vmap: VariableMap, labels, costs=None,
                        crossings=None) -> np.ndarray:
    """A feasible boundary assignment for an integral binary face labeling.

    At every node the incoming boundary lines are matched to the outgoing
    ones, choosing the cheapest matching by ``costs`` (indexed like the
    boundary variables) when given.  Matchings that use two pairs listed in
    ``crossings`` are skipped.  With labels fixed the boundary problem
    splits into these independent node problems, so the result is optimal.
    """
    from itertools import permutations

    labels = np.asarray(labels)
    full = np.zeros(cc.num_faces, dtype=labels.dtype)
    full[vmap.faces] = labels
    active = active_boundary_lines(cc, full)
    head, tail = cc.line_head, cc.line_tail
    by_node_in, by_node_out = {}, {}
    for l in active:
        by_node_in.setdefault(int(head[l]), []).append(int(l))
        by_node_out.setdefault(int(tail[l]), []).append(int(l))
    lookup = {tuple(p): i for i, p in enumerate(cc.pairs[vmap.boundary_items].tolist())}
    banned = set()
    if crossings is not None:
        for a, b in np.asarray(crossings).reshape(-1, 2).tolist():
            banned.add((a, b))
            banned.add((b, a))
    items = vmap.boundary_items
    y = np.zeros(len(items))
    for v, ins in by_node_in.items():
        outs = by_node_out.get(v, [])
        best, best_c = None, np.inf
        for perm in permutations(outs):
            ks = [lookup.get((a, b)) for a, b in zip(ins, perm)]
            if any(k is None for k in ks):
                continue
            if banned and any((int(items[i]), int(items[j])) in banned
                              for i in ks for j in ks if i < j):
                continue
            c = 0.0 if costs is None else float(sum(costs[k] for k in ks))
            if c < best_c:
                best, best_c = ks, c
            if costs is None:
                break
        if best is None:
            raise ValueError(f"no boundary completion at node {v}")
        y[best] = 1.0
    return y


def active_boundary_lines(cc: CellComplex, labels) -> np.ndarray:
    """Oriented lines with the foreground on their left for a binary labeling."""
    labels = np.asarray(labels)
    out = []
    for e in range(cc.num_edges):
        net = 0
        for f, s in zip(cc.edge_faces[e], cc.edge_signs[e]):
            if f >= 0:
                net += s * labels[f]
        if net > 0:
            out.append(2 * e)
        elif net < 0:
            out.append(2 * e + 1)
    return np.asarray(out, dtype=np.int64)
