"""Planar cell complex over a pixel grid.

Each pixel is cut into basic regions by straight lines: the two diagonals
(8-connectivity, 4 faces per pixel) or the diagonals plus the eight chords
joining each corner to the midpoints of the two opposite sides
(16-connectivity, 32 faces per pixel).  All vertices are exact integer
points after scaling pixel coordinates by ``scale``.

Coordinates are (x, y) with x the column and y the row of the image.
Edge ``e`` carries two oriented lines: ``2*e`` runs from the
lexicographically smaller endpoint to the larger one (positive
orientation), ``2*e + 1`` runs back.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_INDEX = np.iinfo(np.int32).max


class Connectivity(enum.IntEnum):
    CONN8 = 8
    CONN16 = 16

    @classmethod
    def parse(cls, value) -> "Connectivity":
        if isinstance(value, cls):
            return value
        return cls(int(value))


class ComplexError(ValueError):
    pass


def _segment_intersection(s, t):
    (x1, y1), (x2, y2) = s
    (x3, y3), (x4, y4) = t
    den = (x2 - x1) * (y4 - y3) - (y2 - y1) * (x4 - x3)
    if den == 0:
        return None
    ta = Fraction((x3 - x1) * (y4 - y3) - (y3 - y1) * (x4 - x3), den)
    tb = Fraction((x3 - x1) * (y2 - y1) - (y3 - y1) * (x2 - x1), den)
    if 0 <= ta <= 1 and 0 <= tb <= 1:
        return (x1 + ta * (x2 - x1), y1 + ta * (y2 - y1))
    return None


def _pixel_segments(connectivity: Connectivity):
    h = Fraction(1, 2)
    segs = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0)),
            ((0, 0), (1, 1)), ((1, 0), (0, 1))]
    if connectivity == Connectivity.CONN16:
        segs += [((0, 0), (1, h)), ((0, 0), (h, 1)),
                 ((1, 0), (0, h)), ((1, 0), (h, 1)),
                 ((1, 1), (0, h)), ((1, 1), (h, 0)),
                 ((0, 1), (1, h)), ((0, 1), (h, 0))]
    return [tuple((Fraction(a), Fraction(b)) for a, b in s) for s in segs]


def _trace_faces(vertices, edges):
    """Return the bounded faces of a planar straight-line graph as CCW rings."""
    out = {v: [] for v in range(len(vertices))}
    for a, b in edges:
        out[a].append(b)
        out[b].append(a)
    for v, nbrs in out.items():
        vx, vy = vertices[v]
        nbrs.sort(key=lambda w: math.atan2(vertices[w][1] - vy, vertices[w][0] - vx))
    seen = set()
    rings = []
    for a, b in edges:
        for start in ((a, b), (b, a)):
            if start in seen:
                continue
            ring = []
            u, v = start
            while (u, v) not in seen:
                seen.add((u, v))
                ring.append(u)
                nb = out[v]
                i = nb.index(u)
                u, v = v, nb[(i - 1) % len(nb)]
            area2 = sum(vertices[ring[i]][0] * vertices[ring[(i + 1) % len(ring)]][1]
                        - vertices[ring[(i + 1) % len(ring)]][0] * vertices[ring[i]][1]
                        for i in range(len(ring)))
            if area2 > 0:
                rings.append(ring)
    return rings


@lru_cache(maxsize=None)
def pixel_template(connectivity: Connectivity):
    """Arrangement of one unit pixel: (scale, vertices, edges, faces) in scaled ints."""
    segs = _pixel_segments(connectivity)
    pieces = set()
    for s in segs:
        pts = {s[0], s[1]}
        for t in segs:
            p = _segment_intersection(s, t)
            if p is not None:
                pts.add(p)
        pts = sorted(pts)
        for p, q in zip(pts, pts[1:]):
            pieces.add((p, q))
    coords = sorted({p for e in pieces for p in e})
    scale = 1
    for x, y in coords:
        scale = math.lcm(scale, x.denominator, y.denominator)
    verts = [(int(x * scale), int(y * scale)) for x, y in coords]
    index = {c: i for i, c in enumerate(coords)}
    edges = sorted((index[p], index[q]) for p, q in pieces)
    rings = _trace_faces(verts, edges)
    return scale, tuple(verts), tuple(edges), tuple(tuple(r) for r in rings)


@dataclass(eq=False)
class CellComplex:
    """Immutable cell complex of a ``width`` x ``height`` pixel domain.

    Array attributes (all numpy):

    vertices      (V, 2) scaled integer coordinates
    edges         (E, 2) vertex indices, lexicographically ordered endpoints
    edge_length   (E,) Euclidean length in pixel units
    edge_faces    (E, 2) incident faces, -1 where absent
    edge_signs    (E, 2) incidence of those faces (+1/-1, 0 where absent)
    face_pixel    (F, 2) owning pixel as (x, y)
    face_area     (F,) area in pixel units
    pairs         (P, 2) oriented-line indices (first, second)
    pair_node     (P,) shared vertex
    """

    width: int
    height: int
    connectivity: Connectivity
    scale: int
    vertices: np.ndarray
    edges: np.ndarray
    edge_length: np.ndarray
    edge_faces: np.ndarray
    edge_signs: np.ndarray
    on_border: np.ndarray
    at_corner: np.ndarray
    faces: list
    face_edges: list
    face_pixel: np.ndarray
    face_area2: np.ndarray
    pairs: np.ndarray = field(default=None, repr=False)
    pair_node: np.ndarray = field(default=None, repr=False)
    _crossings: np.ndarray = field(default=None, repr=False)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_lines(self) -> int:
        return 2 * len(self.edges)

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)

    @property
    def face_area(self) -> np.ndarray:
        return self.face_area2 / (2.0 * self.scale ** 2)

    def exact_face_area(self, f: int) -> Fraction:
        return Fraction(int(self.face_area2[f]), 2 * self.scale ** 2)

    def vertex_xy(self, v) -> np.ndarray:
        """Vertex coordinates in pixel units."""
        return self.vertices[v] / self.scale

    # oriented lines -------------------------------------------------------

    @property
    def line_tail(self) -> np.ndarray:
        t = np.empty(self.num_lines, dtype=np.int64)
        t[0::2] = self.edges[:, 0]
        t[1::2] = self.edges[:, 1]
        return t

    @property
    def line_head(self) -> np.ndarray:
        h = np.empty(self.num_lines, dtype=np.int64)
        h[0::2] = self.edges[:, 1]
        h[1::2] = self.edges[:, 0]
        return h

    @property
    def line_vector(self) -> np.ndarray:
        """Integer displacement tail -> head of each oriented line (scaled)."""
        return self.vertices[self.line_head] - self.vertices[self.line_tail]

    @property
    def line_direction(self) -> np.ndarray:
        vec = self.line_vector.astype(float)
        return vec / np.hypot(vec[:, 0], vec[:, 1])[:, None]

    @property
    def line_length(self) -> np.ndarray:
        return np.repeat(self.edge_length, 2)

    @staticmethod
    def line_edge(line):
        return np.asarray(line) // 2

    @staticmethod
    def line_sign(line):
        return 1 - 2 * (np.asarray(line) % 2)

    @staticmethod
    def reverse_line(line):
        return np.asarray(line) ^ 1

    def corner_vertices(self) -> set:
        s = self.scale
        corners = {(0, 0), (self.width * s, 0), (0, self.height * s),
                   (self.width * s, self.height * s)}
        return {v for v, xy in enumerate(map(tuple, self.vertices)) if xy in corners}

    def is_corner_vertex(self) -> np.ndarray:
        s = self.scale
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return (np.isin(x, (0, self.width * s)) & np.isin(y, (0, self.height * s)))

    def border_line_allowed(self) -> np.ndarray:
        """False for the orientation of a border edge that has the outside on its left."""
        ok = np.ones(self.num_lines, dtype=bool)
        b = np.flatnonzero(self.on_border)
        sign = self.edge_signs[b, 0]
        # keep the orientation the single incident face traverses
        ok[2 * b + (sign < 0)] = True
        ok[2 * b + (sign > 0)] = False
        return ok

    # incidences -----------------------------------------------------------

    def incidence_region(self, e: int, f: int) -> int:
        for face, sign in zip(self.edge_faces[e], self.edge_signs[e]):
            if face == f and face >= 0:
                return int(sign)
        return 0

    def incidence_line(self, e: int, line: int) -> int:
        if line // 2 != e:
            return 0
        return 1 if line % 2 == 0 else -1

    def incidence_pair(self, e: int, p: int) -> int:
        return self.incidence_line(e, int(self.pairs[p, 0]))

    # crossings ------------------------------------------------------------

    def crossing_pairs(self) -> np.ndarray:
        if self._crossings is None:
            self._crossings = _enumerate_crossings(self)
        return self._crossings

    def pairs_at(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.pair_node == node)

    def __repr__(self):
        return (f"CellComplex({self.width}x{self.height}, conn={int(self.connectivity)}, "
                f"faces={self.num_faces}, edges={self.num_edges}, pairs={self.num_pairs})")


def build_complex(width: int, height: int, connectivity=Connectivity.CONN8) -> CellComplex:
    """Subdivide a ``width`` x ``height`` pixel rectangle into a cell complex."""
    if width < 1 or height < 1:
        raise ComplexError(f"domain must be at least 1x1, got {width}x{height}")
    connectivity = Connectivity.parse(connectivity)
    scale, tverts, tedges, tfaces = pixel_template(connectivity)
    n_pix = width * height
    if n_pix * len(tfaces) > MAX_INDEX or n_pix * len(tedges) * 2 > MAX_INDEX:
        raise ComplexError("complex too large for 32-bit indices")

    tv = np.asarray(tverts, dtype=np.int64)
    # global vertices: pixel offset + template coordinates, deduplicated
    ys, xs = np.mgrid[0:height, 0:width]
    offs = np.stack([xs.ravel(), ys.ravel()], axis=1) * scale
    allv = (offs[:, None, :] + tv[None, :, :]).reshape(-1, 2)
    verts, inv = np.unique(allv, axis=0, return_inverse=True)
    inv = inv.reshape(n_pix, len(tverts))

    te = np.asarray(tedges, dtype=np.int64)
    ge = inv[:, te].reshape(-1, 2)
    # orient every edge lexicographically (x, then y)
    a, b = verts[ge[:, 0]], verts[ge[:, 1]]
    swap = (a[:, 0] > b[:, 0]) | ((a[:, 0] == b[:, 0]) & (a[:, 1] > b[:, 1]))
    ge[swap] = ge[swap][:, ::-1]
    edges, einv = np.unique(ge, axis=0, return_inverse=True)
    einv = einv.ravel()
    edge_key = {}
    for i, (p, q) in enumerate(edges):
        edge_key[(int(p), int(q))] = i

    faces, face_edges, face_pixel, area2 = [], [], [], []
    edge_faces = np.full((len(edges), 2), -1, dtype=np.int64)
    edge_signs = np.zeros((len(edges), 2), dtype=np.int64)
    slot = np.zeros(len(edges), dtype=np.int64)
    for pix in range(n_pix):
        px, py = pix % width, pix // width
        for ring in tfaces:
            ring_g = [int(inv[pix, v]) for v in ring]
            f = len(faces)
            fe = []
            for i, u in enumerate(ring_g):
                w = ring_g[(i + 1) % len(ring_g)]
                if (u, w) in edge_key:
                    e, s = edge_key[(u, w)], 1
                else:
                    e, s = edge_key[(w, u)], -1
                fe.append((e, s))
                k = slot[e]
                if k >= 2:
                    raise ComplexError(f"edge {e} has more than two faces")
                edge_faces[e, k] = f
                edge_signs[e, k] = s
                slot[e] += 1
            pts = tv[list(ring)]
            a2 = int(np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1]))
            faces.append(np.asarray(ring_g, dtype=np.int64))
            face_edges.append(fe)
            face_pixel.append((px, py))
            area2.append(a2)

    diff = verts[edges[:, 1]] - verts[edges[:, 0]]
    length = np.hypot(diff[:, 0], diff[:, 1]) / scale
    on_border = slot == 1
    cx = np.isin(verts[:, 0], (0, width * scale)) & np.isin(verts[:, 1], (0, height * scale))
    at_corner = cx[edges[:, 0]] | cx[edges[:, 1]]

    cc = CellComplex(
        width=width, height=height, connectivity=connectivity, scale=scale,
        vertices=verts, edges=edges, edge_length=length,
        edge_faces=edge_faces, edge_signs=edge_signs,
        on_border=on_border, at_corner=at_corner,
        faces=faces, face_edges=face_edges,
        face_pixel=np.asarray(face_pixel, dtype=np.int64),
        face_area2=np.asarray(area2, dtype=np.int64),
    )
    cc.pairs, cc.pair_node = enumerate_pairs(cc)
    return cc


def enumerate_pairs(cc: CellComplex):
    """All traversable pairs (l1, l2) with head(l1) == tail(l2).

    U-turns (l2 the reverse of l1) are excluded, as are border orientations
    that would put the outside of the domain on the left.
    """
    allowed = cc.border_line_allowed()
    tail, head = cc.line_tail, cc.line_head
    lines = np.flatnonzero(allowed)
    nv = len(cc.vertices)
    incoming = [[] for _ in range(nv)]
    outgoing = [[] for _ in range(nv)]
    for l in lines:
        incoming[head[l]].append(int(l))
        outgoing[tail[l]].append(int(l))
    firsts, seconds, nodes = [], [], []
    for v in range(nv):
        for l1 in incoming[v]:
            for l2 in outgoing[v]:
                if (l1 ^ 1) == l2:
                    continue
                firsts.append(l1)
                seconds.append(l2)
                nodes.append(v)
    pairs = np.stack([np.asarray(firsts, dtype=np.int64),
                      np.asarray(seconds, dtype=np.int64)], axis=1)
    return pairs, np.asarray(nodes, dtype=np.int64)


def _enumerate_crossings(cc: CellComplex) -> np.ndarray:
    """Unordered pairs of line pairs that cross transversally at their common node."""
    vec = cc.vertices[cc.edges[:, 1]] - cc.vertices[cc.edges[:, 0]]
    out = []
    order = np.argsort(cc.pair_node, kind="stable")
    nodes = cc.pair_node[order]
    bounds = np.flatnonzero(np.diff(nodes)) + 1
    for group in np.split(order, bounds):
        if len(group) < 2:
            continue
        v = int(cc.pair_node[group[0]])
        # cyclic position of each incident edge around v
        e_in = cc.pairs[group, 0] // 2
        e_out = cc.pairs[group, 1] // 2
        incident = np.unique(np.concatenate([e_in, e_out]))
        if len(incident) < 4:
            continue
        angles = []
        for e in incident:
            d = vec[e] if cc.edges[e, 0] == v else -vec[e]
            angles.append(math.atan2(d[1], d[0]))
        rank = {int(e): r for r, e in enumerate(incident[np.argsort(angles)])}
        a = np.array([rank[int(e)] for e in e_in])
        b = np.array([rank[int(e)] for e in e_out])
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        k = len(group)
        i, j = np.triu_indices(k, 1)
        distinct = ((a[i] != a[j]) & (a[i] != b[j]) & (b[i] != a[j]) & (b[i] != b[j]))
        c_in = (lo[i] < a[j]) & (a[j] < hi[i])
        d_in = (lo[i] < b[j]) & (b[j] < hi[i])
        cross = distinct & (c_in != d_in)
        out.append(np.stack([group[i[cross]], group[j[cross]]], axis=1))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    res = np.concatenate(out)
    res.sort(axis=1)
    return res[np.lexsort((res[:, 1], res[:, 0]))]


def dump_mesh(cc: CellComplex) -> str:
    """Plain-text dump of vertices, faces and edges with incidences."""
    lines = [f"complex {cc.width} {cc.height} conn{int(cc.connectivity)} scale {cc.scale}",
             f"vertices {len(cc.vertices)}"]
    lines += [f"v {i} {x} {y}" for i, (x, y) in enumerate(cc.vertices)]
    lines.append(f"faces {cc.num_faces}")
    for f, ring in enumerate(cc.faces):
        px, py = cc.face_pixel[f]
        lines.append(f"f {f} pixel {px} {py} area {cc.exact_face_area(f)} ring "
                     + " ".join(map(str, ring)))
    lines.append(f"edges {cc.num_edges}")
    for e, (p, q) in enumerate(cc.edges):
        inc = " ".join(f"{f}:{'+' if s > 0 else '-'}"
                       for f, s in zip(cc.edge_faces[e], cc.edge_signs[e]) if f >= 0)
        flags = ("B" if cc.on_border[e] else "-") + ("C" if cc.at_corner[e] else "-")
        lines.append(f"e {e} {p} {q} {flags} {inc}")
    return "\n".join(lines) + "\n"
