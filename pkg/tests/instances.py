"""Small constructed inputs shared by the unit and acceptance tests."""
import os

import numpy as np
import scipy.sparse as sp

from curvcomplex.cell_complex import build_complex
from curvcomplex.energy import DataCost
from curvcomplex.model import EQ, GE, LE, LinearModel
from oracles import _crosses

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
SEGMENTATION_INSTANCES = ("disk", "ellipse", "blocks", "camera", "coins")


def ring_pairs(cc, f):
    """Pairs tracing face ``f`` counter-clockwise, found from the vertex ring."""
    ring = [int(v) for v in cc.faces[f]]
    t, h = cc.line_tail, cc.line_head
    lookup = {(int(t[a]), int(h[a]), int(h[b])): k for k, (a, b) in enumerate(cc.pairs)}
    k = len(ring)
    return [lookup[(ring[i - 1], ring[i], ring[(i + 1) % k])] for i in range(k)]


def touching_triangles():
    """Bottom and right triangles of one Conn8 pixel, each traced as its own cycle.

    Returns ``(complex, face labels, pair ids)``.  The two cycles run along
    their shared diagonal in opposite directions.
    """
    cc = build_complex(1, 1, 8)
    centre = cc.vertices.tolist().index([1, 1])
    bottom = right = None
    for f, ring in enumerate(cc.faces):
        c = cc.vertices[ring].mean(axis=0)
        if centre in ring and c[1] > 1:
            bottom = f
        if centre in ring and c[0] > 1:
            right = f
    labels = np.zeros(cc.num_faces)
    labels[[bottom, right]] = 1
    return cc, labels, ring_pairs(cc, bottom) + ring_pairs(cc, right)


# faces of a 2x2 Conn8 complex touching its centre vertex, in face order
_CENTRE_FACES = [2, 3, 4, 6, 9, 11, 12, 13]


def crossing_gadget(pattern=42, strength=400.0):
    """2x2 Conn8 data costs whose relaxation wants an X-crossing at the centre.

    Faces around the centre vertex selected by ``pattern`` (bit i = i-th
    face in angular order) strongly prefer the foreground; all others the
    background.  Pattern 42 gives three separate wedges, and without
    crossing rows the relaxation routes their boundaries through the centre
    as crossing pairs.
    """
    cc = build_complex(2, 2, 8)
    centre = cc.vertices.tolist().index([cc.scale, cc.scale])
    touch = [f for f in range(cc.num_faces) if centre in cc.faces[f]]
    assert touch == _CENTRE_FACES
    c = np.full(cc.num_faces, strength)
    for i, f in enumerate(touch):
        if (pattern >> i) & 1:
            c[f] = -strength
    return cc, DataCost(c * cc.face_area, 0.0)


def thin_bar_image(seed=7):
    """32x32 image of a 1-pixel bar on row 16 whose columns 14-16 are replaced by noise."""
    rng = np.random.default_rng(seed)
    img = 20 + rng.normal(0, 5, (32, 32))
    img[16, 3:29] = 230 + rng.normal(0, 5, 26)
    img[16, 14:17] = rng.normal(90, 20, 3)
    return np.clip(np.round(img), 0, 255)


def straight_edge_image(size=10, low=50.0, high=200.0, row=5):
    img = np.full((size, size), low)
    img[row:, :] = high
    return img


def square_hole(size=10, lo=3, hi=7):
    mask = np.zeros((size, size), dtype=bool)
    mask[lo:hi, lo:hi] = True
    return mask


def active_crossings(cc, pairs):
    xy = cc.vertices.astype(float)
    t, h = cc.line_tail, cc.line_head
    found = []
    for i in pairs:
        for j in pairs:
            if i < j and cc.pair_node[i] == cc.pair_node[j]:
                pa = (t[cc.pairs[i, 0]], h[cc.pairs[i, 1]])
                pb = (t[cc.pairs[j, 0]], h[cc.pairs[j, 1]])
                if _crosses(xy, cc.pair_node[i], pa, pb):
                    found.append((i, j))
    return found


def make_model(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, lower=None, upper=None,
               ge_rows=()):
    """LinearModel from linprog-style data; rows listed in ``ge_rows`` are negated to >=."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    blocks, sense, rhs = [], [], []
    if A_eq is not None and len(A_eq):
        blocks.append(np.asarray(A_eq, float))
        sense += [EQ] * len(A_eq)
        rhs += list(b_eq)
    if A_ub is not None and len(A_ub):
        A_ub = np.asarray(A_ub, float).copy()
        b_ub = np.asarray(b_ub, float).copy()
        s = [LE] * len(A_ub)
        for i in ge_rows:
            A_ub[i] *= -1
            b_ub[i] *= -1
            s[i] = GE
        blocks.append(A_ub)
        sense += s
        rhs += list(b_ub)
    A = sp.csr_matrix(np.vstack(blocks)) if blocks else sp.csr_matrix((0, n))
    lower = np.zeros(n) if lower is None else np.asarray(lower, float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
    return LinearModel(c, A, np.array(sense, dtype="<U1"), np.array(rhs, dtype=float),
                       lower.copy(), upper.copy(), np.zeros(n, dtype=bool),
                       [f"x{j}" for j in range(n)], [f"r{i}" for i in range(len(rhs))])


def random_lp(rng, n, feasible=True):
    me = int(rng.integers(0, 3))
    mu = int(rng.integers(1, 4))
    A_eq = rng.integers(-3, 4, (me, n)).astype(float)
    A_ub = rng.integers(-3, 4, (mu, n)).astype(float)
    lo = -rng.integers(0, 3, n).astype(float)
    up = rng.integers(1, 4, n).astype(float)
    x0 = rng.uniform(lo, up)
    b_eq = A_eq @ x0
    b_ub = A_ub @ x0 + rng.uniform(0, 2, mu)
    if not feasible:
        # a row demanding more than the box allows
        row = rng.integers(1, 3, n).astype(float)
        A_ub = np.vstack([A_ub, -row])
        b_ub = np.append(b_ub, -(row @ up) - 1.0)
    c = rng.integers(-5, 6, n).astype(float)
    return c, A_eq, b_eq, A_ub, b_ub, lo, up


def beale():
    # the classic instance on which textbook simplex with the largest-coefficient rule cycles
    c = [-0.75, 20, -0.5, 6]
    A_ub = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    b_ub = [0, 0, 1]
    return c, A_ub, b_ub
