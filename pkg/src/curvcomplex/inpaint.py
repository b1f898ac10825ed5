"""Curvature-regularized inpainting of damaged image components.

Each 4-connected component of the damaged set is solved on its own: the
faces of the damaged pixels get one integral intensity variable each, the
faces of a one-pixel ring of retained pixels around it are fixed to the
known intensities, and boundary pairs carry intensity differences.  Pairs
that leave the retained ring into the damaged region are charged against
the estimated level-line direction of the ring instead of the geometric
direction of their first segment, so that level lines are continued
without bending where possible.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .cell_complex import CellComplex
from .energy import EnergyParams, pair_cost_parts
from .model import add_crossing_rows, build_pair_model, relevant_crossings
from .optimize import (INTEGRALITY_TOL, THRESHOLD_TOL, SegmentOptions, relative_gap,
                       resolve_boundaries)
from .simplex import SolverError, Status, solve

log = logging.getLogger(__name__)

DEFAULT_SIGMA = 1.5
DEFAULT_RHO = 4.0
ISOTROPY_TOL = 1e-9


class InpaintError(ValueError):
    pass


@dataclass
class DamagedComponent:
    pixels: np.ndarray          # (k, 2) damaged pixels as (x, y)
    band: np.ndarray            # (b, 2) retained ring pixels as (x, y)
    low: float
    high: float
    mask: np.ndarray = field(repr=False, default=None)
    band_mask: np.ndarray = field(repr=False, default=None)

    @property
    def span(self) -> float:
        return self.high - self.low


@dataclass
class CoherenceField:
    directions: np.ndarray      # (H, W, 2) unit minor eigenvectors as (dx, dy)
    tensor: np.ndarray          # (H, W, 2, 2) structure tensor in (x, y) order
    defined: np.ndarray         # (H, W) usable direction
    isotropic: np.ndarray       # (H, W) tensor without a preferred direction
    sigma: float = DEFAULT_SIGMA
    rho: float = DEFAULT_RHO


@dataclass
class InpaintResult:
    component: DamagedComponent
    faces: np.ndarray           # damaged faces
    values: np.ndarray          # filled intensity per damaged face
    energy: float
    lower_bound: float
    relative_gap: float
    fractional_count: int
    relaxed_values: np.ndarray = field(repr=False, default=None)
    iterations: int = 0
    wall_time: float = 0.0


def damaged_components(mask, image=None) -> list:
    """4-connected components of the damaged set with their retained ring.

    The ring is the set of undamaged pixels 8-adjacent to the component, so
    every vertex touching a damaged pixel has all its faces in the model.
    """
    mask = np.asarray(mask).astype(bool)
    if not mask.any():
        return []
    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    ring_struct = np.ones((3, 3), dtype=bool)
    out = []
    for k in range(1, count + 1):
        comp = labels == k
        band = ndimage.binary_dilation(comp, structure=ring_struct) & ~mask
        ys, xs = np.nonzero(comp)
        by, bx = np.nonzero(band)
        if len(bx) == 0:
            raise InpaintError("damaged component has no retained neighbors")
        if image is not None:
            vals = np.asarray(image, dtype=float)[band]
            low, high = float(vals.min()), float(vals.max())
        else:
            low = high = 0.0
        out.append(DamagedComponent(np.stack([xs, ys], 1), np.stack([bx, by], 1),
                                    low, high, comp, band))
    return out


def _normalized_blur(values, weight, s):
    num = ndimage.gaussian_filter(values * weight, s, mode="constant", truncate=3.0)
    den = ndimage.gaussian_filter(weight, s, mode="constant", truncate=3.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return out, den


def structure_tensor(image, mask, sigma: float = DEFAULT_SIGMA, rho: float = DEFAULT_RHO):
    """Masked, normalized structure tensor; returns (J, support) with J in (x, y) order."""
    if sigma <= 0 or rho <= 0:
        raise ValueError("sigma and rho must be positive")
    image = np.asarray(image, dtype=float)
    known = (~np.asarray(mask, dtype=bool)).astype(float)
    smooth, den = _normalized_blur(image, known, sigma)
    smooth = np.where(den > 0, smooth, 0.0)
    gy, gx = np.gradient(smooth)
    comps = [gx * gx, gx * gy, gy * gy]
    J = np.zeros(image.shape + (2, 2))
    support = None
    for (i, j), c in zip(((0, 0), (0, 1), (1, 1)), comps):
        val, support = _normalized_blur(c, known, rho)
        val = np.where(support > 0, val, 0.0)
        J[..., i, j] = val
        if i != j:
            J[..., j, i] = val
    return J, support


def minor_direction(J):
    """Unit eigenvector of the smaller eigenvalue and an isotropy flag.

    Signs are made canonical (first nonzero component positive).
    """
    J = np.asarray(J, dtype=float)
    w, v = np.linalg.eigh(J)
    d = v[..., :, 0]
    flip = (d[..., 0] < 0) | ((d[..., 0] == 0) & (d[..., 1] < 0))
    d = np.where(flip[..., None], -d, d)
    iso = (w[..., 1] - w[..., 0]) <= ISOTROPY_TOL * (1.0 + np.abs(w[..., 1]))
    return d, iso


def coherence_directions(image, mask, sigma: float = DEFAULT_SIGMA,
                         rho: float = DEFAULT_RHO) -> CoherenceField:
    """Level-line direction estimate on the retained pixels.

    Directions next to the damaged set are oriented toward it.
    """
    mask = np.asarray(mask, dtype=bool)
    J, support = structure_tensor(image, mask, sigma, rho)
    d, iso = minor_direction(J)
    defined = ~mask & (support > 0) & ~iso
    # orient toward the damaged 8-neighbours
    H, W = mask.shape
    pull = np.zeros((H, W, 2))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            shifted = np.zeros_like(mask)
            ys0, ys1 = max(0, -dy), H - max(0, dy)
            xs0, xs1 = max(0, -dx), W - max(0, dx)
            shifted[ys0:ys1, xs0:xs1] = mask[ys0 + dy:ys1 + dy, xs0 + dx:xs1 + dx]
            pull[..., 0] += shifted * dx
            pull[..., 1] += shifted * dy
    s = np.sum(d * pull, axis=-1)
    d = np.where((s < 0)[..., None], -d, d)
    return CoherenceField(d, J, defined, iso & ~mask, sigma, rho)


def _component_faces(cc: CellComplex, comp: DamagedComponent):
    px = cc.face_pixel
    damaged = comp.mask[px[:, 1], px[:, 0]]
    ring = comp.band_mask[px[:, 1], px[:, 0]]
    return np.flatnonzero(damaged), np.flatnonzero(ring)


def segment_directions(cc: CellComplex, coherence: CoherenceField, edges):
    """Coherence tangent per edge from the tensors of its retained pixels.

    Returns (directions (k, 2), defined (k,)).
    """
    edges = np.asarray(edges, dtype=np.int64)
    J = np.zeros((len(edges), 2, 2))
    count = np.zeros(len(edges))
    for side in (0, 1):
        f = cc.edge_faces[edges, side]
        ok = f >= 0
        p = cc.face_pixel[f[ok]]
        J[ok] += coherence.tensor[p[:, 1], p[:, 0]]
        count[ok] += 1
    J /= np.maximum(count, 1)[:, None, None]
    d, iso = minor_direction(J)
    return d, ~iso & (count > 0)


def build_inpaint_model(cc: CellComplex, image, comp: DamagedComponent, params: EnergyParams,
                        coherence: CoherenceField | None = None):
    """Integral-intensity model of one damaged component (intensities shifted by I_l)."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise InpaintError("inpainting expects a grayscale image")
    damaged, ring = _component_faces(cc, comp)
    faces = np.concatenate([damaged, ring])
    span = comp.span
    is_damaged = np.zeros(cc.num_faces, dtype=bool)
    is_damaged[damaged] = True
    in_model = np.zeros(cc.num_faces, dtype=bool)
    in_model[faces] = True

    edge_in = np.zeros(cc.num_edges, dtype=bool)
    for f in faces:
        for e, _ in cc.face_edges[f]:
            edge_in[e] = True
    pr = cc.pairs
    keep = edge_in[pr[:, 0] // 2] & edge_in[pr[:, 1] // 2]
    pair_ids = np.flatnonzero(keep)

    # vertices touching the damaged faces carry the energy
    hot = np.zeros(len(cc.vertices), dtype=bool)
    for f in damaged:
        hot[cc.faces[f]] = True
    node = cc.pair_node[pair_ids]
    charged = hot[node]

    ef = cc.edge_faces
    touches_damage = (is_damaged[np.where(ef[:, 0] >= 0, ef[:, 0], 0)] & (ef[:, 0] >= 0)) | \
                     (is_damaged[np.where(ef[:, 1] >= 0, ef[:, 1], 0)] & (ef[:, 1] >= 0))
    ring_edge = edge_in & ~touches_damage

    dirs = cc.line_direction
    first, second = pr[pair_ids, 0], pr[pair_ids, 1]
    directions = np.stack([dirs[first], dirs[second]], axis=1)
    if coherence is not None:
        for slot, lines in ((0, first), (1, second)):
            e = lines // 2
            sel = np.flatnonzero(charged & ring_edge[e])
            if len(sel) == 0:
                continue
            t, ok = segment_directions(cc, coherence, e[sel])
            geo = dirs[lines[sel]]
            # orient along the direction of travel of the segment
            t = np.where((np.sum(t * geo, axis=1) < 0)[:, None], -t, t)
            sel, t = sel[ok], t[ok]
            directions[sel, slot] = t

    length_part, curv_part = pair_cost_parts(cc, params, pair_ids, directions)
    costs = np.where(charged, length_part + curv_part, 0.0)
    length_part = np.where(charged, length_part, 0.0)

    model, vmap = build_pair_model(cc, faces, pair_ids, np.zeros(len(faces)), costs,
                                   capacity=span, consistency=True, kind="inpaint",
                                   length_part=length_part)
    model.name = "inpaint"
    # border rows of the sub-complex: the ring faces meet faces outside the model
    px = cc.face_pixel[ring]
    known = image[px[:, 1], px[:, 0]] - comp.low
    model.fix(vmap.region[ring], known)
    model.upper[vmap.region[damaged]] = span
    add_crossing_rows(model, vmap, relevant_crossings(cc, vmap))
    return model, vmap


def inpaint_component(image, comp: DamagedComponent, cc: CellComplex, params: EnergyParams,
                      coherence: CoherenceField | None = None,
                      max_iter: int | None = None) -> InpaintResult:
    start = time.perf_counter()
    damaged, _ = _component_faces(cc, comp)
    if comp.span == 0:
        vals = np.full(len(damaged), comp.low)
        return InpaintResult(comp, damaged, vals, 0.0, 0.0, 0.0, 0, vals.copy(),
                             wall_time=time.perf_counter() - start)
    model, vmap = build_inpaint_model(cc, image, comp, params, coherence)
    relaxed = solve(model, max_iter=max_iter)
    if relaxed.status != Status.OPTIMAL:
        raise SolverError(f"inpainting relaxation ended with status {relaxed.status.value}")
    dv = vmap.region[damaged]
    raw = relaxed.primal[dv]
    rounded = np.clip(np.floor(raw + 0.5 + THRESHOLD_TOL), 0, comp.span)
    values = relaxed.primal[vmap.region_vars].copy()
    values[: len(damaged)] = rounded    # damaged faces come first in the model
    options = SegmentOptions(crossings="eager", max_iter=max_iter)
    final, _ = resolve_boundaries(model, vmap, cc, values, relaxed, np.zeros((0, 2)), options)
    y = final.primal[vmap.boundary_vars]
    frac = int(np.count_nonzero(np.abs(y - np.round(y)) > INTEGRALITY_TOL))
    energy, lower = final.objective, relaxed.objective
    return InpaintResult(comp, damaged, rounded + comp.low, float(energy), float(lower),
                         float(relative_gap(energy, lower)), frac, raw + comp.low,
                         relaxed.iterations + final.iterations, time.perf_counter() - start)


def assemble_output(image, cc: CellComplex, results) -> np.ndarray:
    """Damaged pixels get the area-weighted mean of their filled faces."""
    out = np.asarray(image, dtype=float).copy()
    acc = np.zeros(out.shape)
    area = np.zeros(out.shape)
    covered = np.zeros(out.shape, dtype=bool)
    for r in results:
        px = cc.face_pixel[r.faces]
        np.add.at(acc, (px[:, 1], px[:, 0]), cc.face_area[r.faces] * r.values)
        np.add.at(area, (px[:, 1], px[:, 0]), cc.face_area[r.faces])
        covered |= r.component.mask
    if np.any(covered & (area <= 0)):
        raise InpaintError("a damaged pixel has no filled faces")
    out[covered] = acc[covered] / area[covered]
    return out


def inpaint(image, mask, params: EnergyParams, connectivity=8, sigma: float = DEFAULT_SIGMA,
            rho: float = DEFAULT_RHO, use_coherence: bool = True, max_iter: int | None = None,
            complex_: CellComplex | None = None):
    """Inpaint every damaged component; returns (image, results, complex)."""
    from .cell_complex import build_complex

    image = np.asarray(image, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if image.shape != mask.shape:
        raise InpaintError("mask does not match the image")
    cc = complex_ or build_complex(image.shape[1], image.shape[0], connectivity)
    comps = damaged_components(mask, image)
    coherence = coherence_directions(image, mask, sigma, rho) if use_coherence else None
    results = [inpaint_component(image, c, cc, params, coherence, max_iter) for c in comps]
    return assemble_output(image, cc, results), results, cc
