"""Region data costs and boundary (line / line-pair) costs."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .cell_complex import CellComplex

PROB_FLOOR = 1e-8


class WeightMode(str, enum.Enum):
    ANGLE_POWER = "angle"
    BRUCKSTEIN = "bruckstein"


@dataclass(frozen=True)
class EnergyParams:
    nu: float = 0.0
    lam: float = 0.0
    p: float = 2.0
    weight_mode: WeightMode = WeightMode.ANGLE_POWER

    def __post_init__(self):
        if self.nu < 0 or self.lam < 0:
            raise ValueError("length and curvature weights must be non-negative")
        if not self.p > 0:
            raise ValueError("curvature exponent must be positive")
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))


@dataclass
class DataCost:
    """Per-face cost of the foreground label relative to background.

    ``offset`` is the energy of the all-background labeling, so that
    ``offset + costs @ labels`` is the full data energy.
    """

    costs: np.ndarray
    offset: float = 0.0

    def __len__(self):
        return len(self.costs)


def _per_face(cc: CellComplex, per_pixel: np.ndarray) -> np.ndarray:
    px = cc.face_pixel
    return per_pixel[px[:, 1], px[:, 0]] * cc.face_area


def _check_shape(image: np.ndarray, cc: CellComplex):
    if image.size == 0:
        raise ValueError("empty image")
    if image.shape[:2] != (cc.height, cc.width):
        raise ValueError(f"image shape {image.shape[:2]} does not match complex "
                         f"{(cc.height, cc.width)}")


def data_cost_unsupervised(image, cc: CellComplex, mu0=None, mu1=None) -> DataCost:
    """Two-phase piecewise-constant (Mumford-Shah) data term."""
    image = np.asarray(image, dtype=float)
    _check_shape(image, cc)
    if image.ndim != 2:
        raise ValueError("unsupervised data term expects a grayscale image")
    mu0 = float(image.min()) if mu0 is None else float(mu0)
    mu1 = float(image.max()) if mu1 is None else float(mu1)
    g0 = (image - mu0) ** 2
    g1 = (image - mu1) ** 2
    return DataCost(_per_face(cc, g1 - g0), float(g0.sum()))


def color_histogram(pixels: np.ndarray, bins: int, smoothing: float) -> np.ndarray:
    """Smoothed, normalized joint histogram of 8-bit color samples."""
    pixels = np.atleast_2d(np.asarray(pixels))
    idx = np.clip((pixels.astype(np.int64) * bins) // 256, 0, bins - 1)
    nch = idx.shape[1]
    hist = np.zeros((bins,) * nch)
    np.add.at(hist, tuple(idx.T), 1.0)
    if smoothing > 0:
        hist = ndimage.gaussian_filter(hist, smoothing, mode="constant", truncate=3.0)
    return hist / hist.sum()


def data_cost_histogram(image, seeds, cc: CellComplex, bins: int = 8,
                        smoothing: float = 1.0, floor: float = PROB_FLOOR) -> DataCost:
    """Log-likelihood data term from color histograms of seeded pixels.

    ``seeds`` is a label array with 0 = none, 1 = background, 2 = foreground.
    The foreground label costs -log p_F and the background label -log p_B.
    """
    image = np.asarray(image)
    _check_shape(image, cc)
    seeds = np.asarray(seeds)
    if image.ndim == 2:
        image = image[:, :, None]
    fg, bg = seeds == 2, seeds == 1
    if not fg.any() or not bg.any():
        raise ValueError("histogram data term needs both foreground and background seeds")
    flat = image.reshape(-1, image.shape[2])
    p_f = color_histogram(image[fg], bins, smoothing)
    p_b = color_histogram(image[bg], bins, smoothing)
    idx = tuple(np.clip((flat.astype(np.int64) * bins) // 256, 0, bins - 1).T)
    pf = np.maximum(p_f[idx], floor).reshape(image.shape[:2])
    pb = np.maximum(p_b[idx], floor).reshape(image.shape[:2])
    g1, g0 = -np.log(pf), -np.log(pb)
    return DataCost(_per_face(cc, g1 - g0), float(g0.sum()))


def turning_angle(d1, d2) -> np.ndarray:
    """Absolute exterior angle between direction vectors, in [0, pi]."""
    d1, d2 = np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    dot = d1[..., 0] * d2[..., 0] + d1[..., 1] * d2[..., 1]
    return np.abs(np.arctan2(cross, dot))


def curvature_weight(theta, len1, len2, params: EnergyParams) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if params.weight_mode == WeightMode.ANGLE_POWER:
        return theta ** params.p
    m = np.minimum(len1, len2)
    return m * (theta / m) ** params.p


def length_cost(cc: CellComplex, nu: float, lines=None) -> np.ndarray:
    """nu * edge length for each oriented line (all lines by default)."""
    lengths = cc.line_length
    if lines is not None:
        lengths = lengths[np.asarray(lines)]
    return nu * lengths


def pair_cost_parts(cc: CellComplex, params: EnergyParams, pairs=None, directions=None):
    """Return (length part, curvature part) of the cost of each line pair.

    ``directions`` optionally replaces the (first, second) unit directions
    used for the turning angle, shape (P, 2, 2).
    """
    pairs = cc.pairs if pairs is None else cc.pairs[np.asarray(pairs)]
    l1, l2 = pairs[:, 0], pairs[:, 1]
    e1, e2 = l1 // 2, l2 // 2
    full1, full2 = cc.edge_length[e1], cc.edge_length[e2]
    eff1 = np.where(cc.on_border[e1], 0.0, full1)
    eff2 = np.where(cc.on_border[e2], 0.0, full2)
    length_part = params.nu * 0.5 * (eff1 + eff2)
    if params.lam == 0:
        return length_part, np.zeros(len(pairs))
    if directions is None:
        dirs = cc.line_direction
        d1, d2 = dirs[l1], dirs[l2]
    else:
        d1, d2 = directions[:, 0], directions[:, 1]
    theta = turning_angle(d1, d2)
    w = curvature_weight(theta, full1, full2, params)
    corner = cc.is_corner_vertex()[cc.line_head[l1]]
    w = np.where(corner, 0.0, w)
    return length_part, params.lam * w


def pair_costs(cc: CellComplex, params: EnergyParams, pairs=None, directions=None) -> np.ndarray:
    a, b = pair_cost_parts(cc, params, pairs, directions)
    return a + b


def pair_cost(cc: CellComplex, p: int, params: EnergyParams) -> float:
    return float(pair_costs(cc, params, [p])[0])


def total_turning(cc: CellComplex, pair_ids) -> float:
    dirs = cc.line_direction
    pr = cc.pairs[np.asarray(pair_ids)]
    return float(turning_angle(dirs[pr[:, 0]], dirs[pr[:, 1]]).sum())
