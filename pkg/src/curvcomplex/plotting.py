"""Figures for segmentation and inpainting runs, written to files."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from .cell_complex import CellComplex  # noqa: E402

DPI = 120


def _show_image(ax, image):
    image = np.asarray(image)
    kw = dict(interpolation="nearest", extent=(0, image.shape[1], image.shape[0], 0))
    if image.ndim == 2:
        ax.imshow(image, cmap="gray", vmin=0, vmax=255, **kw)
    else:
        ax.imshow(image.astype(np.uint8), **kw)
    ax.set_xticks([])
    ax.set_yticks([])


def _face_polygons(cc: CellComplex, faces=None):
    faces = range(cc.num_faces) if faces is None else faces
    xy = cc.vertices / cc.scale
    return [xy[np.asarray(cc.faces[f])] for f in faces]


def boundary_segments(cc: CellComplex, pair_ids) -> np.ndarray:
    """(k, 3, 2) polylines tail -> node -> head for the given line pairs."""
    pair_ids = np.asarray(pair_ids, dtype=np.int64)
    xy = cc.vertices / cc.scale
    pr = cc.pairs[pair_ids]
    a = xy[cc.line_tail[pr[:, 0]]]
    v = xy[cc.pair_node[pair_ids]]
    b = xy[cc.line_head[pr[:, 1]]]
    # draw only the halves next to the node so that consecutive pairs tile the curve
    return np.stack([(a + v) / 2, v, (v + b) / 2], axis=1)


def plot_segmentation(image, cc: CellComplex, result, path, title: str | None = None):
    """Input, thresholded labels with the active boundary, and relaxed region values."""
    fig, axes = plt.subplots(1, 3, figsize=(11, 4))
    _show_image(axes[0], image)
    axes[0].set_title("input")

    _show_image(axes[1], image)
    fg = np.flatnonzero(result.labels > 0)
    if len(fg):
        axes[1].add_collection(PolyCollection(_face_polygons(cc, fg), facecolors=(1, 0.3, 0.1, 0.35),
                                              edgecolors="none"))
    if len(result.active_pairs) and cc.pairs is not None:
        axes[1].add_collection(LineCollection(boundary_segments(cc, result.active_pairs),
                                              colors="yellow", linewidths=1.2))
    axes[1].set_title("segmentation")

    rel = np.zeros(cc.num_faces) if result.relaxation is None else result.relaxation
    pc = PolyCollection(_face_polygons(cc), array=np.asarray(rel, dtype=float), cmap="viridis",
                        edgecolors="none")
    pc.set_clim(0, 1)
    axes[2].add_collection(pc)
    axes[2].set_xlim(0, cc.width)
    axes[2].set_ylim(cc.height, 0)
    axes[2].set_aspect("equal")
    axes[2].set_xticks([])
    axes[2].set_yticks([])
    axes[2].set_title("relaxed region values")
    fig.colorbar(pc, ax=axes[2], fraction=0.046)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_bound_history(result, path):
    """Relaxation bound after every crossing pass, with the final energy."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    hist = list(result.bound_history)
    ax.plot(range(1, len(hist) + 1), hist, "o-", label="lower bound")
    ax.axhline(result.energy, color="C3", ls="--", label="energy")
    ax.set_xlabel("pass")
    ax.set_ylabel("objective")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_inpainting(image, mask, output, path):
    fig, axes = plt.subplots(1, 3, figsize=(11, 4))
    damaged = np.asarray(image, dtype=float).copy()
    damaged[np.asarray(mask, dtype=bool)] = 0
    for ax, im, name in zip(axes, (image, damaged, output), ("original", "damaged", "inpainted")):
        _show_image(ax, im)
        ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_comparison(image, labels_a, labels_b, path, names=("LP", "min cut")):
    fig, axes = plt.subplots(1, 3, figsize=(11, 4))
    _show_image(axes[0], image)
    axes[0].set_title("input")
    for ax, lab, name in zip(axes[1:], (labels_a, labels_b), names):
        _show_image(ax, np.asarray(lab, dtype=float) * 255)
        ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def figure_path(directory, name):
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, name)
