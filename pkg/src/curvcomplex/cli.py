"""Command-line entry points.

    curvcomplex segment-unsup IMAGE -o MASK.pgm [--report R.txt] [--figures DIR]
    curvcomplex segment-seeds IMAGE --seeds SEEDS.pgm -o MASK.pgm
    curvcomplex inpaint IMAGE --mask MASK.pgm -o OUT.pgm
    curvcomplex export-lp IMAGE -o MODEL.mps [--model length|curvature]
    curvcomplex compare-mincut IMAGE [-o MASK.pgm]

Exit status: 0 on success, 1 on bad input or I/O failure, 3 when the
solver fails.  ``CURVCOMPLEX_ITER_CAP`` overrides the pivot cap.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .baseline_mincut import segment_mincut
from .cell_complex import Connectivity, build_complex
from .energy import EnergyParams, WeightMode, data_cost_histogram, data_cost_unsupervised
from .inpaint import DEFAULT_RHO, DEFAULT_SIGMA, InpaintError, inpaint
from .model import build_curvature_model, build_length_model, fix_seeds
from .mps import write_mps
from .optimize import (SegmentOptions, energy_report, pixel_labels, relative_gap, report_json,
                       report_text, segment)
from .pnm import PNMError, read_image, read_mask, read_seeds, write_image
from .simplex import SolverError, iteration_cap, solve

log = logging.getLogger("curvcomplex")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 3

# defaults per command: (connectivity, nu, lambda)
PRESETS = {
    "segment-unsup": (8, 10.0, 1000.0),
    "segment-seeds": (16, 0.2, 4.0),
    "inpaint": (8, 0.0, 1.0),
    "export-lp": (8, 10.0, 1000.0),
    "compare-mincut": (8, 10.0, 0.0),
}


@dataclass
class RunConfig:
    command: str
    image: str
    output: str | None = None
    seeds: str | None = None
    mask: str | None = None
    connectivity: int = 8
    nu: float = 10.0
    lam: float = 1000.0
    p: float = 2.0
    weights: str = "angle"
    crossings: str = "lazy"
    threshold: float = 0.5
    max_iter: int | None = None
    max_passes: int = 25
    model: str = "curvature"
    mu0: float | None = None
    mu1: float | None = None
    bins: int = 8
    smoothing: float = 1.0
    sigma: float = DEFAULT_SIGMA
    rho: float = DEFAULT_RHO
    coherence: bool = True
    export_mps: str | None = None
    report: str | None = None
    json_report: str | None = None
    figures: str | None = None

    @property
    def params(self) -> EnergyParams:
        return EnergyParams(self.nu, self.lam, self.p, WeightMode(self.weights))

    @property
    def options(self) -> SegmentOptions:
        return SegmentOptions(threshold=self.threshold, crossings=self.crossings,
                              max_passes=self.max_passes, max_iter=self.max_iter)

    def echo(self) -> dict:
        return {"command": self.command, "connectivity": self.connectivity, "nu": self.nu,
                "lambda": self.lam, "p": self.p, "weights": self.weights,
                "crossings": self.crossings, "threshold": self.threshold,
                "iteration_cap": self.max_iter if self.max_iter is not None else iteration_cap()}


def _grayscale(img):
    if img.ndim == 3:
        return img.astype(float) @ np.array([0.299, 0.587, 0.114])
    return img.astype(float)


def _write_reports(cfg: RunConfig, report: dict):
    if cfg.report:
        with open(cfg.report, "w") as fh:
            fh.write(report_text(report))
    if cfg.json_report:
        with open(cfg.json_report, "w") as fh:
            fh.write(report_json(report))


def _segmentation_run(cfg: RunConfig, image, data, seeds=None):
    cc = build_complex(image.shape[1], image.shape[0], cfg.connectivity)
    if cfg.model == "length":
        model, vmap = build_length_model(cc, data, cfg.nu)
    else:
        model, vmap = build_curvature_model(cc, data, cfg.params)
    if seeds is not None:
        fix_seeds(model, vmap, cc, seeds)
    if cfg.export_mps:
        write_mps(model, cfg.export_mps)
    result = segment(model, vmap, cc, cfg.options, offset=data.offset)
    mask = pixel_labels(cc, result)
    if cfg.output:
        write_image(mask * 255, cfg.output)
    report = {**cfg.echo(), "width": cc.width, "height": cc.height,
              "faces": cc.num_faces, "variables": model.num_vars, "rows": model.num_rows,
              **energy_report(result, data)}
    report["objective"] = report["energy"]
    report["foreground_pixels"] = int(mask.sum())
    if cfg.figures:
        from .plotting import figure_path, plot_bound_history, plot_segmentation
        plot_segmentation(image, cc, result, figure_path(cfg.figures, "segmentation.png"),
                          title=f"{cfg.command}: nu={cfg.nu:g} lambda={cfg.lam:g}")
        plot_bound_history(result, figure_path(cfg.figures, "bound_history.png"))
    return report


def run_segment_unsup(cfg: RunConfig) -> dict:
    img = read_image(cfg.image)
    gray = _grayscale(img)
    cc = build_complex(gray.shape[1], gray.shape[0], cfg.connectivity)
    data = data_cost_unsupervised(gray, cc, cfg.mu0, cfg.mu1)
    return _segmentation_run(cfg, img, data)


def run_segment_seeds(cfg: RunConfig) -> dict:
    if not cfg.seeds:
        raise ValueError("segment-seeds needs --seeds")
    img = read_image(cfg.image)
    seeds = read_seeds(cfg.seeds)
    if seeds.shape != img.shape[:2]:
        raise ValueError("seed image does not match the input image")
    cc = build_complex(img.shape[1], img.shape[0], cfg.connectivity)
    data = data_cost_histogram(img, seeds, cc, cfg.bins, cfg.smoothing)
    return _segmentation_run(cfg, img, data, seeds)


def run_inpaint(cfg: RunConfig) -> dict:
    if not cfg.mask:
        raise ValueError("inpaint needs --mask")
    img = read_image(cfg.image)
    if img.ndim != 2:
        raise ValueError("inpainting expects a grayscale (P5) image")
    mask = read_mask(cfg.mask)
    if mask.shape != img.shape:
        raise ValueError("mask does not match the image")
    start = time.perf_counter()
    out, results, cc = inpaint(img, mask, cfg.params, cfg.connectivity, cfg.sigma, cfg.rho,
                               use_coherence=cfg.coherence, max_iter=cfg.max_iter)
    if cfg.output:
        write_image(out, cfg.output)
    energy = float(sum(r.energy for r in results))
    lower = float(sum(r.lower_bound for r in results))
    report = {**cfg.echo(), "sigma": cfg.sigma, "rho": cfg.rho, "coherence": cfg.coherence,
              "width": img.shape[1], "height": img.shape[0],
              "components": len(results), "damaged_pixels": int(mask.sum()),
              "objective": energy, "energy": energy, "lower_bound": lower,
              "relative_gap": relative_gap(energy, lower),
              "passes": 1,
              "fractional_count": int(sum(r.fractional_count for r in results)),
              "component_ranges": [f"{r.component.low:g}:{r.component.high:g}" for r in results],
              "iterations": int(sum(r.iterations for r in results)),
              "wall_time": time.perf_counter() - start}
    if cfg.figures:
        from .plotting import figure_path, plot_inpainting
        plot_inpainting(img, mask, out, figure_path(cfg.figures, "inpainting.png"))
    return report


def run_export_lp(cfg: RunConfig) -> dict:
    if not cfg.output:
        raise ValueError("export-lp needs --output")
    img = read_image(cfg.image)
    gray = _grayscale(img)
    cc = build_complex(gray.shape[1], gray.shape[0], cfg.connectivity)
    if cfg.seeds:
        seeds = read_seeds(cfg.seeds)
        data = data_cost_histogram(img, seeds, cc, cfg.bins, cfg.smoothing)
    else:
        seeds = None
        data = data_cost_unsupervised(gray, cc, cfg.mu0, cfg.mu1)
    if cfg.model == "length":
        model, vmap = build_length_model(cc, data, cfg.nu)
    else:
        model, vmap = build_curvature_model(cc, data, cfg.params,
                                            include_crossings=cfg.crossings == "eager")
    if seeds is not None:
        fix_seeds(model, vmap, cc, seeds)
    start = time.perf_counter()
    write_mps(model, cfg.output)
    report = {**cfg.echo(), "model": cfg.model, "variables": model.num_vars,
              "rows": model.num_rows, "nonzeros": int(model.A.nnz), "offset": data.offset,
              "wall_time": time.perf_counter() - start}
    return report


def run_compare_mincut(cfg: RunConfig) -> dict:
    img = read_image(cfg.image)
    gray = _grayscale(img)
    cc = build_complex(gray.shape[1], gray.shape[0], cfg.connectivity)
    data = data_cost_unsupervised(gray, cc, cfg.mu0, cfg.mu1)
    start = time.perf_counter()
    model, vmap = build_length_model(cc, data, cfg.nu)
    sol = solve(model, max_iter=cfg.max_iter)
    if not sol.optimal:
        raise SolverError(f"length model ended with status {sol.status.value}")
    t_lp = time.perf_counter() - start
    start = time.perf_counter()
    cut_labels, cut_energy = segment_mincut(cc, data, cfg.nu)
    t_cut = time.perf_counter() - start
    lp_energy = sol.objective + data.offset
    lp_labels = (sol.primal[vmap.region_vars] >= 0.5).astype(np.int8)
    if cfg.output:
        px = cc.face_pixel
        fg = np.zeros(gray.shape)
        np.add.at(fg, (px[:, 1], px[:, 0]), cc.face_area * cut_labels)
        write_image((fg >= 0.5 - 1e-9).astype(np.uint8) * 255, cfg.output)
    report = {**cfg.echo(), "lp_energy": lp_energy, "mincut_energy": cut_energy,
              "objective": lp_energy, "lower_bound": lp_energy, "relative_gap": 0.0,
              "difference": lp_energy - cut_energy,
              "label_disagreement": int(np.count_nonzero(lp_labels != cut_labels)),
              "passes": 1, "fractional_count": int(np.count_nonzero(
                  np.abs(sol.primal - np.round(sol.primal)) > 1e-6)),
              "lp_time": t_lp, "mincut_time": t_cut, "wall_time": t_lp + t_cut}
    if cfg.figures:
        from .plotting import figure_path, plot_comparison
        def to_pixels(lab):
            fg = np.zeros(gray.shape)
            np.add.at(fg, (cc.face_pixel[:, 1], cc.face_pixel[:, 0]), cc.face_area * lab)
            return fg
        plot_comparison(img, to_pixels(lp_labels), to_pixels(cut_labels),
                        figure_path(cfg.figures, "mincut_comparison.png"))
    return report


RUNNERS = {
    "segment-unsup": run_segment_unsup,
    "segment-seeds": run_segment_seeds,
    "inpaint": run_inpaint,
    "export-lp": run_export_lp,
    "compare-mincut": run_compare_mincut,
}


def run(cfg: RunConfig) -> int:
    """Execute one configured command; returns the process exit status."""
    try:
        report = RUNNERS[cfg.command](cfg)
        _write_reports(cfg, report)
    except (OSError, PNMError, InpaintError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    if not (cfg.report or cfg.json_report):
        sys.stdout.write(report_text(report))
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, command: str):
    conn, nu, lam = PRESETS[command]
    p.add_argument("image", help="input P5/P6 image")
    p.add_argument("-o", "--output", help="output image (or MPS file for export-lp)")
    p.add_argument("--connectivity", type=int, choices=(8, 16), default=conn)
    p.add_argument("--nu", type=float, default=nu, help="length weight")
    p.add_argument("--lambda", dest="lam", type=float, default=lam, help="curvature weight")
    p.add_argument("--p", type=float, default=2.0, help="curvature exponent")
    p.add_argument("--weights", choices=[m.value for m in WeightMode], default="angle")
    p.add_argument("--crossings", choices=("off", "lazy", "eager"), default="lazy")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--max-iter", type=int, default=None,
                   help="pivot cap (default: CURVCOMPLEX_ITER_CAP or 10^7)")
    p.add_argument("--max-passes", type=int, default=25)
    p.add_argument("--export-mps", metavar="PATH")
    p.add_argument("--report", metavar="PATH", help="key/value report")
    p.add_argument("--json-report", metavar="PATH", help="JSON report")
    p.add_argument("--figures", metavar="DIR", help="write figures into DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvcomplex",
                                     description="Curvature regularized segmentation and "
                                                 "inpainting by linear programming.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment-unsup", help="two-phase piecewise constant segmentation")
    _add_common(p, "segment-unsup")
    p.add_argument("--mu0", type=float, help="background mean (default: image minimum)")
    p.add_argument("--mu1", type=float, help="foreground mean (default: image maximum)")
    p.add_argument("--model", choices=("curvature", "length"), default="curvature")

    p = sub.add_parser("segment-seeds", help="seeded segmentation with color histograms")
    _add_common(p, "segment-seeds")
    p.add_argument("--seeds", required=True, help="seed image: 0 none, 1 background, 2 foreground")
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--model", choices=("curvature", "length"), default="curvature")

    p = sub.add_parser("inpaint", help="fill damaged pixels")
    _add_common(p, "inpaint")
    p.add_argument("--mask", required=True, help="damaged-pixel mask, nonzero = damaged")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--rho", type=float, default=DEFAULT_RHO)
    p.add_argument("--no-coherence", dest="coherence", action="store_false",
                   help="use purely geometric directions at the damaged border")

    p = sub.add_parser("export-lp", help="write the segmentation model as fixed MPS")
    _add_common(p, "export-lp")
    p.add_argument("--seeds")
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--mu0", type=float)
    p.add_argument("--mu1", type=float)
    p.add_argument("--model", choices=("curvature", "length"), default="curvature")

    p = sub.add_parser("compare-mincut", help="length model LP versus graph cut")
    _add_common(p, "compare-mincut")
    p.add_argument("--mu0", type=float)
    p.add_argument("--mu1", type=float)
    return parser


def config_from_args(args) -> RunConfig:
    known = {f for f in RunConfig.__dataclass_fields__}
    values = {k: v for k, v in vars(args).items() if k in known and v is not None}
    cfg = RunConfig(**values)
    # validation that argparse cannot express
    Connectivity.parse(cfg.connectivity)
    cfg.params
    cfg.options
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
