"""Relax, round and re-solve: the segmentation pipeline on top of the LP solver.

The relaxation is solved first (adding violated crossing rows in passes
when requested), region variables are thresholded, and the boundary
variables are re-solved with the regions fixed.  The reported gap compares
the energy of that integral labeling with the relaxation bound, both
including the constant part of the data term.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .cell_complex import CellComplex
from .energy import DataCost
from .model import (LinearModel, VariableMap, add_crossing_rows, boundary_completion,
                    relevant_crossings)
from .simplex import LPSolution, SolverError, Status, resolve_with_bounds, solve

log = logging.getLogger(__name__)

CROSSING_MODES = ("off", "lazy", "eager")
VIOLATION_TOL = 1e-6
INTEGRALITY_TOL = 1e-6
# relaxed values equal to the threshold up to round-off count as above it
THRESHOLD_TOL = 1e-9
FRACTIONAL_WARN = 12


class PassLimitError(SolverError):
    pass


@dataclass
class SegmentOptions:
    threshold: float = 0.5
    crossings: str = "lazy"
    max_passes: int = 25
    max_iter: int | None = None
    fix_impossible: bool = True

    def __post_init__(self):
        if self.crossings not in CROSSING_MODES:
            raise ValueError(f"crossing mode must be one of {CROSSING_MODES}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly between 0 and 1")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")


@dataclass
class SegmentationResult:
    labels: np.ndarray
    active_pairs: np.ndarray
    energy: float
    lower_bound: float
    relative_gap: float
    passes: int
    fractional_count: int
    offset: float = 0.0
    relaxation: np.ndarray = field(default=None, repr=False)
    boundary_values: np.ndarray = field(default=None, repr=False)
    bound_history: list = field(default_factory=list)
    resolve_passes: int = 0
    threshold_band_count: int = 0
    data_part: float = 0.0
    length_part: float = 0.0
    curvature_part: float = 0.0
    iterations: int = 0
    resolve_objective: float = 0.0
    wall_time: float = 0.0


def relative_gap(energy: float, lower_bound: float) -> float:
    diff = energy - lower_bound
    if energy == 0.0:
        return 0.0 if abs(diff) <= 1e-12 else float("inf")
    return diff / abs(energy)


def _violated(x, cross_vars, capacity):
    if len(cross_vars) == 0:
        return np.zeros(0, dtype=np.int64)
    s = x[cross_vars[:, 0]] + x[cross_vars[:, 1]]
    return np.flatnonzero(s > capacity + VIOLATION_TOL)


def crossing_pass_loop(model: LinearModel, vmap: VariableMap, crossings,
                       previous: LPSolution | None = None, max_passes: int = 25,
                       max_iter: int | None = None, history: list | None = None):
    """Solve, add violated crossing rows, warm re-solve until none is violated.

    Returns ``(solution, passes)``; ``history`` (if given) receives the
    objective after every pass.  ``model`` is extended in place.
    """
    crossings = np.asarray(crossings, dtype=np.int64).reshape(-1, 2)
    cross_vars = np.stack([vmap.boundary_var_array(crossings[:, 0]),
                           vmap.boundary_var_array(crossings[:, 1])], axis=1) \
        if len(crossings) else np.zeros((0, 2), dtype=np.int64)
    sol = resolve_with_bounds(model, previous, max_iter=max_iter) if previous is not None \
        else solve(model, max_iter=max_iter)
    passes = 1
    while True:
        if sol.status != Status.OPTIMAL:
            raise SolverError(f"LP solve ended with status {sol.status.value}")
        if history is not None:
            history.append(sol.objective)
        bad = _violated(sol.primal, cross_vars, vmap.capacity)
        if len(bad) == 0:
            return sol, passes
        if passes >= max_passes:
            raise PassLimitError(f"{len(bad)} crossing rows still violated after "
                                 f"{passes} passes")
        added = add_crossing_rows(model, vmap, crossings[bad])
        if added == 0:
            raise SolverError("violated crossing rows are already part of the model")
        log.info("pass %d: added %d crossing rows", passes, added)
        sol = resolve_with_bounds(model, sol, max_iter=max_iter)
        passes += 1


def impossible_pairs(cc: CellComplex, vmap: VariableMap, face_values) -> np.ndarray:
    """Boundary variables that cannot be active for the given face values.

    A pair is impossible when the edge of its first or second line is
    interior to the modeled faces and both of its faces carry the same value.
    """
    values = np.full(cc.num_faces, np.nan)
    values[vmap.faces] = face_values
    ef = cc.edge_faces
    both = (ef[:, 0] >= 0) & (ef[:, 1] >= 0)
    a = values[np.where(ef[:, 0] >= 0, ef[:, 0], 0)]
    b = values[np.where(ef[:, 1] >= 0, ef[:, 1], 0)]
    flat = both & ~np.isnan(a) & ~np.isnan(b) & (a == b)
    if vmap.kind == "length":
        # boundary items are oriented lines
        dead = flat[vmap.boundary_items // 2]
    else:
        pr = cc.pairs[vmap.boundary_items]
        dead = flat[pr[:, 0] // 2] | flat[pr[:, 1] // 2]
    return vmap.boundary_vars[dead]


def _solve_relaxation(model, vmap, cc, options, history):
    crossings = relevant_crossings(cc, vmap) if options.crossings != "off" \
        else np.zeros((0, 2), dtype=np.int64)
    if options.crossings == "eager":
        add_crossing_rows(model, vmap, crossings)
    if options.crossings == "lazy":
        sol, passes = crossing_pass_loop(model, vmap, crossings, max_passes=options.max_passes,
                                         max_iter=options.max_iter, history=history)
    else:
        sol = solve(model, max_iter=options.max_iter)
        if sol.status != Status.OPTIMAL:
            raise SolverError(f"LP solve ended with status {sol.status.value}")
        history.append(sol.objective)
        passes = 1
    return sol, passes, crossings


def resolve_boundaries(model, vmap, cc, face_values, relaxed, crossings, options):
    """Fix regions to ``face_values`` and re-solve for the boundary variables."""
    region_vars = vmap.region_vars
    model.fix(region_vars, face_values)
    if options.fix_impossible:
        dead = impossible_pairs(cc, vmap, face_values)
        model.fix(dead, 0.0)
    if options.crossings == "lazy":
        return crossing_pass_loop(model, vmap, crossings, previous=relaxed,
                                  max_passes=options.max_passes, max_iter=options.max_iter)
    sol = resolve_with_bounds(model, relaxed, max_iter=options.max_iter)
    if sol.status != Status.OPTIMAL:
        raise SolverError("boundary re-solve with fixed regions ended with status "
                          f"{sol.status.value}")
    return sol, 1


def segment(model: LinearModel, vmap: VariableMap, cc: CellComplex,
            options: SegmentOptions | None = None, offset: float = 0.0) -> SegmentationResult:
    """Binary segmentation by relaxation, thresholding and boundary re-solve.

    ``offset`` is the constant data energy not represented in the model.
    The input model is not modified.
    """
    options = options or SegmentOptions()
    start = time.perf_counter()
    work = model.copy()
    vmap = VariableMap(vmap.kind, vmap.region, vmap.boundary_items, vmap.boundary_offset,
                       vmap.faces, vmap.capacity, vmap.boundary_of, set(vmap.crossing_rows),
                       vmap.length_part)
    history = []
    relaxed, passes, crossings = _solve_relaxation(work, vmap, cc, options, history)
    region = relaxed.primal[vmap.region_vars]
    labels = (region >= options.threshold - THRESHOLD_TOL).astype(np.int8)
    band = int(np.count_nonzero((region > 0.4) & (region < 0.6)))

    final, re_passes = resolve_boundaries(work, vmap, cc, labels.astype(float), relaxed,
                                          crossings, options)
    y = final.primal[vmap.boundary_vars]
    frac = int(np.count_nonzero(np.abs(y - np.round(y)) > INTEGRALITY_TOL))
    if frac > FRACTIONAL_WARN:
        log.warning("%d fractional boundary variables after the re-solve", frac)
    resolve_objective = final.objective + offset
    energy = resolve_objective
    obj = model.objective
    if frac and vmap.kind == "curvature" and vmap.capacity == 1.0:
        # labels fixed: the integral boundary problem splits into node matchings
        y = boundary_completion(cc, vmap, labels, costs=obj[vmap.boundary_vars],
                                crossings=crossings if options.crossings != "off" else None)
        x = final.primal.copy()
        x[vmap.boundary_vars] = y
        energy = float(obj @ x) + offset
    lower = relaxed.objective + offset
    if lower > energy + 1e-6 * (1.0 + abs(energy)):
        raise SolverError("relaxation bound exceeds the energy of a feasible labeling")

    data_part = float(offset + obj[vmap.region_vars] @ labels)
    boundary_total = float(obj[vmap.boundary_vars] @ y)
    length_part = boundary_total if vmap.length_part is None else float(vmap.length_part @ y)
    result = SegmentationResult(
        labels=labels,
        active_pairs=vmap.boundary_items[y > 0.5],
        energy=float(energy),
        lower_bound=float(lower),
        relative_gap=float(relative_gap(energy, lower)),
        passes=passes,
        fractional_count=frac,
        offset=float(offset),
        relaxation=region,
        boundary_values=y,
        bound_history=[h + offset for h in history],
        resolve_passes=re_passes,
        threshold_band_count=band,
        data_part=data_part,
        length_part=length_part,
        curvature_part=boundary_total - length_part,
        iterations=relaxed.iterations + final.iterations,
        resolve_objective=float(resolve_objective),
    )
    result.wall_time = time.perf_counter() - start
    return result


def pixel_labels(cc: CellComplex, result: SegmentationResult) -> np.ndarray:
    """Per-pixel foreground mask: at least half of the pixel area is foreground."""
    fg = np.zeros((cc.height, cc.width))
    px = cc.face_pixel
    np.add.at(fg, (px[:, 1], px[:, 0]), cc.face_area * result.labels)
    return (fg >= 0.5 - 1e-9).astype(np.uint8)


def energy_report(result: SegmentationResult, data_cost: DataCost | None = None,
                  extra: dict | None = None) -> dict:
    """Energy decomposition and gap summary of one run."""
    data_part = result.data_part
    if data_cost is not None:
        data_part = float(data_cost.offset + np.asarray(data_cost.costs) @ result.labels)
    report = {
        "energy": result.energy,
        "lower_bound": result.lower_bound,
        "relative_gap": result.relative_gap,
        "data_part": data_part,
        "length_part": result.length_part,
        "curvature_part": result.curvature_part,
        "offset": result.offset,
        "passes": result.passes,
        "resolve_passes": result.resolve_passes,
        "fractional_count": result.fractional_count,
        "resolve_objective": result.resolve_objective,
        "threshold_band_count": result.threshold_band_count,
        "foreground_faces": int(np.count_nonzero(result.labels)),
        "iterations": result.iterations,
        "wall_time": result.wall_time,
        "bound_history": list(result.bound_history),
    }
    if extra:
        report.update(extra)
    return report


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_format_value(x) for x in v)
    return str(v)


def report_text(report: dict) -> str:
    """Tab-separated key/value lines."""
    return "".join(f"{k}\t{_format_value(v)}\n" for k, v in report.items())


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"
