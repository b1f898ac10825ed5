"""Curvature regularized image segmentation and inpainting via linear programming.

The image domain is split into a planar cell complex; region variables live
on its faces and boundary variables on pairs of consecutive oriented edges,
which lets an LP relaxation charge the turning angle of region boundaries.
"""
__version__ = "0.1.0"

from .cell_complex import CellComplex, Connectivity, build_complex  # noqa: E402
from .energy import (DataCost, EnergyParams, WeightMode, data_cost_histogram,  # noqa: E402
                     data_cost_unsupervised)
from .model import (LinearModel, VariableMap, build_curvature_model,  # noqa: E402
                    build_length_model, fix_seeds)
from .simplex import LPSolution, Status, resolve_with_bounds, solve  # noqa: E402
from .optimize import SegmentOptions, SegmentationResult, energy_report, segment  # noqa: E402
from .inpaint import inpaint  # noqa: E402

__all__ = [
    "CellComplex", "Connectivity", "build_complex", "DataCost", "EnergyParams", "WeightMode",
    "data_cost_histogram", "data_cost_unsupervised", "LinearModel", "VariableMap",
    "build_curvature_model", "build_length_model", "fix_seeds", "LPSolution", "Status",
    "resolve_with_bounds", "solve", "SegmentOptions", "SegmentationResult", "energy_report",
    "segment", "inpaint",
]
