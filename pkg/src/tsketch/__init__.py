"""Trapezoidal count-min sketches with variable counter widths."""

from .analytics import AnalyticContext
from .baselines import RSketch, cm_sketch, cu_sketch
from .config import (
    CapacityPlan,
    SpaceReport,
    capacity_improvement_geometry,
    optimize_capacity,
    solve_extra_layers,
    space_saving_geometry,
)
from .counters import LayerArray
from .sketch import (
    FormatError,
    GeometryError,
    QueryResult,
    SketchGeometry,
    TSketch,
    Variant,
    deserialize,
    serialize,
)

__all__ = [
    "AnalyticContext",
    "CapacityPlan",
    "FormatError",
    "GeometryError",
    "LayerArray",
    "QueryResult",
    "RSketch",
    "SketchGeometry",
    "SpaceReport",
    "TSketch",
    "Variant",
    "capacity_improvement_geometry",
    "cm_sketch",
    "cu_sketch",
    "deserialize",
    "optimize_capacity",
    "serialize",
    "solve_extra_layers",
    "space_saving_geometry",
]
