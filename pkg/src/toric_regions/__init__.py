"""Minimal invariant and globally attracting regions for planar toric
differential inclusions."""

from .errors import (
    AmbiguousClassification,
    ArcsDontMeet,
    ConstructionFailed,
    DeltaTooSmall,
    MonomialOverflow,
    NegativeStoichiometry,
    NoCrossing,
    NonPositiveDelta,
    NotASubfan,
    OutOfBand,
    ParallelGenerators,
    StepCollapse,
    ToricRegionsError,
    UnsupportedFan,
    WitnessFailed,
    ZeroGenerator,
)
from .fan_geometry import (
    Cone2,
    Fan,
    LineGenerator,
    LogPoint,
    PosPoint,
    UncertaintyRegion,
    attracting_direction,
    delta_i,
    dist_to_cone,
    fan_2d_cones,
    normalize_generator,
    polar,
    r_count,
    strip_coordinate,
)
from .region_construction import (
    IntersectionPoint,
    RegionBoundary,
    SlopeClasses,
    choose_start_points,
    compute_slope_classes,
    construct_region,
    conv_hull,
    hull_contains,
    intersection_points,
    phi_level,
    region_contains,
    segment_curve_intersection,
)
from .tdi_rhs import ConeRHS, rhs_bruteforce, rhs_classified, rhs_equal, rhs_subfan_subset

__version__ = "0.1.0"

__all__ = [
    "AmbiguousClassification", "ArcsDontMeet", "ConeRHS", "Cone2",
    "ConstructionFailed", "DeltaTooSmall", "Fan", "IntersectionPoint",
    "LineGenerator", "LogPoint", "MonomialOverflow", "NegativeStoichiometry",
    "NoCrossing", "NonPositiveDelta", "NotASubfan", "OutOfBand",
    "ParallelGenerators", "PosPoint", "RegionBoundary", "SlopeClasses",
    "StepCollapse", "ToricRegionsError", "UncertaintyRegion", "UnsupportedFan",
    "WitnessFailed", "ZeroGenerator", "attracting_direction",
    "choose_start_points", "compute_slope_classes", "construct_region",
    "conv_hull", "delta_i", "dist_to_cone", "fan_2d_cones", "hull_contains",
    "intersection_points", "normalize_generator", "phi_level", "polar",
    "r_count", "region_contains", "rhs_bruteforce", "rhs_classified",
    "rhs_equal", "rhs_subfan_subset", "segment_curve_intersection",
    "strip_coordinate",
]
