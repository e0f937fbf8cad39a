"""Symmetry tomography of convex bodies: sections, symmetry detection, and
numerical checks of symmetric-section characterizations of bodies of
revolution and ellipsoids."""

from .geom_core import (
    AffineHyperplane,
    AffineMap,
    Chart,
    DegenerateSectionError,
    EmptySectionError,
    GeometryError,
    NotInteriorError,
    chart_of,
    grassmann_distance,
    sample_hyperplanes_through,
    subspace_meet,
)
from .bodies import ConvexBody, Ellipsoid, ImplicitBody, Polytope, centroid_mc, gallery

__version__ = "0.1.0"
