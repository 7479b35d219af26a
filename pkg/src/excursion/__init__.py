"""Upper bounds for the tail of the maximum of a smooth stationary Gaussian field."""

from .bounds import (
    BoundTable,
    bound_table,
    optimize_direction,
    p_direct_2d,
    p_ec_2d,
    p_record_2d,
    p_record_3d,
    record_ec_gap,
    sharpness_exponent,
    swiss_cheese_bound,
)
from .gauss import barPhi, neg_part_mean, phi, Phi
from .geom2d import (
    CompositeRegion2D,
    Disk,
    GeometryError,
    GeometrySummary2D,
    Polygon2D,
    emptyability,
    is_emptyable,
    summarize,
)
from .geom3d import GeometrySummary3D, Polyhedron3D, polyhedron_summary
from .montecarlo import KernelSpec, TailEstimate, simulate_tail_2d, simulate_tail_3d
from .quadform import FieldModel, QuadFormProblem, hessian_abs_det, hessian_negdef_bound, liwei_expectation

__version__ = "0.1.0"
