"""vfphase: phase planning for curve-constrained guidance.

Fits an arc-length-parametrized constraint curve from demonstrated points and
updates the phase coordinate online by three interchangeable laws (Gauss-Newton
nearest point, minimum-jerk linear quadratic tracking, virtual mechanism)
inside a simulated admittance-controlled plant.
"""

__version__ = "0.1.0"

from .path_model import (  # noqa: F401
    ConstraintPath,
    CurvePoint,
    EdsReport,
    RawTrajectory,
    SpatialPath,
    eds_analyze,
    fit_path,
    nearest_point_bruteforce,
    resample_spatial,
)
