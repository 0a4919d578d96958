"""Numerical toolkit for immersed surfaces in R^n.

Curvature of parametrised charts, adaptive surface quadrature, area density
and monotonicity, sphere inversion, multiscale flatness of point samples,
and end counting on truncated complete surfaces.
"""
from .errors import (BasePointOnSurface, CompactSource, DegenerateCloud, DegenerateImmersion, EmptyBall,
                     InputError, MissingTangents, NonConvergent, NonManifold, NumericalError, ParseError,
                     SamplingTooCoarse, TruncationUnsound, Unstable, WillmoreLabError)
from .chart import LocalGeometry, SurfaceChart, chart_from_function
from .quadrature import Ball, Band, QuadratureResult, annulus, integrate, subdivide
from .catalog import CatalogEntry, as_charts, get_surface, symbolic_chart
from .measure import (DensityProfile, MonotonicityLedger, density_at_infinity, density_ratio,
                      monotonicity_check, point_density, radial_deviation_energy, willmore_energy)
from .inversion import (antisymmetry_check, density_formula_check, density_identity_check, invert,
                        punctured_density_identity_check)
from .plane import Plane2
from .flatness import (PointSample, best_fit_plane, flatness_at, lipschitz_decompose, reifenberg_scan,
                       tilt_excess)
from .mesh import TriMesh, load_mesh, sample_mesh
from .topology import count_ends, euler_genus, finite_topology_verdict, ilmanen_inequality_check

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
