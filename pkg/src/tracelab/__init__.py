"""tracelab: a numerical laboratory for the sharp boundary-trace
inequality on functions of bounded variation.

The library computes the three integrals of the inequality (boundary
trace, total variation, volume) on a catalog of planar domains, verifies
the closed-form sharp constants of radially symmetric domains, reproduces
the corner and cusp families that obstruct the unit gradient constant, and
estimates the optimal constant on triangle meshes.
"""

from .bv_calculus import (CharacteristicRegion, ConeSlab, CuspSlab,
                          PiecewiseLinear, Shell, SmoothSampled,
                          SublevelOfCallable, TraceReport, cubic_profile,
                          layer_function, report, smooth_profile,
                          surface_integral, total_variation, trace_of,
                          volume_integral)
from .estimator import (EstimateResult, PolyhedralLP, QuotientProblem,
                        SmoothedDescent, certificate_family_bound,
                        minimize_quotient, refine_study)
from .geometry import (Chart, DomainModel, TubularFrame, annulus,
                       boundary_projection, chart_normal,
                       cone_corner_domain, cusp_domain,
                       cusp_normal_curvature, cusp_reach_witness, disc,
                       jacobian_t_coefficients, make_frame,
                       mean_curvature_proxy, reach_estimate,
                       signed_distance, sphere_cap_chart, square_domain,
                       tubular_jacobian, tubular_map, unit_ball_volume)
from .mesh import Mesh, build_mesh, refine_uniform
from .trace_inequality import (AsymptoticFit, FamilySweep,
                               InequalityConstants, cone_family_report,
                               cone_sweep, cusp_family_report, cusp_sweep,
                               fit_exponent, geometric_radii, implied_c1,
                               jminus_sequence, layer_bound_sweep,
                               radial_critical_point, radial_inequality_check,
                               radial_kernel_gap, radial_sharp_c2,
                               shell_bound_sweep, slack)

__version__ = "0.1.0"
