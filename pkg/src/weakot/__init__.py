"""Weak and classical optimal transport on the line, Hopf-Lax splitting and
cost-independence checks for monotone maps in R^n."""

from .classf import (MembershipReport, Profile, SmoothFunctionND, VectorFieldND,
                     build_potential, class_f_test, curl_residual,
                     verify_map_optimality)
from .costs import (CostSpec, CostSplit, add_costs, complement_cost, conjugate,
                    make_custom_cost, make_power_cost, split_proportional,
                    split_sum)
from .errors import (CapabilityError, DomainError, ParameterError, ParseError,
                     ResourceError, ShapeError, WeakOTError)
from .hopflax import (ConvexFunction1D, GridFunction, HopfLaxResult,
                      forward_map, grid_infconv_oracle, hj_residual, hopf_lax,
                      split_cost)
from .ic import ICReport, default_ic_family, ic_check
from .io import parse_measure, serialize_measure
from .measures import (DiscreteMeasure, common_refinement, convex_order_leq,
                       is_majorized, monotone_rearrangement, quantile, uniform)
from .transport import (CouplingReport, EqualityCertificate, brute_force_weak,
                        classical_cost, duality_lower_bound,
                        equality_certificate, optimal_nu1, weak_cost)

__version__ = "0.1.0"
