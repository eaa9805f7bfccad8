"""Green's functions, Bergman and Hardy-type kernels on circular planar domains."""
from .geometry import (DomainError, DomainSpec, annulus, boundary_distance, circular_domain, contains,
                       parse_domain, sample_boundary, unit_disc)
from .green import GreenEvaluator, bergman_via_green, capacity_c_beta, eval_green, normal_derivative_on_boundary
from .quadrature import build_sublevel_rule, boundary_integral
from .extremal import (ConditioningError, ExtremalResult, HolomorphicBasis, bergman_diagonal, bergman_minimizer,
                       hardy_diagonal, minimize_area_norm, minimize_boundary_norm, solve_constrained)
from .verify import (CheckResult, VerificationReport, check_boundary_limit, check_capacity_limit, check_concavity,
                     check_saitoh, check_sandwich, check_slope_chain, check_suita, run_checks)

__version__ = "0.1.0"
