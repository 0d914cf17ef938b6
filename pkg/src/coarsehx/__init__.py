"""Coarse homology of finite metric windows via anti-Cech systems of covers."""
__version__ = "0.1.0"

from .coarse import asdim_bounds, check_separation, cx_lambda_complex, oracle_compare, pd_scenario
from .cover import ball_cover, brick_cover, build_anti_cech, refinement_projection
from .errors import CoarseError, ConstraintError
from .homology import homology, smith_normal_form
from .limit import DirectSystem, element_is_limit_trivial, stable_rank, truncated_colimit
from .pipeline import build_homology_system
from .space import from_graph, from_points, generate

__all__ = [
    "asdim_bounds", "check_separation", "cx_lambda_complex", "oracle_compare", "pd_scenario",
    "ball_cover", "brick_cover", "build_anti_cech", "refinement_projection",
    "CoarseError", "ConstraintError", "homology", "smith_normal_form",
    "DirectSystem", "element_is_limit_trivial", "stable_rank", "truncated_colimit",
    "build_homology_system", "from_graph", "from_points", "generate",
]
