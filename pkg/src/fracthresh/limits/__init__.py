"""Independent evaluation of the limiting motions.

Velocity constants, fractional curvature, exact radius laws for balls and
a numerical check of the differentiation identity used in the consistency
argument.
"""
from .constants import ExtrapolationError, LimitConstant, limit_constant, richardson_tail_limit
from .curvature import CurvatureResult, ball_curvature, ball_level, fractional_curvature, half_space_level
from .lemma import IdentityReport, QuadraticFamily, verify_level_set_identity
from .profile import RadialProfile, sphere_area
from .radius import LawKind, RadiusLaw, radius_law, unit_ball_curvature

__all__ = [
    "ExtrapolationError", "LimitConstant", "limit_constant", "richardson_tail_limit",
    "CurvatureResult", "ball_curvature", "ball_level", "fractional_curvature", "half_space_level",
    "IdentityReport", "QuadraticFamily", "verify_level_set_identity",
    "RadialProfile", "sphere_area",
    "LawKind", "RadiusLaw", "radius_law", "unit_ball_curvature",
]
