"""Polar-transform quadrature for second-order curved triangles."""
from .element import CurvedTriangle, EdgeParam
from .quadrature import (QuadratureRule, RuleSelection, apply_rule, build_rule,
                         fallback_rule, select_rule, sigma)

__all__ = [
    "CurvedTriangle",
    "EdgeParam",
    "QuadratureRule",
    "RuleSelection",
    "apply_rule",
    "build_rule",
    "fallback_rule",
    "select_rule",
    "sigma",
]
__version__ = "0.1.0"
