"""
Metaclust - Reverse-Mode Differentiation
========================================

Float64 tensors, a per-thread computation graph, exact derivative rules
for every primitive (digamma included), and a finite-difference checker.
"""

from .tensor import (
    Tensor,
    Graph,
    GraphEntry,
    GradientMap,
    apply_primitive,
    active_graph,
    as_tensor,
    backward,
)
from .primitives import PRIMITIVES, override_derivative
from .special import digamma, trigamma
from .gradcheck import GradCheckResult, finite_difference_check
from . import ops

__all__ = [
    # Graph
    'Tensor',
    'Graph',
    'GraphEntry',
    'GradientMap',
    'apply_primitive',
    'active_graph',
    'as_tensor',
    'backward',

    # Primitives
    'PRIMITIVES',
    'override_derivative',
    'ops',

    # Special functions
    'digamma',
    'trigamma',

    # Verification
    'GradCheckResult',
    'finite_difference_check',
]
