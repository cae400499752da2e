"""
Metaclust - Finite Difference Gradient Check
============================================

Compares recorded reverse-mode gradients against central differences.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError, DomainError, NumericalError
from .tensor import Graph, Tensor, backward


@dataclass
class GradCheckResult:
    """Outcome of a finite difference check"""
    max_relative_error: float
    worst_parameter: Optional[str]
    worst_coordinate: Optional[Tuple[int, ...]]
    coordinates_checked: int

    def to_dict(self) -> Dict:
        return {
            'max_relative_error': self.max_relative_error,
            'worst_parameter': self.worst_parameter,
            'worst_coordinate': list(self.worst_coordinate) if self.worst_coordinate else None,
            'coordinates_checked': self.coordinates_checked,
        }


def _as_named(params) -> List[Tensor]:
    named = []
    for i, p in enumerate(params):
        t = p if isinstance(p, Tensor) else Tensor(p)
        named.append(Tensor(np.array(t.values, dtype=np.float64), name=t.name or f"p{i}"))
    return named


def finite_difference_check(
    function: Callable[[Sequence[Tensor]], Tensor],
    params: Sequence,
    step: float = 1e-5,
    max_coordinates: Optional[int] = None,
    seed: int = 0,
) -> GradCheckResult:
    """
    Check analytic gradients of a scalar function against central differences.

    Args:
        function: Maps a list of tensors to a scalar tensor
        params: Parameter arrays or tensors (copied; callers' arrays untouched)
        step: Central difference half-width
        max_coordinates: Optional per-parameter cap on checked coordinates
            (sampled without replacement)
        seed: Seed for coordinate sampling

    Returns:
        GradCheckResult with the max over coordinates of
        |analytic - numeric| / max(1, |analytic|)

    Raises:
        ContractError: If step is not positive
        NumericalError: If the function is not finite at a perturbed point
    """
    if step <= 0:
        raise ContractError(f"step must be > 0, got {step}")
    named = _as_named(params)

    with Graph() as graph:
        tracked = [graph.watch(p) for p in named]
        loss = function(tracked)
    analytic = backward(loss, graph, [p.name for p in named])

    rng = np.random.default_rng(seed)
    worst = (0.0, None, None)
    checked = 0
    for param in named:
        flat = param.values.reshape(-1)
        coords = np.arange(flat.size)
        if max_coordinates is not None and flat.size > max_coordinates:
            coords = np.sort(rng.choice(flat.size, size=max_coordinates, replace=False))
        grad = analytic[param.name].reshape(-1)

        for i in coords:
            coordinate = np.unravel_index(i, param.shape)
            original = flat[i]
            try:
                flat[i] = original + step
                upper = function(named).item()
                flat[i] = original - step
                lower = function(named).item()
            except (NumericalError, DomainError):
                upper = lower = float("nan")
            finally:
                flat[i] = original

            if not (np.isfinite(upper) and np.isfinite(lower)):
                raise NumericalError(
                    f"non-finite value probing {param.name}{list(coordinate)}",
                    index=(param.name, coordinate),
                )
            numeric = (upper - lower) / (2.0 * step)
            error = abs(grad[i] - numeric) / max(1.0, abs(grad[i]))
            checked += 1
            if error > worst[0] or worst[1] is None:
                worst = (error, param.name, tuple(int(c) for c in coordinate))

    return GradCheckResult(
        max_relative_error=float(worst[0]),
        worst_parameter=worst[1],
        worst_coordinate=worst[2],
        coordinates_checked=checked,
    )
