"""
Metaclust - Primitive Registry
==============================

Forward rules and exact derivative rules for every elementary operation
the computation graph can record.

A derivative rule receives (grad_out, out, *input_values, **attrs) and
returns one gradient per input, each shaped like that input.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Tuple

import numpy as np
from scipy.special import gammaln

from ..errors import ConformanceError, DomainError
from .special import digamma, trigamma


@dataclass
class Primitive:
    """A recordable elementary operation"""
    kind: str
    arity: int                     # -1 for variadic
    forward: Callable[..., np.ndarray]
    derivative: Callable[..., Tuple[np.ndarray, ...]]


PRIMITIVES: Dict[str, Primitive] = {}


def register(kind: str, arity: int):
    """Decorator pairing a forward rule with its derivative rule"""
    def wrap(cls):
        PRIMITIVES[kind] = Primitive(
            kind=kind,
            arity=arity,
            forward=cls.forward,
            derivative=cls.derivative,
        )
        return cls
    return wrap


@contextmanager
def override_derivative(kind: str, rule: Callable[..., Tuple[np.ndarray, ...]]) -> Iterator[None]:
    """
    Temporarily replace the derivative rule of a primitive.

    Used as a negative control for gradient checking.
    """
    if kind not in PRIMITIVES:
        raise KeyError(f"Unknown primitive: {kind}")
    original = PRIMITIVES[kind].derivative
    PRIMITIVES[kind].derivative = rule
    try:
        yield
    finally:
        PRIMITIVES[kind].derivative = original


# === Limited broadcasting ===

def _conform(kind: str, a: np.ndarray, b: np.ndarray) -> None:
    """Equal shapes, a scalar operand, or a row/column vector against a matrix"""
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    big, small = (a, b) if a.size >= b.size else (b, a)
    if big.ndim == 2:
        if small.ndim == 1 and small.shape[0] == big.shape[1]:
            return
        if small.ndim == 2 and small.shape == (big.shape[0], 1):
            return
        if small.ndim == 2 and small.shape == (1, big.shape[1]):
            return
    raise ConformanceError(f"{kind}: shapes {a.shape} and {b.shape} do not conform")


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to an operand's shape"""
    if grad.shape == shape:
        return grad
    if len(shape) == 0:
        return np.asarray(grad.sum())
    if len(shape) == 1:
        return grad.sum(axis=0)
    if shape[1] == 1 and grad.shape[1] != 1:
        return grad.sum(axis=1, keepdims=True)
    return grad.sum(axis=0, keepdims=True)


# === Arithmetic ===

@register("add", 2)
class _Add:
    @staticmethod
    def forward(a, b):
        _conform("add", a, b)
        return a + b

    @staticmethod
    def derivative(g, out, a, b):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)


@register("sub", 2)
class _Sub:
    @staticmethod
    def forward(a, b):
        _conform("sub", a, b)
        return a - b

    @staticmethod
    def derivative(g, out, a, b):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)


@register("mul", 2)
class _Mul:
    @staticmethod
    def forward(a, b):
        _conform("mul", a, b)
        return a * b

    @staticmethod
    def derivative(g, out, a, b):
        return _reduce_to(g * b, a.shape), _reduce_to(g * a, b.shape)


@register("div", 2)
class _Div:
    @staticmethod
    def forward(a, b):
        _conform("div", a, b)
        if np.any(b == 0):
            raise DomainError("div", "division by zero")
        return a / b

    @staticmethod
    def derivative(g, out, a, b):
        return _reduce_to(g / b, a.shape), _reduce_to(-g * out / b, b.shape)


@register("neg", 1)
class _Neg:
    @staticmethod
    def forward(a):
        return -a

    @staticmethod
    def derivative(g, out, a):
        return (-g,)


@register("matmul", 2)
class _MatMul:
    @staticmethod
    def forward(a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ConformanceError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
        return a @ b

    @staticmethod
    def derivative(g, out, a, b):
        return g @ b.T, a.T @ g


# === Elementwise functions ===

@register("exp", 1)
class _Exp:
    @staticmethod
    def forward(a):
        return np.exp(a)

    @staticmethod
    def derivative(g, out, a):
        return (g * out,)


@register("log", 1)
class _Log:
    @staticmethod
    def forward(a):
        if np.any(a <= 0):
            raise DomainError("log", "argument must be > 0")
        return np.log(a)

    @staticmethod
    def derivative(g, out, a):
        return (g / a,)


@register("abs", 1)
class _Abs:
    @staticmethod
    def forward(a):
        return np.abs(a)

    @staticmethod
    def derivative(g, out, a):
        # np.sign(0) == 0
        return (g * np.sign(a),)


@register("relu", 1)
class _Relu:
    @staticmethod
    def forward(a):
        return np.maximum(a, 0.0)

    @staticmethod
    def derivative(g, out, a):
        return (g * (a > 0),)


@register("digamma", 1)
class _Digamma:
    @staticmethod
    def forward(a):
        return digamma(a)

    @staticmethod
    def derivative(g, out, a):
        return (g * trigamma(a),)


@register("lgamma", 1)
class _LogGamma:
    @staticmethod
    def forward(a):
        if np.any(a <= 0):
            raise DomainError("lgamma", "argument must be > 0")
        return gammaln(a)

    @staticmethod
    def derivative(g, out, a):
        return (g * digamma(a),)


@register("xlogx", 1)
class _XLogX:
    @staticmethod
    def forward(a):
        if np.any(a < 0):
            raise DomainError("xlogx", "argument must be >= 0")
        safe = np.where(a > 0, a, 1.0)
        return np.where(a > 0, a * np.log(safe), 0.0)

    @staticmethod
    def derivative(g, out, a):
        safe = np.where(a > 0, a, 1.0)
        return (g * np.where(a > 0, np.log(safe) + 1.0, 0.0),)


# === Reductions ===

def _expand(g: np.ndarray, shape: Tuple[int, ...], axis) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    return np.broadcast_to(np.expand_dims(g, axis), shape)


@register("sum", 1)
class _Sum:
    @staticmethod
    def forward(a, axis=None):
        return np.asarray(a.sum(axis=axis))

    @staticmethod
    def derivative(g, out, a, axis=None):
        return (np.array(_expand(g, a.shape, axis)),)


@register("mean", 1)
class _Mean:
    @staticmethod
    def forward(a, axis=None):
        if a.size == 0:
            raise ConformanceError("mean: empty operand")
        return np.asarray(a.mean(axis=axis))

    @staticmethod
    def derivative(g, out, a, axis=None):
        count = a.size if axis is None else a.shape[axis]
        return (np.array(_expand(g, a.shape, axis)) / count,)


@register("logsumexp", 1)
class _LogSumExp:
    @staticmethod
    def forward(a, axis=None):
        peak = np.max(a, axis=axis, keepdims=True)
        peak = np.where(np.isfinite(peak), peak, 0.0)
        total = np.log(np.sum(np.exp(a - peak), axis=axis, keepdims=True)) + peak
        if axis is None:
            return np.asarray(total.reshape(()))
        return np.squeeze(total, axis=axis)

    @staticmethod
    def derivative(g, out, a, axis=None):
        expanded = out if axis is None else np.expand_dims(out, axis)
        weights = np.exp(a - expanded)
        return (_expand(g, a.shape, axis) * weights,)


# === Structural ===

@register("sqdist", 2)
class _SqDist:
    """Pairwise squared Euclidean distances between rows of a and rows of b"""

    @staticmethod
    def forward(a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
            raise ConformanceError(f"sqdist: shapes {a.shape} and {b.shape} do not conform")
        diff = a[:, None, :] - b[None, :, :]
        return np.einsum("nmd,nmd->nm", diff, diff)

    @staticmethod
    def derivative(g, out, a, b):
        grad_a = 2.0 * (g.sum(axis=1)[:, None] * a - g @ b)
        grad_b = 2.0 * (g.sum(axis=0)[:, None] * b - g.T @ a)
        return grad_a, grad_b


@register("concat", -1)
class _Concat:
    """Concatenation of 2-D operands along the feature axis"""

    @staticmethod
    def forward(*parts):
        if any(p.ndim != 2 for p in parts) or len({p.shape[0] for p in parts}) != 1:
            shapes = [p.shape for p in parts]
            raise ConformanceError(f"concat: shapes {shapes} do not conform")
        return np.concatenate(parts, axis=1)

    @staticmethod
    def derivative(g, out, *parts):
        bounds = np.cumsum([p.shape[1] for p in parts])[:-1]
        return tuple(np.split(g, bounds, axis=1))


@register("transpose", 1)
class _Transpose:
    @staticmethod
    def forward(a):
        if a.ndim != 2:
            raise ConformanceError(f"transpose: expected a matrix, got shape {a.shape}")
        return a.T.copy()

    @staticmethod
    def derivative(g, out, a):
        return (g.T,)


@register("reshape", 1)
class _Reshape:
    @staticmethod
    def forward(a, shape=()):
        if int(np.prod(shape)) != a.size:
            raise ConformanceError(f"reshape: cannot reshape {a.shape} to {tuple(shape)}")
        return a.reshape(shape)

    @staticmethod
    def derivative(g, out, a, shape=()):
        return (g.reshape(a.shape),)


@register("take_rows", 1)
class _TakeRows:
    @staticmethod
    def forward(a, index=None):
        index = np.asarray(index, dtype=np.int64)
        if a.ndim == 0 or (index.size and (index.min() < 0 or index.max() >= a.shape[0])):
            raise ConformanceError(f"take_rows: index out of range for shape {a.shape}")
        return a[index]

    @staticmethod
    def derivative(g, out, a, index=None):
        grad = np.zeros_like(a)
        np.add.at(grad, np.asarray(index, dtype=np.int64), g)
        return (grad,)
