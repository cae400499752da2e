"""
Metaclust - Functional Operations
=================================

Thin named wrappers over apply_primitive, plus a few composites built
only from recorded primitives (softmax rows, squares).
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from .tensor import Tensor, TensorLike, apply_primitive


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("matmul", a, b)


def add(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("add", a, b)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("sub", a, b)


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("mul", a, b)


def div(a: TensorLike, b: TensorLike) -> Tensor:
    return apply_primitive("div", a, b)


def neg(a: TensorLike) -> Tensor:
    return apply_primitive("neg", a)


def exp(a: TensorLike) -> Tensor:
    return apply_primitive("exp", a)


def log(a: TensorLike) -> Tensor:
    return apply_primitive("log", a)


def abs(a: TensorLike) -> Tensor:  # noqa: A001
    return apply_primitive("abs", a)


def relu(a: TensorLike) -> Tensor:
    return apply_primitive("relu", a)


def digamma(a: TensorLike) -> Tensor:
    return apply_primitive("digamma", a)


def lgamma(a: TensorLike) -> Tensor:
    return apply_primitive("lgamma", a)


def xlogx(a: TensorLike) -> Tensor:
    return apply_primitive("xlogx", a)


def sum(a: TensorLike, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    return apply_primitive("sum", a, axis=axis)


def mean(a: TensorLike, axis: Optional[int] = None) -> Tensor:
    return apply_primitive("mean", a, axis=axis)


def logsumexp(a: TensorLike, axis: Optional[int] = None) -> Tensor:
    return apply_primitive("logsumexp", a, axis=axis)


def sqdist(a: TensorLike, b: TensorLike) -> Tensor:
    """Squared Euclidean norms of all row differences, shape (rows(a), rows(b))"""
    return apply_primitive("sqdist", a, b)


def concat(parts: Sequence[TensorLike]) -> Tensor:
    """Concatenate matrices along the feature axis"""
    return apply_primitive("concat", *parts)


def transpose(a: TensorLike) -> Tensor:
    return apply_primitive("transpose", a)


def reshape(a: TensorLike, shape: Tuple[int, ...]) -> Tensor:
    return apply_primitive("reshape", a, shape=tuple(shape))


def take_rows(a: TensorLike, index) -> Tensor:
    return apply_primitive("take_rows", a, index=np.asarray(index, dtype=np.int64))


def square(a: TensorLike) -> Tensor:
    return apply_primitive("mul", a, a)


def column(a: TensorLike) -> Tensor:
    """Vector of length n as an (n, 1) matrix"""
    a = a if isinstance(a, Tensor) else Tensor(a)
    return reshape(a, (a.shape[0], 1))


def log_softmax_rows(logits: Tensor) -> Tensor:
    """Row-wise log-normalisation by log-sum-exp"""
    return sub(logits, column(logsumexp(logits, axis=1)))


def softmax_rows(logits: Tensor) -> Tensor:
    return exp(log_softmax_rows(logits))
