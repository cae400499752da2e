"""
Metaclust - Tensors and Computation Graphs
==========================================

Dense float64 tensors whose primitive applications are recorded on the
active Graph, and the reverse sweep that turns a recorded scalar loss
into exact gradients.

Graphs are activated per thread with a context manager:

    with Graph() as graph:
        w = graph.watch(Tensor(values, name="w"))
        loss = ops.sum(w * w)
    grads = backward(loss, graph, ["w"])
"""

import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from ..errors import ContractError, NumericalError
from .primitives import PRIMITIVES


_local = threading.local()


def active_graph() -> Optional["Graph"]:
    """The innermost graph activated on this thread, if any"""
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


class Tensor:
    """
    Dense array of 64-bit floats.

    A tensor with a node belongs to the graph that recorded it; a tensor
    without one is a constant as far as differentiation is concerned.
    """

    __slots__ = ("values", "node", "graph", "name")

    def __init__(self, values, name: Optional[str] = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.node: Optional[int] = None
        self.graph: Optional["Graph"] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def T(self) -> "Tensor":
        return apply_primitive("transpose", self)

    def item(self) -> float:
        return float(self.values)

    def numpy(self) -> np.ndarray:
        return self.values

    def tracked_in(self, graph: Optional["Graph"]) -> bool:
        return graph is not None and self.graph is graph and self.node is not None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        node = f" node={self.node}" if self.node is not None else ""
        return f"Tensor(shape={self.shape}{label}{node})"

    # Operators
    def __add__(self, other): return apply_primitive("add", self, other)
    def __radd__(self, other): return apply_primitive("add", other, self)
    def __sub__(self, other): return apply_primitive("sub", self, other)
    def __rsub__(self, other): return apply_primitive("sub", other, self)
    def __mul__(self, other): return apply_primitive("mul", self, other)
    def __rmul__(self, other): return apply_primitive("mul", other, self)
    def __truediv__(self, other): return apply_primitive("div", self, other)
    def __rtruediv__(self, other): return apply_primitive("div", other, self)
    def __neg__(self): return apply_primitive("neg", self)
    def __matmul__(self, other): return apply_primitive("matmul", self, other)


TensorLike = Union[Tensor, np.ndarray, float, int]


def as_tensor(value: TensorLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class GraphEntry:
    """One recorded primitive application"""
    kind: str
    inputs: Tuple[Optional[int], ...]   # node ids; None for constant operands
    attrs: Dict[str, Any]
    input_values: Tuple[np.ndarray, ...]
    output: np.ndarray


@dataclass
class Graph:
    """
    Ordered tape of primitive applications.

    Entries are appended in execution order, so every entry's inputs
    precede it. Leaves are registered with watch().
    """
    entries: List[GraphEntry] = field(default_factory=list)
    leaves: Dict[str, int] = field(default_factory=dict)

    def __enter__(self) -> "Graph":
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = _local.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _local.stack.pop()

    def __len__(self) -> int:
        return len(self.entries)

    def watch(self, tensor: TensorLike, name: Optional[str] = None) -> Tensor:
        """
        Register a leaf and return a tracked view of it.

        The source tensor is left untouched so shared parameters can be
        watched by several graphs at once.
        """
        source = as_tensor(tensor)
        name = name or source.name or f"leaf{len(self.entries)}"
        if name in self.leaves:
            raise ContractError(f"Leaf '{name}' is already watched by this graph")

        tracked = Tensor(source.values, name=name)
        tracked.node = len(self.entries)
        tracked.graph = self
        self.entries.append(GraphEntry("leaf", (), {}, (), source.values))
        self.leaves[name] = tracked.node
        return tracked

    def replay(self, leaf_values: Optional[Dict[str, np.ndarray]] = None) -> List[np.ndarray]:
        """
        Re-execute every recorded entry in order.

        Args:
            leaf_values: Optional replacement values for named leaves

        Returns:
            Output of every entry, indexed by node id
        """
        overrides = {self.leaves[k]: np.asarray(v, dtype=np.float64)
                     for k, v in (leaf_values or {}).items()}
        outputs: List[np.ndarray] = []
        for node, entry in enumerate(self.entries):
            if entry.kind == "leaf":
                outputs.append(overrides.get(node, entry.output))
                continue
            values = tuple(
                entry.input_values[i] if source is None else outputs[source]
                for i, source in enumerate(entry.inputs)
            )
            outputs.append(PRIMITIVES[entry.kind].forward(*values, **entry.attrs))
        return outputs


def apply_primitive(kind: str, *inputs: TensorLike, **attrs) -> Tensor:
    """
    Apply a primitive and record it on the active graph.

    Raises:
        ConformanceError: If operand shapes do not conform
        DomainError: If an operand lies outside the primitive's domain
        NumericalError: If the forward result is not finite
    """
    primitive = PRIMITIVES[kind]
    if primitive.arity >= 0 and len(inputs) != primitive.arity:
        raise ContractError(f"{kind} expects {primitive.arity} operands, got {len(inputs)}")

    tensors = [as_tensor(x) for x in inputs]
    values = tuple(t.values for t in tensors)
    out = np.asarray(primitive.forward(*values, **attrs), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"{kind} produced non-finite values", index=kind)

    result = Tensor(out)
    graph = active_graph()
    if graph is not None and any(t.tracked_in(graph) for t in tensors):
        result.node = len(graph.entries)
        result.graph = graph
        graph.entries.append(GraphEntry(
            kind=kind,
            inputs=tuple(t.node if t.tracked_in(graph) else None for t in tensors),
            attrs=attrs,
            input_values=values,
            output=out,
        ))
    return result


class GradientMap(dict):
    """Parameter name → gradient array shaped like the parameter"""

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.values())))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(g)) for g in self.values())

    def scaled(self, factor: float) -> "GradientMap":
        return GradientMap({k: g * factor for k, g in self.items()})


def backward(
    loss: Tensor,
    graph: Graph,
    targets: Iterable[Union[str, Tensor]],
) -> GradientMap:
    """
    Reverse-mode sweep from a scalar loss.

    Args:
        loss: Scalar tensor recorded on graph (or a constant)
        graph: The graph the loss was recorded on
        targets: Leaf names or tracked leaf tensors

    Returns:
        GradientMap with one entry per target; unreachable targets get zeros

    Raises:
        ContractError: If the loss is not a scalar or a target is unknown
    """
    if loss.shape != ():
        raise ContractError(f"Loss must be a scalar, got shape {loss.shape}")

    wanted: Dict[str, int] = {}
    for target in targets:
        name = target.name if isinstance(target, Tensor) else target
        if name not in graph.leaves:
            raise ContractError(f"'{name}' is not a leaf of this graph")
        wanted[name] = graph.leaves[name]

    adjoints: Dict[int, np.ndarray] = {}
    if loss.tracked_in(graph):
        adjoints[loss.node] = np.ones(())
        for node in range(loss.node, -1, -1):
            grad = adjoints.get(node)
            entry = graph.entries[node]
            if grad is None or entry.kind == "leaf":
                continue
            local = PRIMITIVES[entry.kind].derivative(
                grad, entry.output, *entry.input_values, **entry.attrs
            )
            for source, contribution in zip(entry.inputs, local):
                if source is None:
                    continue
                if source in adjoints:
                    adjoints[source] = adjoints[source] + contribution
                else:
                    adjoints[source] = np.array(contribution, dtype=np.float64)

    return GradientMap({
        name: np.array(adjoints[node]) if node in adjoints
        else np.zeros_like(graph.entries[node].output)
        for name, node in wanted.items()
    })
