"""
Metaclust - Encoder Networks
============================

The four feed-forward networks of the model:

- fZ: instance encoder, x_n → z_n
- fU, gU: permutation-invariant task encoder, u = gU(mean_n fU(z_n))
- fR: initial assignment network, log r_n ∝ fR([z_n, u])

Each is a rectifier MLP whose weights are Tensors named "<net>.<layer>.W"
and "<net>.<layer>.b", so gradients come back keyed by those names.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..autodiff import Graph, Tensor, as_tensor, ops
from ..errors import ConformanceError, ContractError


NETWORKS = ('fZ', 'fU', 'gU', 'fR')


@dataclass
class EncoderConfig:
    """Architecture of the four networks"""
    input_dim: int                       # D
    representation_dim: int = 10         # S
    hidden: int = 256
    depth: int = 3                       # weight layers per network
    dropout_rate: float = 0.1
    max_clusters: int = 10               # K′, fR output extent
    pooled_dim: int = 256                # fU output extent
    task_dim: int = 256                  # gU output extent
    dropout_networks: Tuple[str, ...] = NETWORKS
    identity_encoder: bool = False       # z_n = x_n, fZ unused

    def __post_init__(self):
        self.dropout_networks = tuple(self.dropout_networks)
        if self.input_dim < 1:
            raise ContractError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.representation_dim < 1:
            raise ContractError(f"representation_dim must be >= 1, got {self.representation_dim}")
        if self.depth < 1:
            raise ContractError(f"depth must be >= 1, got {self.depth}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ContractError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.max_clusters < 1:
            raise ContractError(f"max_clusters must be >= 1, got {self.max_clusters}")
        unknown = set(self.dropout_networks) - set(NETWORKS)
        if unknown:
            raise ContractError(f"Unknown networks in dropout_networks: {sorted(unknown)}")
        if self.identity_encoder and self.representation_dim != self.input_dim:
            raise ContractError(
                "identity_encoder requires representation_dim == input_dim "
                f"({self.representation_dim} != {self.input_dim})"
            )

    def layer_sizes(self, network: str) -> List[int]:
        """Extents from input to output for one network"""
        inputs = {
            'fZ': self.input_dim,
            'fU': self.representation_dim,
            'gU': self.pooled_dim,
            'fR': self.representation_dim + self.task_dim,
        }[network]
        outputs = {
            'fZ': self.representation_dim,
            'fU': self.pooled_dim,
            'gU': self.task_dim,
            'fR': self.max_clusters,
        }[network]
        return [inputs] + [self.hidden] * (self.depth - 1) + [outputs]

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['dropout_networks'] = list(self.dropout_networks)
        return data


@dataclass
class Layer:
    """Affine map with weight (out × in) and bias (out)"""
    W: Tensor
    b: Tensor


@dataclass
class MLPParams:
    """Rectifier MLP; no activation after the final layer"""
    name: str
    layers: List[Layer]

    def __post_init__(self):
        for prev, layer in zip(self.layers, self.layers[1:]):
            if layer.W.shape[1] != prev.W.shape[0]:
                raise ConformanceError(
                    f"{self.name}: layer input {layer.W.shape[1]} does not chain "
                    f"to previous output {prev.W.shape[0]}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].W.shape[0]

    def named_tensors(self) -> Iterator[Tuple[str, Tensor]]:
        for i, layer in enumerate(self.layers):
            yield f"{self.name}.{i}.W", layer.W
            yield f"{self.name}.{i}.b", layer.b

    def forward(
        self,
        x: Tensor,
        dropout_rate: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """
        Apply the network to the rows of x.

        Inverted dropout follows every hidden rectifier when a dropout
        rate and rng are given.
        """
        if x.shape[-1] != self.input_dim:
            raise ConformanceError(
                f"{self.name}: expected input extent {self.input_dim}, got {x.shape[-1]}"
            )
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = ops.add(ops.matmul(h, ops.transpose(layer.W)), layer.b)
            if i < last:
                h = ops.relu(h)
                if dropout_rate > 0.0 and rng is not None:
                    keep = rng.random(h.shape) >= dropout_rate
                    h = ops.mul(h, keep / (1.0 - dropout_rate))
        return h


@dataclass
class EncoderParams:
    """All trainable weights of fZ, fU, gU and fR"""
    config: EncoderConfig
    fZ: MLPParams
    fU: MLPParams
    gU: MLPParams
    fR: MLPParams

    def __post_init__(self):
        if self.fZ.output_dim != self.config.representation_dim:
            raise ConformanceError("fZ output extent must equal representation_dim")
        if self.fR.output_dim != self.config.max_clusters:
            raise ConformanceError("fR output extent must equal max_clusters")

    def networks(self) -> Dict[str, MLPParams]:
        return {'fZ': self.fZ, 'fU': self.fU, 'gU': self.gU, 'fR': self.fR}

    def named_tensors(self) -> Dict[str, Tensor]:
        named: Dict[str, Tensor] = {}
        for mlp in self.networks().values():
            named.update(mlp.named_tensors())
        return named

    def arrays(self) -> Dict[str, np.ndarray]:
        return {k: t.values for k, t in self.named_tensors().items()}

    def parameter_count(self) -> int:
        return int(sum(t.values.size for t in self.named_tensors().values()))

    def with_arrays(self, arrays: Dict[str, np.ndarray]) -> 'EncoderParams':
        """New parameter set; names missing from arrays keep their current values"""
        current = self.arrays()
        unknown = set(arrays) - set(current)
        if unknown:
            raise ContractError(f"Unknown parameter names: {sorted(unknown)}")
        merged = {k: np.array(arrays.get(k, v), dtype=np.float64) for k, v in current.items()}
        for k, v in merged.items():
            if v.shape != current[k].shape:
                raise ConformanceError(f"{k}: shape {v.shape} != {current[k].shape}")
        return build_params(self.config, merged)

    def watch(self, graph: Graph) -> 'EncoderParams':
        """Tracked copy whose tensors are leaves of graph"""
        tracked = {k: graph.watch(t, name=k) for k, t in self.named_tensors().items()}
        return assemble_params(self.config, tracked)


def assemble_params(config: EncoderConfig, tensors: Dict[str, Tensor]) -> EncoderParams:
    """EncoderParams over existing tensors, tracked or not"""
    nets = {}
    for net in NETWORKS:
        layers = []
        for i in range(config.depth):
            layers.append(Layer(W=tensors[f"{net}.{i}.W"], b=tensors[f"{net}.{i}.b"]))
        nets[net] = MLPParams(name=net, layers=layers)
    return EncoderParams(config=config, **nets)


def build_params(config: EncoderConfig, arrays: Dict[str, np.ndarray]) -> EncoderParams:
    """Assemble EncoderParams from named arrays"""
    missing = [
        f"{net}.{i}.{kind}"
        for net in NETWORKS for i in range(config.depth) for kind in ('W', 'b')
        if f"{net}.{i}.{kind}" not in arrays
    ]
    if missing:
        raise ContractError(f"Missing parameters: {missing}")
    return assemble_params(config, {k: Tensor(np.asarray(v, dtype=np.float64), name=k) for k, v in arrays.items()})


def init_params(config: EncoderConfig, seed: int) -> EncoderParams:
    """
    Draw initial weights.

    Weights are uniform on ±1/√fan_in, biases zero; deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    arrays: Dict[str, np.ndarray] = {}
    for net in NETWORKS:
        sizes = config.layer_sizes(net)
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            arrays[f"{net}.{i}.W"] = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            arrays[f"{net}.{i}.b"] = np.zeros(fan_out)
    return build_params(config, arrays)


def _dropout(params: EncoderParams, network: str, training: bool) -> float:
    if training and network in params.config.dropout_networks:
        return params.config.dropout_rate
    return 0.0


def encode_instances(
    params: EncoderParams,
    X,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """
    Map each instance to its representation, Z = fZ(X).

    Args:
        params: Encoder parameters (tracked or not)
        X: N × D instance matrix
        training: Apply dropout masks drawn from rng
        rng: Mask generator, required when training

    Returns:
        N × S representation tensor

    Raises:
        ConformanceError: If D does not match fZ's input extent
    """
    X = as_tensor(X)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ConformanceError(f"Expected a non-empty N x D matrix, got shape {X.shape}")
    if X.shape[1] != params.config.input_dim:
        raise ConformanceError(
            f"Instance dimension {X.shape[1]} does not match encoder input {params.config.input_dim}"
        )
    if params.config.identity_encoder:
        return X
    return params.fZ.forward(X, _dropout(params, 'fZ', training), rng)


def task_representation(
    params: EncoderParams,
    Z: Tensor,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """
    Permutation-invariant summary u = gU(mean_n fU(z_n)).

    Returns:
        Vector of length task_dim
    """
    if Z.shape[0] < 1:
        raise ConformanceError("task_representation needs at least one instance")
    pooled = ops.mean(params.fU.forward(Z, _dropout(params, 'fU', training), rng), axis=0)
    pooled = ops.reshape(pooled, (1, pooled.shape[0]))
    u = params.gU.forward(pooled, _dropout(params, 'gU', training), rng)
    return ops.reshape(u, (u.shape[1],))


def initial_assignments(
    params: EncoderParams,
    Z: Tensor,
    u: Tensor,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """
    Initial soft assignments R0 = softmax(fR([z_n, u])).

    Returns:
        N × K′ tensor whose rows lie on the simplex
    """
    n = Z.shape[0]
    broadcast_u = ops.add(np.zeros((n, u.shape[0])), u)
    logits = params.fR.forward(ops.concat([Z, broadcast_u]), _dropout(params, 'fR', training), rng)
    return ops.softmax_rows(logits)
