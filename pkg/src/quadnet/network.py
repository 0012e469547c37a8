"""Feed-forward networks of quadratic neurons.

Each neuron computes the pre-activation

    z_j = sum_i W[i, j] x_i + w_q[j] * sum_i sign_i s[i, j]^2 x_i^2 + theta[j]

where ``sign`` is fixed by the layer kind: all +1 for elliptic layers, the last
input coordinate flipped to -1 for hyperbolic ones, and zeroed for parabolic
ones. Affine layers carry no quadratic term at all.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core_math import Rng

LAYER_KINDS = ("affine", "elliptic", "hyperbolic", "parabolic")
ACTIVATIONS = ("sigmoid", "identity")
LOSS_KINDS = ("mse", "binary_cross_entropy")
FORMAT_NAME = "quadnet.network"
FORMAT_VERSION = 1


class NonFiniteError(FloatingPointError):
    def __init__(self, layer: int, where: str):
        super().__init__(f"non-finite values in layer {layer} ({where})")
        self.layer = layer


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    kind: str = "elliptic"
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dimensions must be >= 1")

    @property
    def quadratic(self) -> bool:
        return self.kind != "affine"

    def sign_pattern(self) -> np.ndarray:
        sign = np.ones(self.in_dim)
        if self.kind == "hyperbolic":
            sign[-1] = -1.0
        elif self.kind == "parabolic":
            sign[-1] = 0.0
        elif self.kind == "affine":
            sign[:] = 0.0
        return sign


@dataclass
class LayerParams:
    W: np.ndarray
    theta: np.ndarray
    s: np.ndarray | None = None
    w_q: np.ndarray | None = None

    def names(self) -> list[str]:
        return [k for k in ("s", "W", "w_q", "theta") if getattr(self, k) is not None]

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for k in self.names():
            yield k, getattr(self, k)

    def copy(self) -> "LayerParams":
        return LayerParams(**{k: v.copy() for k, v in self.items()})

    @classmethod
    def zeros(cls, spec: LayerSpec) -> "LayerParams":
        shape = (spec.in_dim, spec.out_dim)
        quad = spec.quadratic
        return cls(
            W=np.zeros(shape),
            theta=np.zeros(spec.out_dim),
            s=np.zeros(shape) if quad else None,
            w_q=np.zeros(spec.out_dim) if quad else None,
        )


@dataclass
class Network:
    layers: list[tuple[LayerSpec, LayerParams]]
    rng_seed: int = 0

    def __post_init__(self):
        for (a, _), (b, _) in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer widths do not chain: {a.out_dim} -> {b.in_dim}")
        for spec, params in self.layers:
            _check_shapes(spec, params)

    @property
    def specs(self) -> list[LayerSpec]:
        return [spec for spec, _ in self.layers]

    @property
    def params(self) -> list[LayerParams]:
        return [p for _, p in self.layers]

    def copy(self) -> "Network":
        return Network([(s, p.copy()) for s, p in self.layers], self.rng_seed)

    def n_parameters(self) -> int:
        return sum(v.size for p in self.params for _, v in p.items())


def _check_shapes(spec: LayerSpec, params: LayerParams) -> None:
    shape = (spec.in_dim, spec.out_dim)
    if params.W.shape != shape or params.theta.shape != (spec.out_dim,):
        raise ValueError(f"parameter shapes do not match {spec}")
    if spec.quadratic:
        if params.s is None or params.w_q is None:
            raise ValueError(f"{spec.kind} layer needs s and w_q")
        if params.s.shape != shape or params.w_q.shape != (spec.out_dim,):
            raise ValueError(f"parameter shapes do not match {spec}")
    elif params.s is not None or params.w_q is not None:
        raise ValueError("affine layer takes no quadratic parameters")


def build_network(
    in_dim: int,
    hidden: list[int],
    kind: str = "elliptic",
    out_dim: int = 1,
    output_activation: str = "identity",
    output_kind: str = "affine",
    hidden_activation: str = "sigmoid",
) -> Network:
    """Zero-initialized stack: ``hidden`` layers of ``kind`` plus one output layer."""
    specs = []
    width = in_dim
    for h in hidden:
        specs.append(LayerSpec(width, h, kind, hidden_activation))
        width = h
    specs.append(LayerSpec(width, out_dim, output_kind, output_activation))
    return Network([(s, LayerParams.zeros(s)) for s in specs])


def sigmoid(z):
    # split on sign to avoid overflow in exp
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(kind: str, z):
    return sigmoid(z) if kind == "sigmoid" else z


def _activation_grad(kind: str, a):
    return a * (1.0 - a) if kind == "sigmoid" else np.ones_like(a)


def _as_batch(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if dim == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected a batch of {dim}-vectors, got shape {x.shape}")
    return x


def layer_preactivation(spec: LayerSpec, params: LayerParams, x: np.ndarray):
    """Return ``(z, quad)`` where ``quad`` is the signed quadratic feature (or None)."""
    z = x @ params.W + params.theta
    if not spec.quadratic:
        return z, None
    quad = (x * x * spec.sign_pattern()) @ (params.s * params.s)
    return z + params.w_q * quad, quad


def layer_forward(spec: LayerSpec, params: LayerParams, x_batch) -> np.ndarray:
    x = _as_batch(x_batch, spec.in_dim)
    z, _ = layer_preactivation(spec, params, x)
    return _activate(spec.activation, z)


def network_forward(net: Network, x_batch) -> np.ndarray:
    a = _as_batch(x_batch, net.specs[0].in_dim)
    for spec, params in net.layers:
        a = layer_forward(spec, params, a)
    return a


def _forward_cache(net: Network, x: np.ndarray):
    cache = []
    a = x
    for idx, (spec, params) in enumerate(net.layers):
        with np.errstate(over="ignore", invalid="ignore"):  # checked just below
            z, quad = layer_preactivation(spec, params, a)
            out = _activate(spec.activation, z)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(idx, "forward")
        cache.append((a, z, quad, out))
        a = out
    return cache


def _softplus(z):
    return np.logaddexp(0.0, z)


def _check_loss(net: Network, loss_kind: str) -> None:
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss {loss_kind!r}")
    if loss_kind == "binary_cross_entropy" and net.specs[-1].activation != "sigmoid":
        raise ValueError("binary cross-entropy needs a sigmoid output layer")


def _targets(y, shape) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y.reshape(shape)


def loss(net: Network, x_batch, y_batch, loss_kind: str = "mse") -> float:
    """Mean loss over the batch. Cross-entropy is evaluated from the logits."""
    _check_loss(net, loss_kind)
    x = _as_batch(x_batch, net.specs[0].in_dim)
    cache = _forward_cache(net, x)
    _, z, _, out = cache[-1]
    y = _targets(y_batch, out.shape)
    if loss_kind == "mse":
        return float(np.mean((out - y) ** 2))
    return float(np.mean(_softplus(z) - y * z))


def backward(net: Network, x_batch, y_batch, loss_kind: str = "mse"):
    """Exact gradients of the mean batch loss.

    Returns ``(loss_value, grads)`` where ``grads`` is a list of LayerParams
    with the same structure as ``net.params``.
    """
    _check_loss(net, loss_kind)
    x = _as_batch(x_batch, net.specs[0].in_dim)
    cache = _forward_cache(net, x)
    _, z_last, _, out = cache[-1]
    y = _targets(y_batch, out.shape)
    count = out.size

    if loss_kind == "mse":
        value = float(np.mean((out - y) ** 2))
        d_out = 2.0 * (out - y) / count
        d_z = d_out * _activation_grad(net.specs[-1].activation, out)
    else:
        value = float(np.mean(_softplus(z_last) - y * z_last))
        d_z = (out - y) / count

    grads: list[LayerParams] = [None] * len(net.layers)  # type: ignore[list-item]
    for idx in range(len(net.layers) - 1, -1, -1):
        spec, params = net.layers[idx]
        a_in, z, quad, a_out = cache[idx]
        if idx != len(net.layers) - 1:
            d_z = d_out * _activation_grad(spec.activation, a_out)
        g = LayerParams(W=a_in.T @ d_z, theta=d_z.sum(axis=0))
        d_in = d_z @ params.W.T
        if spec.quadratic:
            sign = spec.sign_pattern()
            d_quad = d_z * params.w_q
            g.w_q = (d_z * quad).sum(axis=0)
            g.s = 2.0 * params.s * ((a_in * a_in * sign).T @ d_quad)
            d_in = d_in + 2.0 * a_in * sign * (d_quad @ (params.s * params.s).T)
        for name, v in g.items():
            if not np.all(np.isfinite(v)):
                raise NonFiniteError(idx, f"gradient of {name}")
        grads[idx] = g
        d_out = d_in
    return value, grads


def init_network(net: Network, seed: int, scheme: str = "gaussian", mean: float = 1.0, stddev: float = 0.1,
                 input_stddev: float | None = None) -> Network:
    """Fresh parameters for ``net``'s architecture.

    ``scheme="paper_constant"`` sets every non-bias weight to exactly 1.0;
    ``scheme="gaussian"`` draws them from N(mean, stddev), with the first layer
    using ``input_stddev`` when given. Biases start at 0.
    """
    if scheme == "paper_constant":
        mean, stddev, input_stddev = 1.0, 0.0, None
    elif scheme != "gaussian":
        raise ValueError(f"unknown init scheme {scheme!r}")
    rng = Rng(seed)
    layers = []
    for idx, (spec, _) in enumerate(net.layers):
        sd = input_stddev if idx == 0 and input_stddev is not None else stddev
        shape = (spec.in_dim, spec.out_dim)
        p = LayerParams(W=rng.gaussian(mean, sd, shape), theta=np.zeros(spec.out_dim))
        if spec.quadratic:
            p.s = rng.gaussian(mean, sd, shape)
            p.w_q = rng.gaussian(mean, sd, (spec.out_dim,))
        layers.append((spec, p))
    return Network(layers, rng_seed=int(seed))


def init_output_bias(net: Network, targets) -> Network:
    """Set the output bias so its activation equals the mean target; modifies ``net``."""
    spec, params = net.layers[-1]
    mean = float(np.mean(np.asarray(targets, dtype=float)))
    if spec.activation == "sigmoid":
        p = min(max(mean, 1e-6), 1.0 - 1e-6)
        value = math.log(p / (1.0 - p))
    else:
        value = mean
    params.theta[:] = value
    return net


@dataclass
class Metrics:
    mse: float
    mae: float
    accuracy: float | None = None


def losses_and_metrics(predictions, targets, classification: bool = False) -> Metrics:
    """MSE, MAE and (for binary labels) accuracy; predictions >= 0.5 count as class 1."""
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("empty input")
    if p.shape != t.shape:
        raise ValueError("predictions and targets differ in length")
    err = p - t
    acc = float(np.mean((p >= 0.5).astype(float) == t)) if classification else None
    return Metrics(mse=float(np.mean(err * err)), mae=float(np.mean(np.abs(err))), accuracy=acc)


def to_json(net: Network) -> str:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "rng_seed": net.rng_seed,
        "layers": [
            {
                "in_dim": spec.in_dim,
                "out_dim": spec.out_dim,
                "kind": spec.kind,
                "activation": spec.activation,
                "params": {k: np.asarray(v).ravel().tolist() for k, v in params.items()},
            }
            for spec, params in net.layers
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> Network:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not a serialized network")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {doc.get('version')}")
    layers = []
    for entry in doc["layers"]:
        spec = LayerSpec(entry["in_dim"], entry["out_dim"], entry["kind"], entry["activation"])
        shape = {"W": (spec.in_dim, spec.out_dim), "s": (spec.in_dim, spec.out_dim),
                 "w_q": (spec.out_dim,), "theta": (spec.out_dim,)}
        arrays = {k: np.asarray(v, dtype=float).reshape(shape[k]) for k, v in entry["params"].items()}
        layers.append((spec, LayerParams(**arrays)))
    return Network(layers, rng_seed=int(doc.get("rng_seed", 0)))
