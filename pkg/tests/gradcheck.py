"""Central finite-difference oracle for network gradients."""

import numpy as np

from quadnet.network import LayerParams, LayerSpec, Network, backward, loss

FD_STEP = 1e-5


def random_network(rng: np.random.Generator, kind: str, hidden_activation: str, output_activation: str):
    dims = [int(rng.integers(1, 6)) for _ in range(int(rng.integers(2, 4)))] + [1]
    layers = []
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        last = i == len(dims) - 2
        spec = LayerSpec(a, b, kind, output_activation if last else hidden_activation)
        p = LayerParams(W=rng.normal(0, 0.7, (a, b)), theta=rng.normal(0, 0.5, b))
        if spec.quadratic:
            p.s = rng.normal(0, 0.7, (a, b))
            p.w_q = rng.normal(0, 0.7, b)
        layers.append((spec, p))
    return Network(layers)


def fd_gradients(net: Network, x, y, loss_kind: str, h: float = FD_STEP):
    out = []
    for p in net.params:
        g = LayerParams(**{k: np.zeros_like(v) for k, v in p.items()})
        for name, arr in p.items():
            target = getattr(g, name)
            for idx in np.ndindex(arr.shape):
                keep = arr[idx]
                arr[idx] = keep + h
                up = loss(net, x, y, loss_kind)
                arr[idx] = keep - h
                down = loss(net, x, y, loss_kind)
                arr[idx] = keep
                target[idx] = (up - down) / (2 * h)
        out.append(g)
    return out


def max_relative_error(net: Network, x, y, loss_kind: str) -> float:
    """``||analytic - fd|| / max(||analytic||, ||fd||)`` over the full parameter vector."""
    _, analytic = backward(net, x, y, loss_kind)
    numeric = fd_gradients(net, x, y, loss_kind)
    a = np.concatenate([v.ravel() for g in analytic for _, v in g.items()])
    b = np.concatenate([v.ravel() for g in numeric for _, v in g.items()])
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


def gradient_check(kind: str, configs: int = 20, seed: int = 0):
    """Worst relative error over ``configs`` random networks of one layer kind."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(configs):
        hidden = ("sigmoid", "identity")[i % 2]
        classify = i % 4 >= 2
        out_act = "sigmoid" if classify or i % 3 == 0 else "identity"
        net = random_network(rng, kind, hidden, out_act)
        batch = int(rng.integers(1, 9))
        x = rng.normal(0, 1.0, (batch, net.specs[0].in_dim))
        if classify:
            y = rng.integers(0, 2, batch).astype(float)
            loss_kind = "binary_cross_entropy"
        else:
            y = rng.normal(0, 1.0, batch)
            loss_kind = "mse"
        worst = max(worst, max_relative_error(net, x, y, loss_kind))
    return worst

