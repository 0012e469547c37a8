"""Adam and the mini-batch training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core_math import Rng
from .datasets import Dataset
from .network import (
    LayerParams,
    Network,
    backward,
    init_network,
    init_output_bias,
    loss,
    losses_and_metrics,
    network_forward,
)

log = logging.getLogger(__name__)


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list | None = None
    v: list | None = None


def adam_step(params: list[LayerParams], grads: list[LayerParams], state: AdamState):
    """One bias-corrected Adam update; ``params`` and ``state`` are updated in place."""
    if state.m is None:
        state.m = [LayerParams(**{k: np.zeros_like(v) for k, v in p.items()}) for p in params]
        state.v = [LayerParams(**{k: np.zeros_like(v) for k, v in p.items()}) for p in params]
    if len(grads) != len(params):
        raise ValueError("gradient list does not match parameter list")
    for g in grads:
        for name, arr in g.items():
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(f"non-finite gradient for {name}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        for name, grad in g.items():
            value = getattr(p, name)
            if grad.shape != value.shape:
                raise ValueError(f"gradient shape {grad.shape} != parameter shape {value.shape}")
            mi = getattr(m, name)
            vi = getattr(v, name)
            mi *= b1
            mi += (1.0 - b1) * grad
            vi *= b2
            vi += (1.0 - b2) * grad * grad
            value -= state.lr * (mi / corr1) / (np.sqrt(vi / corr2) + state.eps)
    return params, state


@dataclass
class TrainConfig:
    lr: float = 0.001
    batch_size: int | None = 32
    init_scheme: str = "gaussian"
    init_mean: float = 0.0
    init_stddev: float = 1.0
    init_input_stddev: float | None = 0.5
    target_mean_bias: bool = False
    max_restarts: int = 5
    restart_epoch: int = 5
    checkpoints: tuple[int, ...] = ()


@dataclass
class TrainReport:
    per_epoch_loss: list[float] = field(default_factory=list)
    initial_loss: float = float("nan")
    test_mse: float = float("nan")
    test_mae: float = float("nan")
    test_accuracy: float | None = None
    test_cross_entropy: float | None = None
    epochs_run: int = 0
    restarts: int = 0
    restart_budget_exhausted: bool = False
    seed_used: int = 0
    checkpoints: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "initial_loss": self.initial_loss,
            "per_epoch_loss": list(self.per_epoch_loss),
            "test_mse": self.test_mse,
            "test_mae": self.test_mae,
            "test_accuracy": self.test_accuracy,
            "test_cross_entropy": self.test_cross_entropy,
            "restarts": self.restarts,
            "restart_budget_exhausted": self.restart_budget_exhausted,
            "seed_used": self.seed_used,
            "checkpoints": {str(k): v for k, v in sorted(self.checkpoints.items())},
        }


def evaluate(net: Network, data: Dataset, loss_kind: str) -> dict:
    """Test-split metrics for a trained network."""
    pred = network_forward(net, data.x_test).ravel()
    classification = loss_kind == "binary_cross_entropy"
    m = losses_and_metrics(pred, data.y_test, classification=classification)
    out = {"mse": m.mse, "mae": m.mae}
    if classification:
        out["accuracy"] = m.accuracy
        out["cross_entropy"] = loss(net, data.x_test, data.y_test, loss_kind)
    return out


def _is_bad_start(losses: list[float], target_var: float, cfg: TrainConfig) -> bool:
    k = cfg.restart_epoch
    if len(losses) < k:
        return False
    first, later = losses[0], losses[k - 1]
    return later > 0.95 * first and first > 10.0 * target_var


def _run_epochs(net, data, epochs, loss_kind, rng, cfg, report, target_var, allow_restart, on_checkpoint):
    x, y = data.x_train, data.y_train
    n = len(y)
    bs = n if cfg.batch_size is None else min(cfg.batch_size, n)
    state = AdamState(lr=cfg.lr)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            _, grads = backward(net, x[idx], y[idx], loss_kind)
            adam_step(net.params, grads, state)
        value = loss(net, x, y, loss_kind)
        if not np.isfinite(value):
            raise FloatingPointError(f"training loss became non-finite at epoch {epoch}")
        report.per_epoch_loss.append(value)
        if epoch in cfg.checkpoints:
            report.checkpoints[epoch] = evaluate(net, data, loss_kind)
            if on_checkpoint is not None:
                on_checkpoint(epoch, net)
        if allow_restart and epoch == cfg.restart_epoch and _is_bad_start(report.per_epoch_loss, target_var, cfg):
            return False
    return True


def train(net: Network, data: Dataset, epochs: int, loss_kind: str = "mse", seed: int = 0,
          config: TrainConfig | None = None, on_checkpoint=None):
    """Train ``net`` (already initialized) for ``epochs`` passes over the training split.

    A start whose training loss barely moves over the first epochs while sitting
    far above the target variance is abandoned and retried from a fresh
    initialization, up to ``config.max_restarts`` times. With
    ``config.target_mean_bias`` every start has its output bias set from the
    training targets first.

    ``on_checkpoint(epoch, net)`` is called at every epoch listed in
    ``config.checkpoints``; a restarted attempt calls it again from the start.

    Returns ``(trained_network, TrainReport)``; the input network is not modified.
    """
    cfg = config or TrainConfig()
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    seeds = Rng(seed)
    target_var = float(np.var(data.y_train))
    attempt_seed = net.rng_seed
    current = net.copy()
    if cfg.target_mean_bias:
        init_output_bias(current, data.y_train)
    restarts = 0
    while True:
        report = TrainReport(seed_used=attempt_seed, restarts=restarts)
        report.initial_loss = loss(current, data.x_train, data.y_train, loss_kind)
        rng = Rng(seeds.spawn_seed())
        allow = restarts < cfg.max_restarts
        finished = _run_epochs(current, data, epochs, loss_kind, rng, cfg, report, target_var, allow,
                               on_checkpoint)
        if finished:
            if restarts >= cfg.max_restarts and _is_bad_start(report.per_epoch_loss, target_var, cfg):
                report.restart_budget_exhausted = True
            break
        restarts += 1
        attempt_seed = seeds.spawn_seed()
        log.info("bad initialization detected, restarting with seed %d", attempt_seed)
        current = init_network(current, attempt_seed, cfg.init_scheme, cfg.init_mean, cfg.init_stddev,
                               cfg.init_input_stddev)
        if cfg.target_mean_bias:
            init_output_bias(current, data.y_train)
    report.epochs_run = len(report.per_epoch_loss)
    metrics = evaluate(current, data, loss_kind)
    report.test_mse = metrics["mse"]
    report.test_mae = metrics["mae"]
    report.test_accuracy = metrics.get("accuracy")
    report.test_cross_entropy = metrics.get("cross_entropy")
    return current, report
