"""Experiment configs, single runs with file artifacts, and the comparison suites."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core_math import Rng
from .datasets import (
    X_RANGE,
    Dataset,
    generate_cluster_data,
    generate_regression_data,
    ground_truth,
    subspecies_spec,
    two_blob_spec,
)
from .frame import normalize_mother, rate_experiment, synthetic_target
from .network import (
    LAYER_KINDS,
    LOSS_KINDS,
    NonFiniteError,
    build_network,
    init_network,
    network_forward,
    to_json,
)
from .optimizer import TrainConfig, TrainReport, train

log = logging.getLogger(__name__)

REGRESSION_SETS = ("f1", "f2")
CLUSTER_SETS = ("subspecies", "two_blobs")
CURVE_POINTS = 400
SUITES = ("shallow_table1", "deep_table2", "clusters_table3", "rate_fig3")


@dataclass
class ExperimentConfig:
    """One training run. Unset fields follow the dataset's task."""

    name: str = "run"
    dataset: str = "f2"
    kind: str = "elliptic"
    hidden: list[int] = field(default_factory=lambda: [5])
    output_kind: str | None = None
    output_activation: str | None = None
    epochs: int = 140
    seed: int = 0
    data_seed: int | None = None
    loss: str | None = None
    init_scheme: str = "gaussian"
    init_mean: float = 0.0
    init_stddev: float = 1.0
    init_input_stddev: float | None = 0.5
    target_mean_bias: bool = True
    lr: float = 0.001
    batch_size: int | None = 32
    train_fraction: float = 0.8
    even_grid: bool = False
    checkpoints: list[int] = field(default_factory=list)
    prediction_epochs: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.hidden = [int(h) for h in self.hidden]
        self.checkpoints = sorted(int(c) for c in self.checkpoints)
        self.prediction_epochs = sorted(int(c) for c in self.prediction_epochs)
        if self.dataset not in REGRESSION_SETS + CLUSTER_SETS:
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.output_kind is not None and self.output_kind not in LAYER_KINDS:
            raise ValueError(f"unknown output kind {self.output_kind!r}")
        if self.loss is not None and self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")

    @property
    def classification(self) -> bool:
        return self.dataset in CLUSTER_SETS

    @property
    def loss_kind(self) -> str:
        if self.loss is not None:
            return self.loss
        return "binary_cross_entropy" if self.classification else "mse"

    @property
    def resolved_output_activation(self) -> str:
        if self.output_activation is not None:
            return self.output_activation
        return "sigmoid" if self.classification else "identity"

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            batch_size=self.batch_size,
            init_scheme=self.init_scheme,
            init_mean=self.init_mean,
            init_stddev=self.init_stddev,
            init_input_stddev=self.init_input_stddev,
            target_mean_bias=self.target_mean_bias,
            checkpoints=tuple(sorted(set(self.checkpoints) | set(self.prediction_epochs))),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_config_file(path) -> dict:
    """Read a JSON or TOML mapping, chosen by file extension."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def make_dataset(cfg: ExperimentConfig) -> Dataset:
    seed = cfg.seed if cfg.data_seed is None else cfg.data_seed
    if cfg.dataset in REGRESSION_SETS:
        return generate_regression_data(cfg.dataset, seed, even_grid=cfg.even_grid)
    spec = subspecies_spec() if cfg.dataset == "subspecies" else two_blob_spec()
    spec.train_fraction = cfg.train_fraction
    return generate_cluster_data(spec, seed)


def make_network(cfg: ExperimentConfig, in_dim: int, init_seed: int):
    net = build_network(
        in_dim,
        cfg.hidden,
        kind=cfg.kind,
        out_dim=1,
        output_activation=cfg.resolved_output_activation,
        output_kind=cfg.output_kind or cfg.kind,
    )
    return init_network(net, init_seed, cfg.init_scheme, cfg.init_mean, cfg.init_stddev,
                        cfg.init_input_stddev)


def fmt(value) -> str:
    """Six significant digits; the CSV number format used everywhere."""
    return f"{float(value):.6g}"


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def dump_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def loss_curve_csv(report: TrainReport, loss_kind: str) -> str:
    column = "mse" if loss_kind == "mse" else "cross_entropy"
    lines = [f"epoch,{column}", f"0,{fmt(report.initial_loss)}"]
    lines += [f"{i},{fmt(v)}" for i, v in enumerate(report.per_epoch_loss, start=1)]
    return "\n".join(lines) + "\n"


def prediction_curve_csv(net, name: str, points: int = CURVE_POINTS) -> str:
    x = np.linspace(X_RANGE[0], X_RANGE[1], points)
    pred = network_forward(net, x.reshape(-1, 1)).ravel()
    truth = ground_truth(name, x)
    lines = ["x,y_true,y_pred"]
    lines += [f"{fmt(a)},{fmt(b)},{fmt(c)}" for a, b, c in zip(x, truth, pred)]
    return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    status: str
    report: TrainReport | None = None
    error: str | None = None
    dataset_digest: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "completed"

    def metrics(self) -> dict:
        out = {
            "config": asdict(self.config),
            "dataset_sha256": self.dataset_digest,
            "status": self.status,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.report is not None:
            out["report"] = self.report.to_dict()
        return out


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Train and evaluate one configuration.

    When ``out_dir`` is given, writes ``loss.csv``, ``metrics.json``,
    ``network.json`` and, for regression, ``prediction.csv`` plus one
    ``prediction_eNNNN.csv`` per requested snapshot epoch.
    A non-finite training run is recorded as failed instead of raised.
    """
    data = make_dataset(cfg)
    seeds = Rng(cfg.seed)
    init_seed, train_seed = seeds.spawn_seed(), seeds.spawn_seed()
    net = make_network(cfg, data.dim, init_seed)
    out = Path(out_dir) if out_dir is not None else None
    snapshots = {}

    def snapshot(epoch, current):
        if epoch in cfg.prediction_epochs and not cfg.classification:
            snapshots[epoch] = prediction_curve_csv(current, cfg.dataset)

    try:
        trained, report = train(net, data, cfg.epochs, cfg.loss_kind, train_seed, cfg.train_config(),
                                on_checkpoint=snapshot)
    except (FloatingPointError, NonFiniteError) as exc:
        result = ExperimentResult(cfg, "failed", error=str(exc), dataset_digest=data.digest())
        if out is not None:
            write_text(out / "metrics.json", dump_json(result.metrics()))
        return result

    result = ExperimentResult(cfg, "completed", report=report, dataset_digest=data.digest())
    if out is not None:
        write_text(out / "loss.csv", loss_curve_csv(report, cfg.loss_kind))
        write_text(out / "metrics.json", dump_json(result.metrics()))
        write_text(out / "network.json", to_json(trained))
        if not cfg.classification:
            write_text(out / "prediction.csv", prediction_curve_csv(trained, cfg.dataset))
            for epoch, text in sorted(snapshots.items()):
                write_text(out / f"prediction_e{epoch:04d}.csv", text)
    return result


# suites


@dataclass
class SuiteConfig:
    replicates: int = 5
    rate_targets: int = 20
    rate_N: list[int] = field(default_factory=lambda: [2**i for i in range(9)])
    curve_from_epoch: int = 20
    curve_fraction: float = 0.7

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown suite config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Claim:
    """A directional comparison evaluated on suite results."""

    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class SuiteResult:
    suite: str
    summary_csv: str
    claims: list[Claim] = field(default_factory=list)
    failures: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0 and all(c.passed for c in self.claims)


def claims_csv(claims) -> str:
    lines = ["claim,value,threshold,passed"]
    lines += [f"{c.name},{fmt(c.value)},{fmt(c.threshold)},{int(c.passed)}" for c in claims]
    return "\n".join(lines) + "\n"


def _median(values) -> float:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.median(vals)) if vals else math.nan


def _median_curve(results) -> np.ndarray:
    curves = [[r.report.initial_loss] + r.report.per_epoch_loss for r in results if r.ok]
    if not curves:
        return np.array([])
    return np.median(np.asarray(curves, dtype=float), axis=0)


def _curves_csv(curves: dict) -> str:
    names = list(curves)
    length = max(len(c) for c in curves.values())
    lines = ["epoch," + ",".join(names)]
    for i in range(length):
        row = [str(i)] + [fmt(curves[n][i]) if i < len(curves[n]) else "" for n in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _arch_label(kind: str, hidden) -> str:
    return f"{kind}_" + "x".join(str(h) for h in hidden)


def _replicate_seeds(seed: int, count: int):
    rng = Rng(seed)
    data_seed = rng.spawn_seed()
    return data_seed, [rng.spawn_seed() for _ in range(count)]


def _run_grid(configs, out: Path | None):
    results = {}
    for cfg in configs:
        run_dir = None if out is None else out / "runs" / cfg.name
        results[cfg.name] = run_experiment(cfg, run_dir)
    return results


def shallow_table1(seed: int, out: Path | None, sc: SuiteConfig) -> SuiteResult:
    """Shallow [5] networks of each kind on f2, evaluated at 140 and 250 epochs.

    One 250-epoch run per seed supplies both rows: the 140-epoch numbers are
    the test metrics recorded at that epoch, identical to a separate 140-epoch run.
    """
    data_seed, seeds = _replicate_seeds(seed, sc.replicates)
    kinds = ("elliptic", "affine", "hyperbolic")
    configs = []
    for kind in kinds:
        for i, s in enumerate(seeds):
            configs.append(ExperimentConfig(
                name=f"{kind}_5_s{i}", dataset="f2", kind=kind, hidden=[5], epochs=250,
                seed=s, data_seed=data_seed, checkpoints=[140],
                prediction_epochs=[50, 100, 140, 150, 200, 250],
            ))
    results = _run_grid(configs, out)
    lines = ["network,epochs,hidden_layers,units,median_test_mse,median_test_mae,seeds,failed"]
    medians = {}
    curves = {}
    failures = 0
    for kind in kinds:
        runs = [results[f"{kind}_5_s{i}"] for i in range(len(seeds))]
        done = [r for r in runs if r.ok]
        failures += len(runs) - len(done)
        for epochs in (140, 250):
            if epochs == 250:
                mse = _median([r.report.test_mse for r in done])
                mae = _median([r.report.test_mae for r in done])
            else:
                mse = _median([r.report.checkpoints[140]["mse"] for r in done])
                mae = _median([r.report.checkpoints[140]["mae"] for r in done])
            medians[(kind, epochs)] = mse
            lines.append(f"{kind},{epochs},1,[5],{fmt(mse)},{fmt(mae)},{len(done)},{len(runs) - len(done)}")
        curves[kind] = _median_curve(runs)
    claims = [
        Claim("elliptic_140_vs_affine_140_ratio", medians[("elliptic", 140)] / medians[("affine", 140)],
              0.5, medians[("elliptic", 140)] < 0.5 * medians[("affine", 140)]),
        Claim("elliptic_250_median_mse", medians[("elliptic", 250)], 0.2, medians[("elliptic", 250)] <= 0.2),
    ]
    res = SuiteResult("shallow_table1", "\n".join(lines) + "\n", claims, failures)
    res.extra["loss_curves.csv"] = _curves_csv(curves)
    res.extra["medians"] = medians
    return res


DEEP_ARCHS = (
    ("elliptic", (5, 5, 5)),
    ("elliptic", (30, 30, 30)),
    ("elliptic", (5, 5, 5, 5)),
    ("affine", (5, 5, 5, 5)),
    ("affine", (30, 30, 30, 30)),
)


def fraction_below(a, b, start: int) -> float:
    """Share of epochs ``>= start`` where curve ``a`` lies strictly below ``b``."""
    a = np.asarray(a)[start:]
    b = np.asarray(b)[start:]
    n = min(a.size, b.size)
    if n == 0:
        return math.nan
    return float(np.mean(a[:n] < b[:n]))


def deep_table2(seed: int, out: Path | None, sc: SuiteConfig) -> SuiteResult:
    """Deep elliptic and affine networks on f2 at 140 epochs."""
    data_seed, seeds = _replicate_seeds(seed, sc.replicates)
    configs = []
    for kind, hidden in DEEP_ARCHS:
        label = _arch_label(kind, hidden)
        for i, s in enumerate(seeds):
            configs.append(ExperimentConfig(
                name=f"{label}_s{i}", dataset="f2", kind=kind, hidden=list(hidden), epochs=140,
                seed=s, data_seed=data_seed,
            ))
    results = _run_grid(configs, out)
    lines = ["network,epochs,hidden_layers,units,median_test_mse,median_test_mae,seeds,failed"]
    curves, medians = {}, {}
    failures = 0
    for kind, hidden in DEEP_ARCHS:
        label = _arch_label(kind, hidden)
        runs = [results[f"{label}_s{i}"] for i in range(len(seeds))]
        done = [r for r in runs if r.ok]
        failures += len(runs) - len(done)
        mse = _median([r.report.test_mse for r in done])
        mae = _median([r.report.test_mae for r in done])
        medians[label] = mse
        units = "[" + ", ".join(str(h) for h in hidden) + "]"
        lines.append(f'{kind},140,{len(hidden)},"{units}",{fmt(mse)},{fmt(mae)},{len(done)},{len(runs) - len(done)}')
        curves[label] = _median_curve(runs)
    start = sc.curve_from_epoch
    claims = [Claim("elliptic_30x30x30_median_mse", medians["elliptic_30x30x30"], 0.02,
                    medians["elliptic_30x30x30"] <= 0.02)]
    for width in (5, 30):
        frac = fraction_below(curves[f"elliptic_{width}x{width}x{width}"],
                              curves[f"affine_{width}x{width}x{width}x{width}"], start)
        claims.append(Claim(f"elliptic3_below_affine4_width{width}_fraction", frac, sc.curve_fraction,
                            frac >= sc.curve_fraction))
    res = SuiteResult("deep_table2", "\n".join(lines) + "\n", claims, failures)
    res.extra["loss_curves.csv"] = _curves_csv(curves)
    res.extra["medians"] = medians
    return res


def clusters_table3(seed: int, out: Path | None, sc: SuiteConfig) -> SuiteResult:
    """Minority-core classification with one hidden layer of each kind, 20 epochs.

    Also runs the separable two-blob sanity case with [5, 5, 5] networks for 30 epochs.
    """
    data_seed, seeds = _replicate_seeds(seed, sc.replicates)
    rows = [("subspecies", kind, [20], 20) for kind in ("elliptic", "affine", "hyperbolic")]
    rows += [("two_blobs", kind, [5, 5, 5], 30) for kind in ("elliptic", "affine", "hyperbolic")]
    configs = []
    for dataset, kind, hidden, epochs in rows:
        for i, s in enumerate(seeds):
            configs.append(ExperimentConfig(
                name=f"{dataset}_{_arch_label(kind, hidden)}_s{i}", dataset=dataset, kind=kind,
                hidden=hidden, epochs=epochs, seed=s, data_seed=data_seed,
            ))
    results = _run_grid(configs, out)
    lines = ["dataset,network,epochs,units,median_test_accuracy,median_test_cross_entropy,seeds,failed"]
    acc = {}
    failures = 0
    for dataset, kind, hidden, epochs in rows:
        runs = [results[f"{dataset}_{_arch_label(kind, hidden)}_s{i}"] for i in range(len(seeds))]
        done = [r for r in runs if r.ok]
        failures += len(runs) - len(done)
        a = _median([r.report.test_accuracy for r in done])
        ce = _median([r.report.test_cross_entropy for r in done])
        acc[(dataset, kind)] = a
        units = "[" + ", ".join(str(h) for h in hidden) + "]"
        lines.append(f'{dataset},{kind},{epochs},"{units}",{fmt(a)},{fmt(ce)},{len(done)},{len(runs) - len(done)}')
    claims = [
        Claim("subspecies_elliptic_accuracy", acc[("subspecies", "elliptic")], 0.99,
              acc[("subspecies", "elliptic")] >= 0.99),
        Claim("subspecies_affine_minus_elliptic", acc[("subspecies", "affine")] - acc[("subspecies", "elliptic")],
              0.0, acc[("subspecies", "affine")] < acc[("subspecies", "elliptic")]),
    ]
    for kind in ("elliptic", "affine", "hyperbolic"):
        claims.append(Claim(f"two_blobs_{kind}_accuracy", acc[("two_blobs", kind)], 0.99,
                            acc[("two_blobs", kind)] >= 0.99))
    res = SuiteResult("clusters_table3", "\n".join(lines) + "\n", claims, failures)
    res.extra["accuracy"] = acc
    return res


def rate_fig3(seed: int, out: Path | None, sc: SuiteConfig) -> SuiteResult:
    """Greedy N-term errors for random one-dimensional frame expansions."""
    mother = normalize_mother(4.0, 1)
    rng = Rng(seed)
    lines = ["target,atoms,l1_norm,max_error_over_bound,max_log_ratio,monotone"]
    claims = []
    worst_bound = -math.inf
    worst_log = -math.inf
    for t in range(sc.rate_targets):
        target = synthetic_target(mother, rng.spawn_seed())
        result = rate_experiment(mother, target, sc.rate_N)
        if out is not None:
            write_text(out / f"rate_target{t:02d}.csv", result.to_csv())
        over = max(r.error - (r.bound * (1 + 1e-6) + 1e-5) for r in result.rows)
        ratio = max(r.error / r.bound for r in result.rows)
        logs = [r.log_ratio for r in result.rows if r.N >= 1]
        worst_bound = max(worst_bound, over)
        worst_log = max(worst_log, max(logs))
        lines.append(f"{t},{result.n_atoms},{fmt(result.l1_norm)},{fmt(ratio)},{fmt(max(logs))},{int(result.monotone)}")
    claims.append(Claim("max_error_minus_bound", worst_bound, 0.0, worst_bound <= 0.0))
    claims.append(Claim("max_log_ratio", worst_log, -0.5, worst_log <= -0.5 + 1e-6))
    return SuiteResult("rate_fig3", "\n".join(lines) + "\n", claims, 0)


SUITE_FUNCS = {
    "shallow_table1": shallow_table1,
    "deep_table2": deep_table2,
    "clusters_table3": clusters_table3,
    "rate_fig3": rate_fig3,
}


def compare_suite(suite: str, seed: int = 42, out_dir=None, config: SuiteConfig | None = None) -> SuiteResult:
    """Run one suite; with ``out_dir`` writes ``summary.csv``, ``claims.csv`` and run artifacts."""
    if suite not in SUITE_FUNCS:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    sc = config or SuiteConfig()
    out = None if out_dir is None else Path(out_dir) / suite
    res = SUITE_FUNCS[suite](seed, out, sc)
    if out is not None:
        write_text(out / "summary.csv", res.summary_csv)
        write_text(out / "claims.csv", claims_csv(res.claims))
        for name, text in res.extra.items():
            if name.endswith(".csv"):
                write_text(out / name, text)
    for claim in res.claims:
        log.info("%s %s: %.6g (threshold %.6g)", suite, claim.name, claim.value, claim.threshold)
    return res
