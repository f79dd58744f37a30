"""Dataset splitting, Adam training loop, evaluation and ablation sweeps."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from . import autodiff as ad
from . import model as M
from .loss import LossBreakdown, LossWeights, RecoveryMode, breakdown_from_graph, loss_graph, target_bins_for
from .signal import SensingSpec, gen_windows

log = logging.getLogger(__name__)

HISTORY_FIELDS = ["epoch", "split", "target", "recovery", "amplitude", "variance", "total"]


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 10
    batch_size: int = 32
    weights: LossWeights = LossWeights()
    recovery_mode: RecoveryMode = "sum_abs"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray


def split(n_windows: int, seed: int = 0) -> DatasetSplit:
    """Last 10% (sequential) is test; the rest is shuffled 80/20 into train/valid."""
    if n_windows < 10:
        raise ValueError(f"need at least 10 windows to split, got {n_windows}")
    n_test = n_windows // 10
    head = n_windows - n_test
    order = np.random.default_rng(seed).permutation(head)
    n_train = int(round(0.8 * head))
    return DatasetSplit(np.sort(order[:n_train]), np.sort(order[n_train:]), np.arange(head, n_windows))


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """In-place update. A zero gradient leaves parameters untouched."""
        self.t += 1
        bc1 = 1 - self.beta1**self.t
        bc2 = 1 - self.beta2**self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + self.eps)


def effective_weights(spec: SensingSpec, weights: LossWeights) -> LossWeights:
    # a single target bin has no spread to equalize
    return replace(weights, gamma=0.0) if spec.kind == "sine" else weights


def sensing_windows(spec: SensingSpec, config: M.ModelConfig, count: int) -> np.ndarray:
    """x paired positionally with music windows 0..count-1."""
    return gen_windows(spec, config.window, count)


def loss_and_grads(params, x, z, spec, weights, config, mode="sum_abs"):
    tparams = {k: ad.Tensor(v, requires_grad=True) for k, v in params.items()}
    res = M.forward(x, z, tparams, config)
    parts = loss_graph(x, res.xhat, z, target_bins_for(spec, config.window), spec.kind,
                       effective_weights(spec, weights), mode)
    ad.mean(parts["total"]).backward()
    grads = {k: (t.grad if t.grad is not None else np.zeros_like(t.value)) for k, t in tparams.items()}
    return breakdown_from_graph(parts), grads


def evaluate(params, music: np.ndarray, spec: SensingSpec, weights: LossWeights = LossWeights(),
             config: M.ModelConfig = M.ModelConfig(), indices: Iterable[int] | None = None,
             mode: RecoveryMode = "sum_abs", volume: tuple[float, float] = (1.0, 1.0),
             chunk: int = 256) -> LossBreakdown:
    """Mean sub-losses over the selected windows.

    ``volume`` = (sensing ratio, music ratio) scales the inputs before the model.
    """
    music = np.asarray(music, dtype=np.float64)
    idx = np.arange(len(music)) if indices is None else np.asarray(list(indices))
    x_all = sensing_windows(spec, config, len(music))
    rs, rz = volume
    bins = target_bins_for(spec, config.window)
    w = effective_weights(spec, weights)
    sums = np.zeros(5)
    for start in range(0, len(idx), chunk):
        sel = idx[start:start + chunk]
        x = rs * x_all[sel]
        z = np.round(rz * music[sel])
        res = M.forward(x, z, params, config)
        parts = loss_graph(x, res.xhat, z, bins, spec.kind, w, mode)
        b = breakdown_from_graph(parts)
        sums += len(sel) * np.array([b.target, b.recovery, b.amplitude, b.variance, b.total])
    return LossBreakdown(*(sums / len(idx)))


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[dict] = field(default_factory=list)
    initial: dict[str, LossBreakdown] = field(default_factory=dict)
    best_epoch: int = 0
    split: DatasetSplit | None = None
    seconds: float = 0.0


def train_model(music: np.ndarray, spec: SensingSpec, train_config: TrainConfig = TrainConfig(),
                model_config: M.ModelConfig = M.ModelConfig(), params=None,
                data_split: DatasetSplit | None = None) -> TrainResult:
    """Train on framed, integer-valued music windows ``(n, size)``.

    Returns the parameters with the lowest validation total, considering the
    untrained parameters as epoch 0.
    """
    t0 = time.perf_counter()
    music = np.asarray(music, dtype=np.float64)
    cfg = train_config
    data_split = data_split or split(len(music), cfg.seed)
    params = M.init_params(model_config, cfg.seed) if params is None else {k: v.copy() for k, v in params.items()}
    x_all = sensing_windows(spec, model_config, len(music))
    opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(cfg.seed + 1)

    def eval_split(idx):
        return evaluate(params, music, spec, cfg.weights, model_config, idx, cfg.recovery_mode)

    result = TrainResult(params={k: v.copy() for k, v in params.items()}, split=data_split)
    result.initial = {"train": eval_split(data_split.train), "valid": eval_split(data_split.valid)}
    best = result.initial["valid"].total
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(data_split.train)
        for start in range(0, len(order), cfg.batch_size):
            sel = np.sort(order[start:start + cfg.batch_size])
            b, grads = loss_and_grads(params, x_all[sel], music[sel], spec, cfg.weights,
                                      model_config, cfg.recovery_mode)
            if not np.isfinite(b.total) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise TrainingDiverged(f"non-finite loss or gradient at epoch {epoch}, step {start // cfg.batch_size}")
            opt.step(params, grads)
        tr, va = eval_split(data_split.train), eval_split(data_split.valid)
        for name, b in (("train", tr), ("valid", va)):
            result.history.append({"epoch": epoch, "split": name, **b.as_dict()})
        log.info("epoch %d train %.5f valid %.5f", epoch, tr.total, va.total)
        if va.total < best:
            best = va.total
            result.best_epoch = epoch
            result.params = {k: v.copy() for k, v in params.items()}
    result.seconds = time.perf_counter() - t0
    return result


def write_history(path, history: list[dict]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=HISTORY_FIELDS)
        w.writeheader()
        for row in history:
            w.writerow({k: (f"{row[k]:.10g}" if isinstance(row[k], float) else row[k]) for k in HISTORY_FIELDS})
    tmp.replace(path)


ABLATION_FIELDS = ["axis", "value", "target", "recovery", "amplitude", "variance", "total", "weighted_recovery"]


def ablate(music: np.ndarray, spec: SensingSpec, train_config: TrainConfig = TrainConfig(),
           model_config: M.ModelConfig = M.ModelConfig(),
           recovery_weights=(1.0, 1.2, 1.4, 1.6),
           volume_ratios=((1.0, 1.0), (0.8, 1.2), (0.6, 1.4)),
           sinc=(True, False)) -> list[dict]:
    """One test-set evaluation per grid cell.

    * recovery weight: retrain with the recovery term scaled.
    * volume ratio: train once at 1:1, test with scaled sensing/music.
    * sinc on/off: retrain with and without the FIR layer.
    """
    rows = []
    data_split = split(len(music), train_config.seed)

    def row(axis, value, b: LossBreakdown, rw=1.0):
        return {"axis": axis, "value": value, **b.as_dict(), "weighted_recovery": rw * b.recovery}

    for rw in recovery_weights:
        cfg = replace(train_config, weights=replace(train_config.weights, recovery=rw))
        res = train_model(music, spec, cfg, model_config, data_split=data_split)
        b = evaluate(res.params, music, spec, cfg.weights, model_config, data_split.test, cfg.recovery_mode)
        rows.append(row("recovery_weight", rw, b, rw))

    base = train_model(music, spec, train_config, model_config, data_split=data_split)
    for rs, rz in volume_ratios:
        b = evaluate(base.params, music, spec, train_config.weights, model_config, data_split.test,
                     train_config.recovery_mode, volume=(rs, rz))
        rows.append(row("volume_ratio", f"{rs:g}:{rz:g}", b))

    for on in sinc:
        mc = replace(model_config, use_sinc=on)
        res = base if on == model_config.use_sinc else train_model(music, spec, train_config, mc, data_split=data_split)
        b = evaluate(res.params, music, spec, train_config.weights, mc, data_split.test, train_config.recovery_mode)
        rows.append(row("sinc", "on" if on else "off", b))
    return rows


def write_rows(path, rows: list[dict], fieldnames: list[str]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{r[k]:.10g}" if isinstance(r[k], float) else r[k]) for k in fieldnames})
    tmp.replace(path)
