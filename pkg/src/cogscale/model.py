"""The cognitive scaling network.

``[x/m; z/m]`` -> gated residual conv blocks -> 1x1 merge -> sinc FIR ->
``x_hat = tanh(a) * m - z`` -> straight-through rounding. Because the link
adds ``-z`` after a bounded activation, ``x_hat + z`` can never leave
``[-m, m]``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np

from . import autodiff as ad
from .dsp import FirKernel, sinc_multi_band
from .signal import PCM_MAX, WindowSpec

CHECKPOINT_FORMAT = "cogscale-params"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    num_blocks: int = 2
    hidden_channels: int = 2
    kernel_size: int = 5
    dilation: int = 1
    use_sinc: bool = True
    sinc_bands: tuple[tuple[float, float], ...] = ((17500.0, 20500.0),)
    sinc_taps: int = 129
    learn_sinc: bool = False
    gating: Literal["tanh_sigmoid", "tanh_tanh"] = "tanh_sigmoid"
    window: WindowSpec = field(default_factory=WindowSpec)

    def __post_init__(self):
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.dilation < 1 or self.num_blocks < 1 or self.hidden_channels < 1:
            raise ValueError("dilation, num_blocks and hidden_channels must be >= 1")
        if self.sinc_taps < 1 or self.sinc_taps % 2 == 0:
            raise ValueError(f"sinc_taps must be a positive odd number, got {self.sinc_taps}")
        if self.use_sinc and self.sinc_taps >= self.window.size:
            raise ValueError(f"sinc_taps ({self.sinc_taps}) must be shorter than the window")
        if self.gating not in ("tanh_sigmoid", "tanh_tanh"):
            raise ValueError(f"unknown gating {self.gating!r}")
        bands = tuple((float(lo), float(hi)) for lo, hi in self.sinc_bands)
        object.__setattr__(self, "sinc_bands", bands)
        for lo, hi in bands:
            if not 0 <= lo < hi < self.window.nyquist:
                raise ValueError(f"sinc band ({lo}, {hi}) must lie inside (0, Nyquist)")

    def kernel(self) -> FirKernel:
        return sinc_multi_band(self.sinc_bands, self.sinc_taps, self.window)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sinc_bands"] = [list(b) for b in self.sinc_bands]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["window"] = WindowSpec(**d.get("window", {}))
        d["sinc_bands"] = tuple(tuple(b) for b in d.get("sinc_bands", cls.sinc_bands))
        return cls(**d)


Params = dict[str, np.ndarray]


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    C, K = config.hidden_channels, config.kernel_size
    shapes: dict[str, tuple[int, ...]] = {}
    if C != 2:
        shapes["input.w"], shapes["input.b"] = (C, 2, 1), (C,)
    for i in range(config.num_blocks):
        last = i == config.num_blocks - 1
        # skip and residual share one 1x1 output conv (2C wide) except in the last block
        out_ch = C if last else 2 * C
        shapes |= {
            f"block{i}.dil.w": (2 * C, C, K), f"block{i}.dil.b": (2 * C,),
            f"block{i}.cond.w": (2 * C, 1, 1), f"block{i}.cond.b": (2 * C,),
            f"block{i}.out.w": (out_ch, C, 1), f"block{i}.out.b": (out_ch,),
        }
    shapes["merge.w"], shapes["merge.b"] = (1, C, 1), (1,)
    if config.use_sinc and config.learn_sinc:
        shapes["sinc.taps"] = (1, 1, config.sinc_taps)
    return shapes


def init_params(config: ModelConfig = ModelConfig(), seed: int = 0) -> Params:
    """Uniform in +-sqrt(1/fan_in); deterministic for a seed."""
    rng = np.random.default_rng(seed)
    params = {}
    shapes = param_shapes(config)
    for name, shape in shapes.items():
        if name == "sinc.taps":
            params[name] = config.kernel().taps.reshape(shape).copy()
            continue
        wshape = shapes[name[:-1] + "w"]
        bound = np.sqrt(1.0 / (wshape[1] * wshape[2]))
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def param_count(params: Params) -> int:
    return int(sum(v.size for v in params.values()))


class ForwardResult(NamedTuple):
    xhat: ad.Tensor  # adapted sensing window(s), PCM scale
    a: ad.Tensor  # pre-link activation


_TOEPLITZ: dict[tuple, np.ndarray] = {}


def _fir_matrix(config: ModelConfig) -> np.ndarray:
    """'same' convolution with the fixed kernel as a (size, size) matrix."""
    key = (config.sinc_bands, config.sinc_taps, config.window)
    if key not in _TOEPLITZ:
        taps = config.kernel().taps
        L, half = config.window.size, (len(taps) - 1) // 2
        # y[i] = sum_n x[n] * taps[n - i + half], i.e. y = x @ M
        d = np.arange(L)[:, None] - np.arange(L)[None, :] + half
        valid = (d >= 0) & (d < len(taps))
        M = np.where(valid, taps[np.clip(d, 0, len(taps) - 1)], 0.0)
        M.flags.writeable = False
        _TOEPLITZ[key] = M
    return _TOEPLITZ[key]


def _gate(filt, gate, gating):
    if gating == "tanh_sigmoid":
        return ad.tanh(filt) * ad.sigmoid(gate)
    return ad.tanh(filt) * ad.tanh(gate)


def forward(x, z, params, config: ModelConfig = ModelConfig(), quantize: bool = True) -> ForwardResult:
    """Run the network on one window ``(size,)`` or a batch ``(batch, size)``.

    ``params`` values may be arrays or Tensors (for training).
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ValueError(f"x and z differ in shape: {x.shape} vs {z.shape}")
    if x.shape[-1] != config.window.size:
        raise ValueError(f"window has {x.shape[-1]} samples, model expects {config.window.size}")
    single = x.ndim == 1
    xb, zb = np.atleast_2d(x), np.atleast_2d(z)
    p = {k: ad.as_tensor(v) for k, v in params.items()}
    C = config.hidden_channels

    zin = ad.Tensor(zb[:, None, :] / PCM_MAX)
    h = ad.Tensor(np.stack([xb, zb], axis=1) / PCM_MAX)
    if "input.w" in p:
        h = ad.conv1d(h, p["input.w"], p["input.b"])
    skips = None
    for i in range(config.num_blocks):
        y = ad.conv1d(h, p[f"block{i}.dil.w"], p[f"block{i}.dil.b"], dilation=config.dilation) \
            + ad.conv1d(zin, p[f"block{i}.cond.w"], p[f"block{i}.cond.b"])
        v = _gate(y[:, :C], y[:, C:], config.gating)
        o = ad.conv1d(v, p[f"block{i}.out.w"], p[f"block{i}.out.b"])
        if i < config.num_blocks - 1:
            h = h + o[:, :C]
            skip = o[:, C:]
        else:
            skip = o
        skips = skip if skips is None else skips + skip
    merged = ad.conv1d(skips, p["merge.w"], p["merge.b"])[:, 0]
    if not config.use_sinc:
        a = merged
    elif "sinc.taps" in p:
        n = config.sinc_taps
        a = ad.conv1d(merged[:, None, :], p["sinc.taps"], padding=(n - 1) // 2)[:, 0]
    else:
        a = ad.linear(merged, _fir_matrix(config), "sinc_fir")
    xhat = ad.scale(ad.tanh(a), PCM_MAX) - ad.Tensor(zb)
    if quantize:
        xhat = ad.round_ste(xhat)
    if single:
        xhat, a = xhat[0], a[0]
    return ForwardResult(xhat, a)


def adapt(x, z, params, config: ModelConfig = ModelConfig()) -> np.ndarray:
    """Inference: the integer-valued adapted sensing window(s)."""
    return forward(x, z, params, config).xhat.value


def mixed_output(x, z, params, config: ModelConfig = ModelConfig(), quantize: bool = True) -> np.ndarray:
    """What the mixer emits: ``x_hat + z`` (equals ``tanh(a) * m`` before rounding)."""
    res = forward(x, z, params, config, quantize=quantize)
    return res.xhat.value + np.asarray(z, dtype=np.float64)


def save_params(path, params: Params, config: ModelConfig, meta: dict | None = None) -> None:
    """JSON checkpoint: name -> {shape, row-major float64 data}; written atomically."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "meta": meta or {},
        "params": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()} for k, v in params.items()},
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_params(path) -> tuple[Params, ModelConfig, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    config = ModelConfig.from_dict(doc["config"])
    params = {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in doc["params"].items()}
    expected = param_shapes(config)
    if {k: v.shape for k, v in params.items()} != expected:
        raise ValueError("checkpoint parameter shapes do not match its config")
    return params, config, doc.get("meta", {})


def direct_window_optimize(x, z, spec, weights=None, steps: int = 500, lr: float = 0.05,
                           init: np.ndarray | None = None, mode: str = "sum_abs") -> np.ndarray:
    """Gradient descent on a free vector ``a`` through ``tanh(a)·m − z`` for one window.

    A model-free probe of the loss landscape. ``a`` starts at ``0.1·x/m``
    unless ``init`` is given (zero is a stationary point of the norms).
    Returns the float x̂ of the iterate with the lowest total loss.
    """
    from .loss import LossWeights, loss_graph, target_bins_for

    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.ndim != 1 or x.shape != z.shape:
        raise ValueError("direct_window_optimize takes a single window")
    weights = weights or LossWeights()
    if spec.kind == "sine":
        weights = LossWeights(weights.alpha, weights.beta, 0.0, weights.recovery)
    bins = target_bins_for(spec, WindowSpec(size=len(x)))
    a = 0.1 * x / PCM_MAX if init is None else np.array(init, dtype=np.float64)
    m1, v1 = np.zeros_like(a), np.zeros_like(a)
    best, best_loss = None, np.inf
    for t in range(steps + 1):
        at = ad.Tensor(a, requires_grad=True)
        xhat = ad.scale(ad.tanh(at), PCM_MAX) - ad.as_tensor(z)
        total = loss_graph(x, xhat, z, bins, spec.kind, weights, mode)["total"]
        if float(total.value) < best_loss:
            best_loss, best = float(total.value), xhat.value.copy()
        if t == steps:
            break
        total.backward()
        g = at.grad
        m1 = 0.9 * m1 + 0.1 * g
        v1 = 0.999 * v1 + 0.001 * g * g
        a = a - lr * (m1 / (1 - 0.9 ** (t + 1))) / (np.sqrt(v1 / (1 - 0.999 ** (t + 1))) + 1e-8)
    return best
