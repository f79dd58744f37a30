"""Flat ``key = value`` run configuration shared by all CLI commands."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .loss import LossWeights
from .model import ModelConfig
from .sensing import ChannelSpec
from .signal import SensingSpec, WindowSpec
from .train import TrainConfig


@dataclass(frozen=True)
class RunConfig:
    window_size: int = 512
    sample_rate: int = 48000
    kind: str = "sine"
    f: float = 18000.0
    f0: float = 18000.0
    f1: float = 20000.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    recovery_weight: float = 1.0
    recovery_mode: str = "sum_abs"
    learning_rate: float = 0.1
    epochs: int = 10
    batch_size: int = 32
    num_blocks: int = 2
    hidden_channels: int = 2
    kernel_size: int = 5
    dilation: int = 1
    gating: str = "tanh_sigmoid"
    sinc: bool = True
    sinc_lo: float = 17500.0
    sinc_hi: float = 20500.0
    sinc_taps: int = 129
    strategy: str = "clip"
    music_kind: str = "low_tones"
    music_duration: float = 20.0
    sim_duration: float = 60.0
    bpm: str = "12,15,18"
    reflector_gain: float = 0.05
    noise_level: float = 0.001
    seed: int = 0

    @property
    def window(self) -> WindowSpec:
        return WindowSpec(self.window_size, self.sample_rate)

    @property
    def spec(self) -> SensingSpec:
        return SensingSpec(kind=self.kind, f=self.f, f0=self.f0, f1=self.f1)

    @property
    def weights(self) -> LossWeights:
        return LossWeights(self.alpha, self.beta, self.gamma, self.recovery_weight)

    @property
    def model(self) -> ModelConfig:
        return ModelConfig(
            num_blocks=self.num_blocks, hidden_channels=self.hidden_channels, kernel_size=self.kernel_size,
            dilation=self.dilation, use_sinc=self.sinc, sinc_bands=((self.sinc_lo, self.sinc_hi),),
            sinc_taps=self.sinc_taps, gating=self.gating, window=self.window,
        )

    @property
    def train(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs, batch_size=self.batch_size,
                           weights=self.weights, recovery_mode=self.recovery_mode, seed=self.seed)

    @property
    def channel(self) -> ChannelSpec:
        return ChannelSpec(reflector_gain=self.reflector_gain, noise_level=self.noise_level)

    @property
    def bpms(self) -> list[float]:
        return [float(v) for v in self.bpm.split(",") if v.strip()]

    def with_overrides(self, pairs: dict[str, str]) -> "RunConfig":
        return replace(self, **_coerce(pairs))

    def dumps(self) -> str:
        return "".join(f"{f.name} = {_fmt(getattr(self, f.name))}\n" for f in fields(self))


def _fmt(v) -> str:
    return ("true" if v else "false") if isinstance(v, bool) else str(v)


def _coerce(pairs: dict[str, str]) -> dict:
    types = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    for key, raw in pairs.items():
        if key not in types:
            raise KeyError(f"unknown config key {key!r}")
        t = types[key]
        raw = raw.strip()
        if t == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"{key}: expected a boolean, got {raw!r}")
            out[key] = raw.lower() in ("true", "1", "yes")
        elif t == "int":
            out[key] = int(raw)
        elif t == "float":
            out[key] = float(raw)
        else:
            out[key] = raw
    return out


def parse_pairs(lines) -> dict[str, str]:
    pairs = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value, got {line!r}")
        k, v = line.split("=", 1)
        pairs[k.strip()] = v.strip()
    return pairs


def load_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg = cfg.with_overrides(parse_pairs(Path(path).read_text().splitlines()))
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg
