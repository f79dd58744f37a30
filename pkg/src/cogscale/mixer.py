"""Speaker-mixer emulation: clipping, fixed downscaling and cognitive scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model as M
from .dsp import rfft_mag
from .loss import TargetBins, target_bins_for
from .signal import PCM_MAX, SensingSpec, WindowSpec, quantize


@dataclass(frozen=True)
class Clip:
    name = "clip"


@dataclass(frozen=True)
class Downscale:
    k: int = 2
    # False: sensing gets 1/k and music the rest; True: the whole sum is divided by k
    uniform: bool = False

    def __post_init__(self):
        if self.k not in (2, 4):
            raise ValueError(f"downscale factor must be 2 or 4, got {self.k}")

    @property
    def name(self):
        return f"down{self.k}"


@dataclass(frozen=True)
class Cognitive:
    params: dict | None
    config: M.ModelConfig = M.ModelConfig()
    name = "cognitive"


MixerStrategy = Clip | Downscale | Cognitive


@dataclass
class MixResult:
    mixed: np.ndarray  # int16, within [-m, m]
    overloaded: bool
    peak_level: float
    sensing_attenuation_db: float


def _bin_level(w, bins: TargetBins, win: WindowSpec) -> np.ndarray:
    return np.linalg.norm(rfft_mag(w, win=win).mags[..., bins.bins], axis=-1)


def downscale_gains(strategy: Downscale) -> tuple[float, float]:
    """(sensing gain, music gain) of a downscale strategy."""
    if strategy.k == 2 or strategy.uniform:
        return 1 / strategy.k, 1 / strategy.k
    return 1 / strategy.k, 1 - 1 / strategy.k


def mix_float(x, z, strategy) -> np.ndarray:
    """The strategy's output before quantization."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ValueError(f"x and z differ in shape: {x.shape} vs {z.shape}")
    if isinstance(strategy, Clip):
        return np.clip(x + z, -PCM_MAX, PCM_MAX)
    if isinstance(strategy, Downscale):
        gs, gz = downscale_gains(strategy)
        return gs * x + gz * z
    if isinstance(strategy, Cognitive):
        if strategy.params is None:
            raise ValueError("cognitive mixing needs trained parameters")
        zq = quantize(z).astype(np.float64)
        return M.forward(x, zq, strategy.params, strategy.config).xhat.value + zq
    raise TypeError(f"unknown mixer strategy {strategy!r}")


def mix(x, z, strategy, spec: SensingSpec = SensingSpec(), win: WindowSpec = WindowSpec()) -> MixResult:
    """Mix one window (or a stack) of sensing ``x`` and music ``z``."""
    x = np.asarray(x, dtype=np.float64)
    out = quantize(mix_float(x, z, strategy))
    bins = target_bins_for(spec, win)
    ref = _bin_level(x, bins, win)
    got = _bin_level(out.astype(np.float64), bins, win)
    with np.errstate(divide="ignore"):
        atten = float(np.mean(-20 * np.log10(got / ref))) if np.all(ref > 0) else float("nan")
    return MixResult(
        mixed=out,
        overloaded=bool(np.any(np.abs(x + np.asarray(z, dtype=np.float64)) > PCM_MAX)),
        peak_level=float(np.max(np.abs(out))),
        sensing_attenuation_db=atten,
    )


def overload_fraction(x, z) -> float:
    s = np.asarray(x, dtype=np.float64) + np.asarray(z, dtype=np.float64)
    return float(np.mean(np.abs(s) > PCM_MAX))


def distortion_energy(mixed, clean, bins: TargetBins, win: WindowSpec = WindowSpec()) -> float:
    """Sum over non-target bins of squared normalized-magnitude differences."""
    a = rfft_mag(np.asarray(mixed, dtype=np.float64), win=win).mags
    b = rfft_mag(np.asarray(clean, dtype=np.float64), win=win).mags
    off = bins.complement
    return float(np.sum((a[..., off] - b[..., off]) ** 2) / max(1, np.prod(a.shape[:-1])))
