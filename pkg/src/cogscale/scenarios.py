"""Closed-loop simulations tying mixer strategies to receiver pipelines."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import mixer
from . import model as M
from .audio_io import synth_music
from .sensing import ChannelSpec, BreathSeries, breath_series, bpm_mae, detect_bpm, simulate_channel
from .signal import SensingSpec, WindowSpec, frame, gen_windows, quantize

SCENARIOS = ("no_music", "cognitive", "clip", "down2", "down4")


def strategy_for(name: str, params=None, config: M.ModelConfig | None = None):
    if name == "clip":
        return mixer.Clip()
    if name == "down2":
        return mixer.Downscale(2)
    if name == "down4":
        return mixer.Downscale(4)
    if name == "cognitive":
        return mixer.Cognitive(params, config or M.ModelConfig())
    raise ValueError(f"unknown strategy {name!r}")


def transmit(name: str, x: np.ndarray, z: np.ndarray, params=None, config=None, chunk: int = 256) -> np.ndarray:
    """Speaker output windows for one scenario."""
    if name == "no_music":
        return quantize(x).astype(np.float64)
    strat = strategy_for(name, params, config)
    out = np.empty_like(x)
    for s in range(0, len(x), chunk):
        out[s:s + chunk] = quantize(mixer.mix_float(x[s:s + chunk], z[s:s + chunk], strat))
    return out


@dataclass
class RespirationResult:
    scenario: str
    bpm_true: float
    mae: float
    mean_amplitude: float
    reports: list
    series: BreathSeries


def run_respiration(bpm: float, params=None, config: M.ModelConfig | None = None,
                    scenarios=SCENARIOS, duration: float = 60.0, seed: int = 0,
                    channel: ChannelSpec = ChannelSpec(), music_kind: str = "low_tones",
                    spec: SensingSpec = SensingSpec()) -> list[RespirationResult]:
    """Every scenario shares the same music, channel realization and noise seed."""
    config = config or M.ModelConfig()
    win = config.window
    music = frame(synth_music(music_kind, duration, seed, win.sample_rate).samples, win).windows
    x = gen_windows(spec, win, len(music))
    ch = replace(channel, breath_bpm=bpm)
    target = int(round(spec.f / win.bin_hz))
    out = []
    for name in scenarios:
        if name == "cognitive" and params is None:
            raise ValueError("the cognitive scenario needs trained parameters")
        tx = transmit(name, x, music, params, config)
        rx = simulate_channel(tx, ch, seed, win)
        series = breath_series(rx, target, win)
        reports = detect_bpm(series)
        out.append(RespirationResult(name, bpm, bpm_mae(reports, bpm), float(np.mean(series.values)),
                                     reports, series))
    return out


def distortion_pairs(params, config: M.ModelConfig, music_windows: np.ndarray, spec: SensingSpec = SensingSpec(),
                     reference: str = "sum") -> np.ndarray:
    """(clip, cognitive) distortion energy per window.

    ``reference="sum"`` measures against the unclipped ``x + z``;
    ``reference="sensing"`` against the ideal sensing window alone.
    """
    from .loss import target_bins_for

    win = config.window
    bins = target_bins_for(spec, win)
    x = gen_windows(spec, win, len(music_windows))
    clean = x + music_windows if reference == "sum" else x
    clip = transmit("clip", x, music_windows)
    cog = transmit("cognitive", x, music_windows, params, config)
    return np.array([
        (mixer.distortion_energy(clip[i], clean[i], bins, win), mixer.distortion_energy(cog[i], clean[i], bins, win))
        for i in range(len(x))
    ])
