"""Throughput and latency of the cognitive mixer against the per-window budget."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import mixer
from . import model as M
from .audio_io import synth_music
from .signal import SensingSpec, frame, gen_windows


@dataclass
class BenchReport:
    windows: int
    single_fps: float  # one window per forward call
    batched_fps: float  # all windows in one vectorized call
    mean_latency_ms: float  # forward + mix + quantize, single window
    budget_ms: float
    param_count: int
    param_bytes: int

    @property
    def within_budget(self) -> bool:
        return self.mean_latency_ms < self.budget_ms

    def as_dict(self) -> dict:
        return {**self.__dict__, "within_budget": self.within_budget}


def benchmark(params, config: M.ModelConfig = M.ModelConfig(), windows: int = 200,
              spec: SensingSpec = SensingSpec(), seed: int = 0, repeats: int = 3) -> BenchReport:
    """Time the inference path on synthetic music.

    The machine is treated as single-core, so "parallel" here means one
    batched call over many windows rather than multiple threads.
    """
    win = config.window
    music = frame(synth_music("low_tones", windows * win.duration + 1e-3, seed, win.sample_rate).samples,
                  win).windows[:windows]
    x = gen_windows(spec, win, len(music))
    strat = mixer.Cognitive(params, config)
    mixer.mix_float(x[:1], music[:1], strat)  # warm caches (DFT and FIR matrices)

    lat = np.empty(len(music))
    for i in range(len(music)):
        t0 = time.perf_counter()
        mixer.mix(x[i], music[i], strat, spec, win)
        lat[i] = time.perf_counter() - t0
    single = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for i in range(len(music)):
            mixer.mix_float(x[i], music[i], strat)
        single = min(single, time.perf_counter() - t0)
    batched = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        mixer.mix_float(x, music, strat)
        batched = min(batched, time.perf_counter() - t0)
    n = M.param_count(params)
    return BenchReport(
        windows=len(music),
        single_fps=len(music) / single,
        batched_fps=len(music) / batched,
        mean_latency_ms=1e3 * float(np.mean(lat)),
        budget_ms=1e3 * win.duration,
        param_count=n,
        param_bytes=8 * n,
    )
