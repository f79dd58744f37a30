"""Sensing waveforms, PCM quantization, framing and volume scaling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

PCM_MAX = 2**15 - 1  # symmetric range [-m, m]; -2**15 is never emitted


@dataclass(frozen=True)
class WindowSpec:
    size: int = 512
    sample_rate: int = 48000

    def __post_init__(self):
        if self.size <= 0 or self.size % 2:
            raise ValueError(f"window size must be positive and even, got {self.size}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")

    @property
    def half(self) -> int:
        """Length of the one-sided spectrum (N)."""
        return self.size // 2

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.size

    @property
    def duration(self) -> float:
        return self.size / self.sample_rate


@dataclass(frozen=True)
class SensingSpec:
    kind: Literal["sine", "chirp"] = "sine"
    f: float = 18000.0
    f0: float = 18000.0
    f1: float = 20000.0
    amplitude: float = float(PCM_MAX)
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sine", "chirp"):
            raise ValueError(f"unknown sensing kind {self.kind!r}")
        if not 0 < self.amplitude <= PCM_MAX:
            raise ValueError(f"amplitude must lie in (0, {PCM_MAX}], got {self.amplitude}")
        if self.kind == "sine" and self.f <= 0:
            raise ValueError("sine frequency must be positive")
        if self.kind == "chirp" and not 0 < self.f0 < self.f1:
            raise ValueError(f"chirp needs 0 < f0 < f1, got f0={self.f0}, f1={self.f1}")

    @property
    def top_frequency(self) -> float:
        return self.f if self.kind == "sine" else self.f1

    def check_nyquist(self, win: WindowSpec) -> None:
        if self.top_frequency >= win.nyquist:
            raise ValueError(
                f"{self.top_frequency} Hz is at or above Nyquist ({win.nyquist} Hz)"
            )


def gen_sine(spec: SensingSpec, win: WindowSpec = WindowSpec(), start_index: int = 0) -> np.ndarray:
    """One window of ``A sin(2 pi f t + phi)`` starting at absolute sample ``start_index``.

    Windows generated with consecutive ``start_index`` values join without a
    phase jump.
    """
    if spec.kind != "sine":
        raise ValueError("gen_sine needs a sine spec")
    spec.check_nyquist(win)
    n = start_index + np.arange(win.size)
    # reduce the phase modulo one period before sin() to keep large offsets exact
    cycles = np.mod(spec.f * n, win.sample_rate) / win.sample_rate
    return spec.amplitude * np.sin(2 * np.pi * cycles + spec.phase)


def gen_chirp(spec: SensingSpec, win: WindowSpec = WindowSpec()) -> np.ndarray:
    """One linear chirp f0 -> f1 spanning exactly one window; every window restarts it."""
    if spec.kind != "chirp":
        raise ValueError("gen_chirp needs a chirp spec")
    spec.check_nyquist(win)
    t = np.arange(win.size) / win.sample_rate
    T = win.duration
    return spec.amplitude * np.sin(
        2 * np.pi * (spec.f0 * t + (spec.f1 - spec.f0) / (2 * T) * t**2) + spec.phase
    )


def chirp_inst_freq(spec: SensingSpec, win: WindowSpec, t: float) -> float:
    return spec.f0 + (spec.f1 - spec.f0) * t / win.duration


def gen_window(spec: SensingSpec, win: WindowSpec = WindowSpec(), index: int = 0) -> np.ndarray:
    """Sensing window number ``index`` of a continuous transmission."""
    if spec.kind == "sine":
        return gen_sine(spec, win, start_index=index * win.size)
    return gen_chirp(spec, win)


def gen_windows(spec: SensingSpec, win: WindowSpec, count: int, first: int = 0) -> np.ndarray:
    return np.stack([gen_window(spec, win, i) for i in range(first, first + count)])


def round_half_away(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize(w) -> np.ndarray:
    """Round half away from zero, then clamp to [-m, m]; returns int16."""
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValueError("cannot quantize non-finite samples")
    return np.clip(round_half_away(w), -PCM_MAX, PCM_MAX).astype(np.int16)


def dequantize(p) -> np.ndarray:
    return np.asarray(p, dtype=np.int16).astype(np.float64)


@dataclass
class Framed:
    windows: np.ndarray  # (count, size)
    padded: np.ndarray  # bool per window
    length: int  # samples in the original stream

    def __len__(self):
        return len(self.windows)

    def unframe(self) -> np.ndarray:
        return self.windows.reshape(-1)[: self.length]

    @property
    def complete(self) -> np.ndarray:
        """Only the windows that needed no padding."""
        return self.windows[~self.padded]


def frame(stream, win: WindowSpec = WindowSpec()) -> Framed:
    """Split a stream into non-overlapping windows, zero-padding the tail."""
    stream = np.asarray(stream, dtype=np.float64).reshape(-1)
    if stream.size == 0:
        raise ValueError("cannot frame an empty stream")
    count = -(-stream.size // win.size)
    buf = np.zeros(count * win.size)
    buf[: stream.size] = stream
    padded = np.zeros(count, dtype=bool)
    padded[-1] = stream.size % win.size != 0
    return Framed(buf.reshape(count, win.size), padded, stream.size)


def apply_volume_ratio(x, z, rs: float, rz: float) -> tuple[np.ndarray, np.ndarray]:
    if rs < 0 or rz < 0:
        raise ValueError("volume ratios must be non-negative")
    return rs * np.asarray(x, dtype=np.float64), rz * np.asarray(z, dtype=np.float64)


def ratio_db(rs: float, rz: float) -> float:
    """How much louder the music is than the sensing signal, in dB."""
    return 20 * np.log10(rz / rs)
