"""Mono PCM WAV I/O, linear resampling and synthetic music stand-ins."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .signal import PCM_MAX, quantize

MusicKind = Literal["low_tones", "tone_cluster", "noise_band", "speech_like"]
MUSIC_KINDS = ("low_tones", "tone_cluster", "noise_band", "speech_like")


class WavFormatError(ValueError):
    pass


@dataclass
class AudioBuffer:
    samples: np.ndarray  # PCM-scale floats (16-bit range)
    sample_rate: int
    bit_depth: int = 16

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio samples must be finite")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> AudioBuffer:
    """Read a mono 8- or 16-bit PCM WAV; 8-bit data is widened to 16-bit."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as f:
            channels, width, rate, frames = f.getnchannels(), f.getsampwidth(), f.getframerate(), f.getnframes()
            raw = f.readframes(frames)
    except (wave.Error, EOFError) as e:
        raise WavFormatError(f"{path}: not a readable PCM WAV file ({e})") from None
    if channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {channels} channels")
    if len(raw) != frames * width:
        raise WavFormatError(f"{path}: truncated data chunk ({len(raw)} of {frames * width} bytes)")
    if width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.int32) - 128) * 256
        return AudioBuffer(data.astype(np.float64), rate, 8)
    if width == 2:
        return AudioBuffer(np.frombuffer(raw, dtype="<i2").astype(np.float64), rate, 16)
    raise WavFormatError(f"{path}: unsupported sample width {8 * width} bits")


def write_wav(path, buffer: AudioBuffer) -> None:
    """Write 16-bit little-endian mono; samples are rounded and clamped to [-m, m]."""
    path = Path(path)
    pcm = quantize(buffer.samples).astype("<i2")
    tmp = path.with_name(path.name + ".tmp")
    with wave.open(str(tmp), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(int(buffer.sample_rate))
        f.writeframes(pcm.tobytes())
    tmp.replace(path)


def resample_linear(buffer: AudioBuffer, target_hz: int) -> AudioBuffer:
    """Linear interpolation onto a uniform grid at ``target_hz``.

    Duration is preserved (``n * target / source`` samples); points past the
    last input sample hold its value.
    """
    if target_hz <= 0:
        raise ValueError("target sample rate must be positive")
    if target_hz == buffer.sample_rate or len(buffer.samples) < 2:
        return AudioBuffer(buffer.samples.copy(), target_hz, buffer.bit_depth)
    n_out = int(round(len(buffer.samples) * target_hz / buffer.sample_rate))
    t_out = np.arange(n_out) * (buffer.sample_rate / target_hz)
    out = np.interp(t_out, np.arange(len(buffer.samples)), buffer.samples)
    return AudioBuffer(out, target_hz, buffer.bit_depth)


def load_music(path, sample_rate: int = 48000) -> AudioBuffer:
    """Read a WAV and bring it to ``sample_rate`` and 16-bit integer values."""
    buf = resample_linear(read_wav(path), sample_rate)
    return AudioBuffer(quantize(buf.samples).astype(np.float64), sample_rate, 16)


def _bandlimit(x: np.ndarray, lo: float, hi: float, sr: int) -> np.ndarray:
    X = np.fft.rfft(x)
    f = np.fft.rfftfreq(len(x), 1 / sr)
    X[(f < lo) | (f > hi)] = 0
    return np.fft.irfft(X, len(x))


def synth_music(kind: MusicKind = "low_tones", duration: float = 10.0, seed: int = 0,
                sample_rate: int = 48000, peak: float = 0.7) -> AudioBuffer:
    """Deterministic stand-in audio with all energy well below 16 kHz.

    Returned samples are integer-valued with ``max|s| <= floor(peak * m)``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if kind not in MUSIC_KINDS:
        raise ValueError(f"unknown music kind {kind!r}; choose from {MUSIC_KINDS}")
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)

    if kind in ("low_tones", "tone_cluster"):
        note_len = 0.25 if kind == "low_tones" else 0.5
        fmin, fmax, voices = (55.0, 1000.0, 3) if kind == "low_tones" else (200.0, 4000.0, 8)
        per_note = int(note_len * sample_rate)
        ramp = np.minimum(1.0, np.minimum(np.arange(per_note), np.arange(per_note)[::-1]) / (0.005 * sample_rate))
        env = ramp * np.exp(-np.arange(per_note) / (0.4 * per_note))
        for start in range(0, n, per_note):
            seg = slice(start, min(n, start + per_note))
            tt = t[seg]
            for _ in range(voices):
                f = np.exp(rng.uniform(np.log(fmin), np.log(fmax)))
                amp = rng.uniform(0.3, 1.0)
                out[seg] += amp * env[: len(tt)] * np.sin(2 * np.pi * f * tt + rng.uniform(0, 2 * np.pi))
    elif kind == "noise_band":
        out = _bandlimit(rng.standard_normal(n), 50.0, 8000.0, sample_rate)
    else:  # speech_like: formant-shaped noise gated by a syllable envelope
        noise = rng.standard_normal(n)
        voiced = sum(
            np.sin(2 * np.pi * h * 140.0 * t) / h for h in range(1, 25) if h * 140.0 < 4000
        )
        src = _bandlimit(noise * 0.3 + voiced, 150.0, 3800.0, sample_rate)
        syll = 0.5 * (1 + np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi)))
        pauses = np.repeat(rng.random(int(np.ceil(duration)) + 1) > 0.25, sample_rate)[:n]
        out = src * syll * pauses

    top = np.max(np.abs(out))
    if top == 0:
        return AudioBuffer(out, sample_rate)
    target = np.floor(peak * PCM_MAX)
    pcm = np.clip(np.round(out / top * target), -target, target)
    return AudioBuffer(pcm, sample_rate)
