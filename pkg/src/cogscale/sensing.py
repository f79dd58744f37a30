"""Receiver-side pipelines and a two-path acoustic channel simulator.

Respiration: the 18 kHz bin amplitude per window forms a series sampled at
``fs / size`` (93.75 Hz); breathing rate comes from band-passed peaks.
FMCW: circular cross-correlation with the chirp template, then frame
differencing to cancel static reflections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, find_peaks, sosfiltfilt

from .dsp import rfft_mag, xcorr_profile
from .signal import PCM_MAX, WindowSpec

SPEED_OF_SOUND = 343.0


@dataclass(frozen=True)
class ChannelSpec:
    static_gain: float = 1.0
    reflector_gain: float = 0.05
    # ~0.4 m round trip at 48 kHz; puts the 18 kHz echo in quadrature with the direct path
    base_delay: float = 42.25 * 8 / 3
    breath_bpm: float = 15.0
    breath_amplitude: float = 0.002  # chest excursion, metres
    delay_step: float = 0.0  # extra samples of delay added per window (moving reflector)
    noise_level: float = 0.001  # std of additive noise as a fraction of m
    interp_taps: int = 33

    def __post_init__(self):
        for name in ("static_gain", "reflector_gain"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.base_delay < 0 or self.noise_level < 0 or self.breath_amplitude < 0:
            raise ValueError("delay, noise level and breath amplitude must be non-negative")
        if self.interp_taps % 2 == 0:
            raise ValueError("interp_taps must be odd")

    def delay_at(self, t: np.ndarray, window_index: np.ndarray, win: WindowSpec) -> np.ndarray:
        """Reflector delay in samples at time ``t`` seconds."""
        excursion = self.breath_amplitude * np.sin(2 * np.pi * self.breath_bpm / 60 * t)
        return self.base_delay + 2 * excursion / SPEED_OF_SOUND * win.sample_rate \
            + self.delay_step * window_index


def _frac_delay_kernel(frac: float, taps: int) -> np.ndarray:
    half = taps // 2
    i = np.arange(-half, half + 1)
    h = np.sinc(i - frac) * np.hamming(taps)
    return h / h.sum()


def simulate_channel(tx, channel: ChannelSpec = ChannelSpec(), seed: int = 0,
                     win: WindowSpec = WindowSpec()) -> np.ndarray:
    """``rx = g_s * tx + g_r * tx delayed by the breathing reflector + noise``.

    The reflector delay is held constant within a window and applied with a
    windowed-sinc fractional-delay filter over the continuous stream.
    """
    tx = np.atleast_2d(np.asarray(tx, dtype=np.float64))
    n_win, L = tx.shape
    if L != win.size:
        raise ValueError(f"windows have {L} samples, expected {win.size}")
    k = np.arange(n_win)
    delays = channel.delay_at((k + 0.5) * win.duration, k, win)
    half = channel.interp_taps // 2
    if np.max(delays) + half >= L or np.min(delays) - half < -L:
        raise ValueError("reflector delay must stay within one window")
    pad = 2 * L
    stream = np.concatenate([np.zeros(pad), tx.reshape(-1), np.zeros(pad)])
    echo = np.empty_like(tx)
    for j in range(n_win):
        whole = int(np.floor(delays[j]))
        h = _frac_delay_kernel(delays[j] - whole, channel.interp_taps)
        start = pad + j * L - whole - half
        seg = stream[start: start + L + 2 * half]
        echo[j] = np.convolve(seg, h, mode="valid")
    rng = np.random.default_rng(seed)
    noise = channel.noise_level * PCM_MAX * rng.standard_normal(tx.shape)
    return channel.static_gain * tx + channel.reflector_gain * echo + noise


@dataclass
class BreathSeries:
    values: np.ndarray
    frame_rate: float

    @property
    def duration(self) -> float:
        return len(self.values) / self.frame_rate

    @property
    def times(self) -> np.ndarray:
        return (np.arange(len(self.values)) + 0.5) / self.frame_rate


def breath_series(rx, target_bin: int = 192, win: WindowSpec = WindowSpec()) -> BreathSeries:
    mags = rfft_mag(np.atleast_2d(rx), win=win).mags
    return BreathSeries(mags[:, target_bin], win.sample_rate / win.size)


def bandpass_series(series: BreathSeries, lo_bpm: float = 8.0, hi_bpm: float = 22.0, order: int = 2) -> np.ndarray:
    sos = butter(order, [lo_bpm / 60, hi_bpm / 60], btype="band", fs=series.frame_rate, output="sos")
    v = series.values - np.mean(series.values)
    return sosfiltfilt(sos, v)


def breath_peaks(series: BreathSeries, lo_bpm: float = 8.0, hi_bpm: float = 22.0) -> np.ndarray:
    """Indices of breath peaks in the band-passed series."""
    y = bandpass_series(series, lo_bpm, hi_bpm)
    q75, q25 = np.percentile(y, [75, 25])
    scale = np.max(np.abs(series.values), initial=0.0)
    if q75 - q25 <= 1e-9 * max(scale, 1e-12):
        return np.array([], dtype=np.int64)
    distance = max(1, int(np.ceil(60 / hi_bpm * series.frame_rate)))
    peaks, _ = find_peaks(y, prominence=0.2 * (q75 - q25), distance=distance)
    return peaks


def detect_bpm(series: BreathSeries, window_s: float = 30.0, hop_s: float = 10.0,
               method: str = "interval") -> list[tuple[float, float]]:
    """Breathing rate every ``hop_s`` seconds over trailing ``window_s`` windows.

    Reports before the first full window use the data available so far.
    ``method="interval"`` converts the median peak spacing to BPM;
    ``method="count"`` uses peak count scaled to one minute.
    """
    if series.duration < window_s:
        raise ValueError(f"series covers {series.duration:.1f} s, need at least {window_s} s")
    if method not in ("interval", "count"):
        raise ValueError(f"unknown method {method!r}")
    peaks_t = series.times[breath_peaks(series)]
    out = []
    t = hop_s
    while t <= series.duration + 1e-9:
        lo = max(0.0, t - window_s)
        sel = peaks_t[(peaks_t >= lo) & (peaks_t < t)]
        if method == "count":
            bpm = len(sel) * 60.0 / (t - lo)
        else:
            bpm = 60.0 / np.median(np.diff(sel)) if len(sel) >= 2 else 0.0
        out.append((t, float(bpm)))
        t += hop_s
    return out


def bpm_mae(reports: list[tuple[float, float]], truth: float, min_time: float = 30.0) -> float:
    """Mean absolute error over reports made once a full window is available."""
    vals = [abs(b - truth) for t, b in reports if t >= min_time - 1e-9]
    return float(np.mean(vals))


def range_profile_map(template, rx) -> np.ndarray:
    """``|xcorr|`` per window, each row minus the previous one; the first row is dropped."""
    rx = np.atleast_2d(np.asarray(rx, dtype=np.float64))
    prof = np.abs(xcorr_profile(np.broadcast_to(template, rx.shape), rx))
    return np.diff(prof, axis=0)
