"""Radix-2 FFT, normalized magnitude spectra, windowed-sinc FIR design and
frequency-domain cross-correlation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .signal import PCM_MAX, WindowSpec


def is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@lru_cache(maxsize=None)
def _bitrev(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(size: int) -> np.ndarray:
    out = np.exp(-2j * np.pi * np.arange(size // 2) / size)
    out.flags.writeable = False
    return out


def fft(x) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT along the last axis."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if not is_pow2(n):
        raise ValueError(f"FFT length must be a power of two, got {n}")
    lead = x.shape[:-1]
    x = x[..., _bitrev(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = x.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(size)
        x = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return x


def ifft(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    return np.conj(fft(np.conj(X))) / X.shape[-1]


def rfft(x) -> np.ndarray:
    """Real-input FFT returning bins 0..n/2, computed with one half-length complex FFT."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if not is_pow2(n) or n < 2:
        raise ValueError(f"FFT length must be a power of two >= 2, got {n}")
    h = n // 2
    Z = fft(x[..., 0::2] + 1j * x[..., 1::2])
    Zr = np.conj(Z[..., (-np.arange(h + 1)) % h])  # conj(Z[h-k]) with Z[h] = Z[0]
    Zk = Z[..., np.arange(h + 1) % h]
    even = 0.5 * (Zk + Zr)
    odd = -0.5j * (Zk - Zr)
    w = np.exp(-2j * np.pi * np.arange(h + 1) / n)
    return even + w * odd


@dataclass(frozen=True)
class Spectrum:
    mags: np.ndarray
    bin_hz: float

    def __len__(self):
        return self.mags.shape[-1]

    def peak_bin(self) -> int:
        return int(np.argmax(self.mags))


def rfft_mag(w, amplitude_ref: float = PCM_MAX, win: WindowSpec | None = None) -> Spectrum:
    """One-sided magnitudes of bins 0..N-1 divided by ``N * amplitude_ref``.

    A bin-centered sine of amplitude ``amplitude_ref`` maps to exactly 1.
    Works on a single window or a stack of windows.
    """
    w = np.asarray(w, dtype=np.float64)
    size = w.shape[-1]
    if win is not None and size != win.size:
        raise ValueError(f"window has {size} samples, expected {win.size}")
    if amplitude_ref <= 0:
        raise ValueError("amplitude_ref must be positive")
    half = size // 2
    mags = np.abs(rfft(w)[..., :half]) / (half * amplitude_ref)
    sr = win.sample_rate if win is not None else WindowSpec().sample_rate
    return Spectrum(mags, sr / size)


@dataclass(frozen=True)
class FirKernel:
    taps: np.ndarray
    lo_hz: float | None
    hi_hz: float
    sample_rate: int

    def __len__(self):
        return len(self.taps)

    def response(self, freqs_hz) -> np.ndarray:
        """Magnitude response, evaluated directly from the taps."""
        f = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        n = np.arange(len(self.taps)) - (len(self.taps) - 1) / 2
        phase = np.exp(-2j * np.pi * np.outer(f, n) / self.sample_rate)
        return np.abs(phase @ self.taps)


def _check_taps(taps: int):
    if taps < 1 or taps % 2 == 0:
        raise ValueError(f"tap count must be a positive odd number, got {taps}")


def _lowpass_taps(cutoff_hz: float, taps: int, fs: int) -> np.ndarray:
    bw = cutoff_hz / fs
    n = np.arange(taps) - (taps - 1) // 2
    h = 2 * bw * np.sinc(2 * bw * n) * np.hamming(taps)
    return h / h.sum()


def sinc_low_pass(cutoff_hz: float, taps: int = 129, win: WindowSpec = WindowSpec()) -> FirKernel:
    """Hamming-windowed sinc low-pass normalized to unit DC gain."""
    _check_taps(taps)
    if not 0 < cutoff_hz < win.nyquist:
        raise ValueError(f"cutoff must lie in (0, {win.nyquist}) Hz, got {cutoff_hz}")
    return FirKernel(_lowpass_taps(cutoff_hz, taps, win.sample_rate), None, cutoff_hz, win.sample_rate)


def sinc_band_pass(lo_hz: float, hi_hz: float, taps: int = 129, win: WindowSpec = WindowSpec()) -> FirKernel:
    """Difference of two windowed-sinc low-passes; DC gain is exactly zero."""
    _check_taps(taps)
    if not 0 < lo_hz < hi_hz < win.nyquist:
        raise ValueError(f"need 0 < lo < hi < {win.nyquist}, got lo={lo_hz}, hi={hi_hz}")
    h = _lowpass_taps(hi_hz, taps, win.sample_rate) - _lowpass_taps(lo_hz, taps, win.sample_rate)
    return FirKernel(h, lo_hz, hi_hz, win.sample_rate)


def sinc_multi_band(bands, taps: int = 129, win: WindowSpec = WindowSpec()) -> FirKernel:
    """Sum of band-passes (``lo == 0`` gives a low-pass) for disjoint bands."""
    bands = sorted((float(lo), float(hi)) for lo, hi in bands)
    if not bands:
        raise ValueError("need at least one band")
    for (_, h0), (l1, _) in zip(bands, bands[1:]):
        if l1 < h0:
            raise ValueError("bands overlap")
    h = np.zeros(taps)
    for lo, hi in bands:
        k = sinc_low_pass(hi, taps, win) if lo == 0 else sinc_band_pass(lo, hi, taps, win)
        h += k.taps
    return FirKernel(h, bands[0][0] or None, bands[-1][1], win.sample_rate)


def identity_kernel(win: WindowSpec = WindowSpec()) -> FirKernel:
    return FirKernel(np.ones(1), None, win.nyquist, win.sample_rate)


def apply_fir(w, k: FirKernel) -> np.ndarray:
    """Zero-padded 'same' convolution; the (taps-1)/2 group delay is removed."""
    w = np.asarray(w, dtype=np.float64)
    if len(k.taps) >= w.shape[-1]:
        raise ValueError(f"kernel ({len(k.taps)} taps) must be shorter than the window ({w.shape[-1]})")
    flat = w.reshape(-1, w.shape[-1])
    out = np.stack([np.convolve(row, k.taps, mode="same") for row in flat])
    return out.reshape(w.shape)


def xcorr_profile(template, received) -> np.ndarray:
    """Circular cross-correlation ``r[k] = sum_n received[n] * template[n - k]``.

    Computed in the frequency domain; a copy of the template delayed by ``k``
    samples peaks at lag ``k``.
    """
    template = np.asarray(template, dtype=np.float64)
    received = np.asarray(received, dtype=np.float64)
    if template.shape[-1] != received.shape[-1]:
        raise ValueError(
            f"length mismatch: template {template.shape[-1]}, received {received.shape[-1]}"
        )
    R = fft(received) * np.conj(fft(template))
    return ifft(R).real


def xcorr_direct(template, received) -> np.ndarray:
    """Time-domain circular cross-correlation, O(n^2)."""
    template = np.asarray(template, dtype=np.float64)
    received = np.asarray(received, dtype=np.float64)
    n = len(template)
    return np.array([np.dot(received, np.roll(template, k)) for k in range(n)])


def am_signal(fc: float, fm: float, modulation_index: float, win: WindowSpec = WindowSpec()) -> np.ndarray:
    t = np.arange(win.size) / win.sample_rate
    return (1 + modulation_index * np.cos(2 * np.pi * fm * t)) * np.cos(2 * np.pi * fc * t)


def am_sidebands(fc: float, fm: float, modulation_index: float, win: WindowSpec = WindowSpec()) -> Spectrum:
    """Spectrum of a unit-carrier AM tone; sidebands at fc +- fm carry m_a/2."""
    if fc + fm >= win.nyquist or fc - fm <= 0:
        raise ValueError("carrier +- modulation frequency must stay inside (0, Nyquist)")
    return rfft_mag(am_signal(fc, fm, modulation_index, win), amplitude_ref=1.0, win=win)
