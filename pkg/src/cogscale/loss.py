"""Training objectives for an adapted sensing window.

Four sub-losses, all on magnitudes normalized so that a full-scale
bin-centered sine has unit magnitude at its bin:

* target    ``1 - ||c_hat[bins]||_2``                 (sensing power in the target bins)
* recovery  ``sum_{i not in bins} |c_i - c_hat_i| / (N-1)`` (leakage outside the bins)
* amplitude ``1 - ||(x_hat + z) / m||_2 / size``      (how close the mix is to full scale)
* variance  sample std of ``c_hat[bins]``            (chirp only: flat sweep)

Each sub-loss has a graph form (Tensor in/out, used for training) and a
plain numpy form.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Literal

import numpy as np

from . import autodiff as ad
from .dsp import Spectrum, rfft_mag
from .signal import PCM_MAX, SensingSpec, WindowSpec

RecoveryMode = Literal["sum_abs", "l2"]


@dataclass(frozen=True)
class TargetBins:
    bins: np.ndarray
    half: int  # N, length of the one-sided spectrum

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=np.int64)
        if b.size == 0:
            raise ValueError("target bins must be non-empty")
        if b.min() < 0 or b.max() >= self.half:
            raise ValueError(f"target bins must lie in [0, {self.half})")
        object.__setattr__(self, "bins", np.unique(b))

    @property
    def count(self) -> int:
        return len(self.bins)

    @property
    def complement(self) -> np.ndarray:
        mask = np.ones(self.half, dtype=bool)
        mask[self.bins] = False
        return np.flatnonzero(mask)


def target_bins_for(spec: SensingSpec, win: WindowSpec = WindowSpec()) -> TargetBins:
    spec.check_nyquist(win)
    if spec.kind == "sine":
        exact = spec.f / win.bin_hz
        b = int(round(exact))
        if abs(exact - b) > 1e-9:
            lo, hi = np.floor(exact) * win.bin_hz, np.ceil(exact) * win.bin_hz
            raise ValueError(
                f"{spec.f} Hz is not bin-centered for {win.size}@{win.sample_rate}; "
                f"pick a multiple of {win.bin_hz} Hz such as {lo:g} or {hi:g}"
            )
        return TargetBins(np.array([b]), win.half)
    k = np.arange(win.half)
    centers = k * win.bin_hz
    return TargetBins(k[(centers >= spec.f0) & (centers <= spec.f1)], win.half)


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    # multiplies the recovery term inside alpha * p; 1.0 reproduces the plain sum
    recovery: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"loss weight {f.name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossBreakdown:
    target: float
    recovery: float
    amplitude: float
    variance: float
    total: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))

    def as_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def mean(items) -> "LossBreakdown":
        items = list(items)
        return LossBreakdown(**{
            f.name: float(np.mean([getattr(i, f.name) for i in items])) for f in fields(LossBreakdown)
        })


def amplitude_floor(size: int = 512) -> float:
    """Smallest amplitude loss reachable: every mixed sample at +-m."""
    return 1 - 1 / np.sqrt(size)


# -- graph forms -----------------------------------------------------------


def spectrum_graph(w, amplitude_ref: float = PCM_MAX) -> ad.Tensor:
    """Normalized one-sided magnitudes through a dense DFT."""
    re, im = ad.dft(w)
    half = ad.as_tensor(w).shape[-1] // 2
    return ad.scale(ad.magnitude(re, im), 1.0 / (half * amplitude_ref))


def target_recovery_graph(c, chat, bins: TargetBins, mode: RecoveryMode = "sum_abs"):
    c, chat = ad.as_tensor(c), ad.as_tensor(chat)
    if c.shape != chat.shape:
        raise ValueError(f"spectrum length mismatch: {c.shape} vs {chat.shape}")
    target = 1.0 - ad.l2norm(ad.take(chat, bins.bins))
    off = bins.complement
    diff = ad.take(c, off) - ad.take(chat, off)
    if mode == "sum_abs":
        agg = ad.total(ad.absolute(diff), axis=-1)
    elif mode == "l2":
        agg = ad.l2norm(diff)
    else:
        raise ValueError(f"unknown recovery mode {mode!r}")
    return target, ad.scale(agg, 1.0 / (bins.half - 1))


def amplitude_graph(mixed, m: float = PCM_MAX) -> ad.Tensor:
    mixed = ad.as_tensor(mixed)
    return 1.0 - ad.scale(ad.l2norm(mixed), 1.0 / (m * mixed.shape[-1]))


def variance_graph(chat, bins: TargetBins) -> ad.Tensor:
    if bins.count < 2:
        raise ValueError("variance loss needs at least two target bins (use gamma = 0 for a sine)")
    return ad.std(ad.take(chat, bins.bins), ddof=1)


def loss_graph(x, xhat, z, bins: TargetBins, kind: str, weights: LossWeights,
               mode: RecoveryMode = "sum_abs", m: float = PCM_MAX) -> dict[str, ad.Tensor]:
    """Per-window sub-losses and total; inputs are (..., size) PCM-scale signals."""
    xhat = ad.as_tensor(xhat)
    mixed = xhat + ad.as_tensor(z)
    if np.max(np.abs(mixed.value), initial=0.0) > m:
        raise ValueError("mixed window exceeds [-m, m]")
    c = spectrum_graph(ad.as_tensor(x), m)
    chat = spectrum_graph(xhat, m)
    target, recovery = target_recovery_graph(c, chat, bins, mode)
    amplitude = amplitude_graph(mixed, m)
    out = {"target": target, "recovery": recovery, "amplitude": amplitude}
    total = ad.scale(target + ad.scale(recovery, weights.recovery), weights.alpha) \
        + ad.scale(amplitude, weights.beta)
    if kind == "chirp":
        out["variance"] = variance_graph(chat, bins)
        total = total + ad.scale(out["variance"], weights.gamma)
    out["total"] = total
    return out


def breakdown_from_graph(parts: dict[str, ad.Tensor]) -> LossBreakdown:
    """Average each sub-loss over the batch."""
    get = lambda k: float(np.mean(parts[k].value)) if k in parts else 0.0
    return LossBreakdown(get("target"), get("recovery"), get("amplitude"), get("variance"), get("total"))


# -- numpy forms -----------------------------------------------------------


def _mags(s) -> np.ndarray:
    return s.mags if isinstance(s, Spectrum) else np.asarray(s, dtype=np.float64)


def p_loss(x: Spectrum, xhat: Spectrum, bins: TargetBins, mode: RecoveryMode = "sum_abs"):
    """(target, recovery) for normalized spectra."""
    c, chat = _mags(x), _mags(xhat)
    if c.shape != chat.shape:
        raise ValueError(f"spectrum length mismatch: {c.shape} vs {chat.shape}")
    t, r = target_recovery_graph(c, chat, bins, mode)
    return _scalar(t.value), _scalar(r.value)


def q_loss(mixed, m: float = PCM_MAX) -> float:
    mixed = np.asarray(mixed, dtype=np.float64)
    if np.max(np.abs(mixed)) > m:
        raise ValueError("mixed window exceeds [-m, m]; the link function should prevent this")
    return _scalar(amplitude_graph(mixed, m).value)


def s_loss(xhat: Spectrum, bins: TargetBins) -> float:
    return _scalar(variance_graph(_mags(xhat), bins).value)


def total_loss(x, xhat, z, spec: SensingSpec, weights: LossWeights = LossWeights(),
               win: WindowSpec = WindowSpec(), mode: RecoveryMode = "sum_abs") -> LossBreakdown:
    """Loss breakdown for one window (or the mean over a stack of windows)."""
    x, xhat, z = (np.asarray(v, dtype=np.float64) for v in (x, xhat, z))
    if not x.shape == xhat.shape == z.shape or x.shape[-1] != win.size:
        raise ValueError("x, xhat and z must share the window shape")
    bins = target_bins_for(spec, win)
    c = rfft_mag(x, win=win).mags
    chat = rfft_mag(xhat, win=win).mags
    target, recovery = (np.asarray(v) for v in p_loss(c, chat, bins, mode))
    amplitude = 1 - np.linalg.norm((xhat + z) / PCM_MAX, axis=-1) / win.size
    if np.max(np.abs(xhat + z)) > PCM_MAX:
        raise ValueError("mixed window exceeds [-m, m]")
    variance = np.std(chat[..., bins.bins], axis=-1, ddof=1) if spec.kind == "chirp" else np.zeros_like(amplitude)
    gamma = weights.gamma if spec.kind == "chirp" else 0.0
    tot = weights.alpha * (target + weights.recovery * recovery) + weights.beta * amplitude + gamma * variance
    return LossBreakdown(*(float(np.mean(v)) for v in (target, recovery, amplitude, variance, tot)))


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v
