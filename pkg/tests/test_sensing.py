from dataclasses import replace

import numpy as np
import pytest

from cogscale.dsp import xcorr_profile
from cogscale.sensing import (
    BreathSeries, ChannelSpec, bandpass_series, breath_series, bpm_mae, detect_bpm, range_profile_map,
    simulate_channel,
)
from cogscale.signal import SensingSpec, WindowSpec, gen_windows

WIN = WindowSpec()
FPS = WIN.sample_rate / WIN.size
QUIET = ChannelSpec(noise_level=0.0)


def sine_windows(seconds):
    return gen_windows(SensingSpec(), WIN, int(seconds * FPS))


def test_no_reflector_means_direct_path_only():
    tx = sine_windows(1)
    np.testing.assert_allclose(simulate_channel(tx, replace(QUIET, reflector_gain=0.0)), tx, atol=1e-9)
    rx = simulate_channel(tx, replace(ChannelSpec(), reflector_gain=0.0), seed=3)
    noise = rx - tx
    assert np.std(noise) == pytest.approx(0.001 * 32767, rel=0.05)


def test_still_reflector_gives_flat_series():
    s = breath_series(simulate_channel(sine_windows(4), replace(QUIET, breath_amplitude=0.0)))
    # the first window sees silence before the stream starts
    assert np.ptp(s.values[1:]) < 1e-9


def test_breathing_shows_at_its_rate():
    s = breath_series(simulate_channel(sine_windows(60), replace(ChannelSpec(), breath_bpm=15)))
    v = s.values - s.values.mean()
    f = np.fft.rfftfreq(len(v), 1 / s.frame_rate)
    peak = f[np.argmax(np.abs(np.fft.rfft(v))[1:]) + 1]
    assert abs(peak - 0.25) <= f[1]


def test_series_of_silence_and_plain_sine():
    assert not breath_series(np.zeros((5, 512))).values.any()
    np.testing.assert_allclose(breath_series(sine_windows(1)).values, 1.0, atol=1e-12)


def test_delay_must_fit_a_window():
    with pytest.raises(ValueError):
        simulate_channel(sine_windows(1), replace(QUIET, base_delay=600.0))


def test_bpm_18_recovered():
    s = breath_series(simulate_channel(sine_windows(60), replace(ChannelSpec(), breath_bpm=18)))
    reports = detect_bpm(s)
    assert [t for t, _ in reports] == [10, 20, 30, 40, 50, 60]
    assert all(abs(b - 18) <= 1.0 for t, b in reports if t >= 30)
    assert bpm_mae(reports, 18) < 1.0


def test_constant_series_reports_zero():
    reports = detect_bpm(BreathSeries(np.ones(int(40 * FPS)), FPS))
    assert all(b == 0.0 for _, b in reports)


def test_count_method_is_even_quantized():
    s = breath_series(simulate_channel(sine_windows(60), replace(ChannelSpec(), breath_bpm=15)))
    assert all(b % 2 == 0 for t, b in detect_bpm(s, method="count") if t >= 30)


def test_short_series_rejected():
    with pytest.raises(ValueError):
        detect_bpm(BreathSeries(np.ones(100), FPS))


def test_bandpass_rejects_slow_drift():
    t = (np.arange(int(120 * FPS)) + 0.5) / FPS
    drift = BreathSeries(np.sin(2 * np.pi * (2 / 60) * t), FPS)
    breath = BreathSeries(np.sin(2 * np.pi * (15 / 60) * t), FPS)
    mid = slice(len(t) // 4, 3 * len(t) // 4)
    ratio = np.std(bandpass_series(drift)[mid]) / np.std(bandpass_series(breath)[mid])
    assert 20 * np.log10(ratio) <= -20


def test_static_channel_cancels_in_range_map():
    spec = SensingSpec(kind="chirp")
    tx = gen_windows(spec, WIN, 6)
    rx = simulate_channel(tx, replace(QUIET, breath_amplitude=0.0))
    m = range_profile_map(tx[0], rx[1:])
    assert np.max(np.abs(m)) < 1e-6 * np.max(np.abs(xcorr_profile(tx[0], rx[1])))


def test_moving_reflector_is_tracked():
    spec = SensingSpec(kind="chirp")
    tx = gen_windows(spec, WIN, 12)
    # steps well above the ~24-sample lag resolution of a 2 kHz sweep
    ch = replace(QUIET, breath_amplitude=0.0, base_delay=50.0, delay_step=20.0, reflector_gain=0.5)
    m = range_profile_map(tx[0], simulate_channel(tx, ch)[1:])
    peaks = np.argmax(m, axis=1)  # positive lobe: where the echo arrived
    expected = 50 + 20 * np.arange(2, 12)
    assert np.all(np.abs(peaks - expected) <= 6)
    assert np.all(np.diff(peaks) > 0)


@pytest.mark.parametrize("k", [0, 5, 100, 511])
def test_rolled_rx_rolls_each_row(k):
    tx = gen_windows(SensingSpec(kind="chirp"), WIN, 3)
    rx = simulate_channel(tx, ChannelSpec(), seed=1)
    rolled = np.roll(rx, k, axis=1)
    prof = np.abs(xcorr_profile(np.broadcast_to(tx[0], rx.shape), rx))
    prof_k = np.abs(xcorr_profile(np.broadcast_to(tx[0], rx.shape), rolled))
    np.testing.assert_allclose(prof_k, np.roll(prof, k, axis=1), atol=1e-6 * prof.max())
