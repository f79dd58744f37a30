import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cogscale.dsp import (
    am_sidebands, apply_fir, fft, identity_kernel, ifft, rfft, rfft_mag, sinc_band_pass, sinc_low_pass,
    xcorr_direct, xcorr_profile,
)
from cogscale.signal import PCM_MAX, SensingSpec, WindowSpec, gen_chirp, gen_sine

WIN = WindowSpec()
finite = st.floats(-1e4, 1e4, allow_nan=False)


@pytest.mark.parametrize("n", [1, 2, 8, 64, 512, 1024])
def test_fft_matches_numpy_oracle(n, rng):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    np.testing.assert_allclose(fft(x), np.fft.fft(x), atol=1e-9 * n)
    np.testing.assert_allclose(ifft(fft(x)), x, atol=1e-12)


def test_rfft_matches_numpy_oracle(rng):
    x = rng.standard_normal((3, 512))
    np.testing.assert_allclose(rfft(x), np.fft.rfft(x), atol=1e-10)


def test_non_power_of_two_rejected():
    with pytest.raises(ValueError):
        fft(np.ones(12))


@given(arrays(np.float64, 256, elements=finite))
def test_parseval(x):
    X = fft(x.astype(complex))
    lhs, rhs = np.sum(np.abs(X) ** 2), len(x) * np.sum(x**2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6)


def test_rfft_mag_of_bin_centred_sine():
    mags = rfft_mag(gen_sine(SensingSpec(), WIN)).mags
    assert len(mags) == 256
    assert mags[192] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.delete(mags, 192)) < 1e-9


def test_rfft_mag_of_zeros():
    assert not rfft_mag(np.zeros(512)).mags.any()


def test_low_pass_response():
    k = sinc_low_pass(19000, 129, WIN)
    assert k.response([0.0])[0] == pytest.approx(1.0, abs=1e-12)
    assert k.response([10000.0])[0] >= 0.99
    assert k.response([23000.0])[0] <= 0.01
    assert np.argmax(k.taps) == len(k.taps) // 2


def test_band_pass_response_and_symmetry():
    k = sinc_band_pass(17500, 20500, 129, WIN)
    assert k.response([18000.0])[0] >= 0.95
    assert k.response([5000.0])[0] <= 0.05
    np.testing.assert_allclose(k.taps, k.taps[::-1], atol=1e-15)


def test_band_pass_low_edge_limit():
    # a DC-normalized low-pass with a vanishing cutoff is the normalized Hamming window
    near_zero = sinc_low_pass(1e-6, 129, WIN).taps
    np.testing.assert_allclose(near_zero, np.hamming(129) / np.hamming(129).sum(), atol=1e-12)
    a = sinc_band_pass(1e-6, 19000, 129, WIN).taps
    np.testing.assert_allclose(a, sinc_low_pass(19000, 129, WIN).taps - near_zero, atol=1e-15)


@pytest.mark.parametrize("taps", [0, 4, 128])
def test_even_or_empty_taps_rejected(taps):
    with pytest.raises(ValueError):
        sinc_low_pass(19000, taps, WIN)


def test_apply_fir_examples():
    x = gen_sine(SensingSpec(), WIN)
    np.testing.assert_array_equal(apply_fir(x, identity_kernel(WIN)), x)
    bp = sinc_band_pass(17500, 20500, 129, WIN)
    # interior samples of a DC input, away from the zero-padded edges
    assert np.max(np.abs(apply_fir(np.full(512, 1000.0), bp)[64:-64])) < 1.0
    y = apply_fir(x, bp)
    assert np.sqrt(np.mean(y**2)) >= 0.9 * np.sqrt(np.mean(x**2))


def test_xcorr_fast_matches_direct(rng):
    t, r = rng.standard_normal(64), rng.standard_normal(64)
    np.testing.assert_allclose(xcorr_profile(t, r), xcorr_direct(t, r), atol=1e-10)


def test_xcorr_zero_and_autocorr():
    c = gen_chirp(SensingSpec(kind="chirp"), WIN)
    assert not xcorr_profile(c, np.zeros(512)).any()
    assert np.argmax(xcorr_profile(c, c)) == 0


@given(st.integers(0, 511))
def test_xcorr_peak_tracks_roll(k):
    c = gen_chirp(SensingSpec(kind="chirp"), WIN)
    assert np.argmax(xcorr_profile(c, np.roll(c, k))) == k


@given(st.integers(0, 511))
def test_xcorr_shift_covariance(k):
    rng = np.random.default_rng(k)
    t, r = rng.standard_normal(512), rng.standard_normal(512)
    np.testing.assert_allclose(xcorr_profile(t, np.roll(r, k)), np.roll(xcorr_profile(t, r), k), atol=1e-9)


def test_am_sidebands():
    mags = am_sidebands(18750, 937.5, 1.0, WIN).mags
    assert mags[190] / mags[200] == pytest.approx(0.5, abs=1e-9)
    assert mags[210] / mags[200] == pytest.approx(0.5, abs=1e-9)
    carrier_only = am_sidebands(18750, 937.5, 0.0, WIN).mags
    assert np.count_nonzero(carrier_only > 1e-9) == 1
    half = am_sidebands(18750, 937.5, 0.5, WIN).mags
    assert half[210] == pytest.approx(0.5 * mags[210], rel=1e-9)
