import numpy as np
import pytest

from cogscale import model as M
from cogscale.scenarios import distortion_pairs, run_respiration, transmit
from cogscale.sensing import bandpass_series
from cogscale.signal import SensingSpec, WindowSpec, gen_windows

from conftest import music_windows


def test_transmit_requires_params_for_cognitive():
    x = gen_windows(SensingSpec(), WindowSpec(), 2)
    with pytest.raises(ValueError):
        run_respiration(15, None, scenarios=("cognitive",), duration=30)
    out = transmit("no_music", x, np.zeros_like(x))
    np.testing.assert_array_equal(out, np.round(x))


def test_respiration_is_deterministic():
    a = run_respiration(15, M.init_params(), scenarios=("no_music", "clip"), duration=30, seed=2)
    b = run_respiration(15, M.init_params(), scenarios=("no_music", "clip"), duration=30, seed=2)
    assert [(r.scenario, r.mae) for r in a] == [(r.scenario, r.mae) for r in b]


@pytest.mark.slow
def test_clipping_adds_series_noise(trained_sine):
    res = {r.scenario: r for r in run_respiration(15, trained_sine.params, scenarios=("cognitive", "clip"),
                                                   duration=40)}

    def residue(r):
        v = r.series.values
        return np.std(v - bandpass_series(r.series) - np.mean(v))
    assert residue(res["clip"]) > residue(res["cognitive"])


@pytest.mark.slow
def test_distortion_pairs_shape(trained_sine):
    d = distortion_pairs(trained_sine.params, M.ModelConfig(), music_windows(duration=0.5, seed=9))
    assert d.shape[1] == 2 and np.all(d >= 0)
