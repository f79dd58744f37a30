import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogscale import autodiff as ad
from cogscale import model as M
from cogscale.loss import LossWeights, q_loss, total_loss, amplitude_floor
from cogscale.signal import PCM_MAX, SensingSpec, WindowSpec, gen_windows

from gradcases import MODEL_CASES

WIN = WindowSpec()


def test_init_is_seed_deterministic():
    a, b, c = M.init_params(seed=1), M.init_params(seed=1), M.init_params(seed=2)
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_init_bounds_follow_fan_in():
    cfg = M.ModelConfig()
    for name, v in M.init_params(cfg, 0).items():
        fan_in = int(np.prod(v.shape[1:])) if v.ndim > 1 else None
        if fan_in:
            assert np.max(np.abs(v)) <= np.sqrt(1 / fan_in)


def test_parameter_layout():
    shapes = M.param_shapes(M.ModelConfig())
    assert shapes["block0.out.w"][0] == 4  # residual + skip halves
    assert shapes["block1.out.w"][0] == 2  # last block: skip only
    assert "input.w" not in shapes
    assert "input.w" in M.param_shapes(M.ModelConfig(hidden_channels=3))
    assert "sinc.taps" in M.param_shapes(M.ModelConfig(learn_sinc=True))
    assert M.param_count(M.init_params()) < 5000


@pytest.mark.parametrize("kw", [dict(kernel_size=4), dict(dilation=0), dict(sinc_bands=((17500, 25000),)),
                                dict(sinc_taps=128), dict(gating="relu")])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        M.ModelConfig(**kw)


def test_zero_input_is_well_defined():
    p = M.init_params(seed=0)
    z = np.zeros((1, 512))
    res = M.forward(z, z, p, quantize=False)
    assert np.all(np.isfinite(res.xhat.value))
    np.testing.assert_allclose(res.xhat.value, np.tanh(res.a.value) * PCM_MAX)


def test_window_mismatch_rejected():
    with pytest.raises(ValueError):
        M.forward(np.zeros(256), np.zeros(256), M.init_params())
    with pytest.raises(ValueError):
        M.forward(np.zeros(512), np.zeros(256), M.init_params())


def test_output_is_integer_after_rounding(rng):
    x = gen_windows(SensingSpec(), WIN, 3)
    z = np.round(rng.uniform(-30000, 30000, (3, 512)))
    xhat = M.adapt(x, z, M.init_params(seed=4))
    np.testing.assert_array_equal(xhat, np.round(xhat))


@settings(max_examples=60)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 30.0), st.floats(0, 1.5))
def test_range_guarantee(seed, weight_scale, music_level):
    rng = np.random.default_rng(seed)
    p = {k: v * weight_scale for k, v in M.init_params(seed=seed).items()}
    x = rng.uniform(-1, 1, (2, 512)) * PCM_MAX
    z = np.round(np.clip(rng.standard_normal((2, 512)) * music_level * PCM_MAX, -PCM_MAX, PCM_MAX))
    xhat = M.forward(x, z, p, quantize=False).xhat.value
    assert np.max(np.abs(xhat + z)) <= PCM_MAX
    assert np.max(np.abs(M.mixed_output(x, z, p))) <= PCM_MAX


def test_shape_preserved_through_every_layer():
    for cfg in (M.ModelConfig(), M.ModelConfig(kernel_size=3, dilation=4, num_blocks=3, hidden_channels=4)):
        res = M.forward(np.zeros((2, 512)), np.zeros((2, 512)), M.init_params(cfg), cfg)
        assert res.xhat.shape == res.a.shape == (2, 512)


def test_batched_equals_single(rng):
    p = M.init_params(seed=5)
    x = gen_windows(SensingSpec(), WIN, 4)
    z = np.round(rng.uniform(-20000, 20000, (4, 512)))
    batch = M.adapt(x, z, p)
    for i in range(4):
        np.testing.assert_array_equal(M.adapt(x[i], z[i], p), batch[i])


@pytest.mark.parametrize("name", sorted(MODEL_CASES))
def test_end_to_end_gradients(name):
    rng = np.random.default_rng(11)
    assert ad.grad_check(*MODEL_CASES[name](rng)) < 1e-5


def test_checkpoint_round_trip(tmp_path):
    cfg = M.ModelConfig(hidden_channels=3, learn_sinc=True)
    p = M.init_params(cfg, 9)
    M.save_params(tmp_path / "c.json", p, cfg, {"note": 1})
    q, cfg2, meta = M.load_params(tmp_path / "c.json")
    assert cfg2 == cfg and meta == {"note": 1}
    assert all(np.array_equal(p[k], q[k]) for k in p)
    assert not list(tmp_path.glob("*.tmp"))


def test_checkpoint_rejects_foreign_files(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps({"format": "other"}))
    with pytest.raises(ValueError):
        M.load_params(tmp_path / "x.json")
    M.save_params(tmp_path / "c.json", M.init_params(), M.ModelConfig())
    doc = json.loads((tmp_path / "c.json").read_text())
    doc["params"]["merge.w"]["shape"] = [1, 1, 2, 1]
    doc["params"]["merge.w"]["data"] = [0.0, 0.0]
    (tmp_path / "c.json").write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        M.load_params(tmp_path / "c.json")


def test_direct_optimize_reaches_sine_target():
    x = gen_windows(SensingSpec(), WIN, 1)[0]
    xhat = M.direct_window_optimize(x, np.zeros(512), SensingSpec(), steps=500)
    assert total_loss(x, xhat, np.zeros(512), SensingSpec()).target < 0.05


def test_direct_optimize_amplitude_only_goes_to_floor():
    x = gen_windows(SensingSpec(), WIN, 1)[0]
    xhat = M.direct_window_optimize(x, np.zeros(512), SensingSpec(), LossWeights(0, 1, 0), steps=500)
    assert q_loss(xhat) - amplitude_floor(512) < 0.005


def test_direct_optimize_zero_steps_returns_init():
    x = gen_windows(SensingSpec(), WIN, 1)[0]
    z = np.round(np.linspace(-1000, 1000, 512))
    np.testing.assert_allclose(M.direct_window_optimize(x, z, SensingSpec(), steps=0),
                               np.tanh(0.1 * x / PCM_MAX) * PCM_MAX - z)
