"""Network assembly: init schemes, low-pass cascade, forward pass, tape."""

import math

import numpy as np
import pytest

from spikecast.errors import ConfigError
from spikecast.network import (
    FilterState,
    NetworkConfig,
    NetworkParams,
    _replay_readout_filter,
    filter_gain,
    filter_pole,
    forward,
    init_params,
    lowpass_step,
)
from spikecast.neurons import ConductanceElement, LIFParams, MTCParams


def lif_net(n=8, **kw):
    pop = LIFParams.create(tau_m=np.full(n, 5.0), u_th=1.0, u_rest=0.0)
    return NetworkConfig(hidden_size=n, model_kind="lif", population=pop, **kw)


def mtc_net(n=8, elements=(), u_th=0.5, u_sat=1.5, **kw):
    pop = MTCParams.create(tau_m=5.0, tau_s=50.0, tau_us=2000.0,
                           elements=list(elements), u_th=u_th, u_sat=u_sat, n=n)
    return NetworkConfig(hidden_size=n, model_kind="mtc", population=pop, **kw)


class TestInit:
    def test_lecun_normal_std(self):
        cfg = lif_net(n=1000)
        params = init_params(cfg, scheme="he_lecun", rng_seed=0)
        std = params.w_out.std()
        assert 0.8 * math.sqrt(1 / 1000) < std < 1.2 * math.sqrt(1 / 1000)

    def test_he_uniform_bound(self):
        cfg = lif_net(n=1000)
        params = init_params(cfg, scheme="he_lecun", rng_seed=0)
        assert np.all(np.abs(params.w_in) <= math.sqrt(6.0))

    def test_scaled_uniform_bounds(self):
        cfg = lif_net(n=400)
        params = init_params(cfg, scheme="scaled_uniform", gain=2.0, rng_seed=1)
        assert np.all(np.abs(params.w_in) <= 2.0)
        assert np.all(np.abs(params.w_out) <= 2.0 * math.sqrt(1 / 400))

    def test_same_seed_identical(self):
        cfg = lif_net(n=64)
        a = init_params(cfg, rng_seed=7)
        b = init_params(cfg, rng_seed=7)
        np.testing.assert_array_equal(a.w_in, b.w_in)
        np.testing.assert_array_equal(a.w_out, b.w_out)

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError):
            init_params(lif_net(), scheme="xavier")


class TestLowpass:
    def test_dc_gain_unity(self):
        state = FilterState.zeros(4)
        y = 0.0
        for _ in range(20000):
            state, y = lowpass_step(state, 3.25, 0.02)
        assert y == pytest.approx(3.25, abs=1e-9)

    def test_impulse_response_sums_to_one(self):
        cutoff = 0.02
        a = filter_pole(cutoff)
        horizon = int(10.0 / (1.0 - a))
        state = FilterState.zeros(4)
        total = 0.0
        state, y = lowpass_step(state, 1.0, cutoff)
        total += y
        for _ in range(horizon):
            state, y = lowpass_step(state, 0.0, cutoff)
            total += y
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_tone_attenuation_matches_closed_form(self):
        cutoff = 0.02
        freq = 8 * cutoff
        expected = filter_gain(cutoff, freq, order=4)
        steps = int(40 / freq)
        state = FilterState.zeros(4)
        ys = []
        for t in range(steps):
            state, y = lowpass_step(state, math.sin(2 * math.pi * freq * t), cutoff)
            ys.append(y)
        # steady-state amplitude over the last few whole periods
        tail = np.array(ys[-int(5 / freq):])
        measured = (tail.max() - tail.min()) / 2.0
        assert measured < 0.05
        assert measured <= expected * 1.01

    def test_invalid_cutoff(self):
        with pytest.raises(ConfigError):
            lowpass_step(FilterState.zeros(4), 0.0, 0.7)


class TestForward:
    def test_quiescent_network_outputs_zero(self):
        cfg = lif_net(n=8)
        params = NetworkParams(w_in=np.zeros(8), w_out=np.ones(8))
        pred, hidden, _ = forward(cfg, params, np.zeros(50))
        assert np.all(pred == 0.0)
        assert np.all(hidden == 0.0)

    def test_decoupled_input(self):
        cfg = lif_net(n=1)
        params = NetworkParams(w_in=np.zeros(1), w_out=np.array([2.5]))
        rng = np.random.default_rng(0)
        pred, _, _ = forward(cfg, params, rng.uniform(-1, 1, 80))
        assert np.all(pred == 0.0)

    def test_readout_linearity(self):
        els = [ConductanceElement.create("fast", -1, 2.0, 0.6),
               ConductanceElement.create("slow", +1, 10.0, -0.4)]
        cfg = mtc_net(n=8, elements=els)
        params = init_params(cfg, rng_seed=2)
        x = np.random.default_rng(3).uniform(-0.5, 0.5, 100)
        pred1, _, _ = forward(cfg, params, x)
        doubled = NetworkParams(w_in=params.w_in, w_out=2.0 * params.w_out)
        pred2, _, _ = forward(cfg, doubled, x)
        np.testing.assert_allclose(pred2, 2.0 * pred1, rtol=0, atol=1e-14)

    def test_state_isolation_between_calls(self):
        cfg = lif_net(n=16)
        params = init_params(cfg, rng_seed=5)
        x = np.random.default_rng(1).uniform(-0.5, 0.5, 120)
        p1, h1, _ = forward(cfg, params, x)
        p2, h2, _ = forward(cfg, params, x)
        np.testing.assert_array_equal(p1, p2)
        np.testing.assert_array_equal(h1, h2)

    def test_tape_replay_reproduces_prediction_bitwise(self):
        els = [ConductanceElement.create("fast", -1, 2.0, 0.6),
               ConductanceElement.create("slow", +1, 10.0, -0.4)]
        cfg = mtc_net(n=8, elements=els)
        params = init_params(cfg, rng_seed=2)
        params.w_in *= 2
        x = np.random.default_rng(3).uniform(-0.5, 0.5, 100)
        pred, _, tape = forward(cfg, params, x, record_tape=True)
        replayed = _replay_readout_filter(tape, params.w_out)
        np.testing.assert_array_equal(replayed[:, 0], pred)

    def test_binary_emissions_for_spiking_models(self):
        cfg = lif_net(n=16)
        params = init_params(cfg, rng_seed=5)
        x = np.random.default_rng(1).uniform(-0.5, 0.5, 200)
        _, hidden, _ = forward(cfg, params, x)
        assert set(np.unique(hidden)) <= {0.0, 1.0}

    def test_mtc_emissions_in_unit_interval_with_exact_zeros(self):
        els = [ConductanceElement.create("fast", -1, 2.0, 0.6),
               ConductanceElement.create("slow", +1, 10.0, -0.4)]
        cfg = mtc_net(n=8, elements=els)
        params = init_params(cfg, rng_seed=2)
        params.w_in *= 2
        x = np.random.default_rng(4).uniform(-0.5, 0.5, 300)
        _, hidden, _ = forward(cfg, params, x)
        assert np.all(hidden >= 0.0) and np.all(hidden <= 1.0)
        assert np.any(hidden == 0.0)

    def test_batch_matches_single(self):
        cfg = lif_net(n=8)
        params = init_params(cfg, rng_seed=9)
        rng = np.random.default_rng(2)
        xs = rng.uniform(-0.5, 0.5, (3, 60))
        batch_pred, batch_hidden, _ = forward(cfg, params, xs)
        for b in range(3):
            pred, hidden, _ = forward(cfg, params, xs[b])
            np.testing.assert_array_equal(batch_pred[b], pred)
            np.testing.assert_array_equal(batch_hidden[b], hidden)

    def test_config_population_mismatch(self):
        pop = LIFParams.create(tau_m=np.full(4, 5.0))
        with pytest.raises(ConfigError):
            NetworkConfig(hidden_size=8, model_kind="lif", population=pop).validate()
