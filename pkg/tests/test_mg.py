"""Mackey-Glass generation, scaling, windowing, and Lyapunov estimation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecast.errors import ConfigError, NumericError
from spikecast.mg import (
    MGConfig,
    TimeSeries,
    estimate_lyapunov,
    fit_scaler,
    generate_mg,
    window,
)


def std_config(**overrides):
    kwargs = dict(gamma=0.1, beta=0.2, n=10.0, tau_delay=17.0, dt=0.2,
                  transient_steps=5000, total_steps=2000, initial_history=1.2)
    kwargs.update(overrides)
    return MGConfig(**kwargs)


class TestGenerate:
    def test_constant_one_is_fixed_point(self):
        # beta/gamma = 2 makes x = 1 an equilibrium: 0.2*1/(1+1) = 0.1*1
        series = generate_mg(std_config(initial_history=1.0, total_steps=5000))
        assert np.all(series.values == 1.0)

    def test_fixed_point_survives_any_horizon(self):
        series = generate_mg(std_config(initial_history=1.0, total_steps=300,
                                        transient_steps=90000))
        assert np.all(series.values == 1.0)

    def test_chaotic_series_bounds(self):
        # long-run oracle (1e6 steps) observed min 0.4072, max 1.3250
        series = generate_mg(std_config(total_steps=200_000))
        assert np.all(series.values > 0.0)
        assert np.all(series.values < 1.5)

    def test_delay_below_dt_rejected(self):
        with pytest.raises(ConfigError):
            generate_mg(std_config(tau_delay=0.05, dt=0.2, transient_steps=5000))

    def test_transient_shorter_than_delay_rejected(self):
        with pytest.raises(ConfigError):
            generate_mg(std_config(transient_steps=10))

    def test_divergence_reports_step_index(self):
        # gamma*dt > 2 makes the Euler update an unstable oscillation
        cfg = std_config(gamma=20.0, transient_steps=100, total_steps=5000)
        with pytest.raises(NumericError, match="step"):
            generate_mg(cfg)

    def test_sequence_history_accepted(self):
        d = std_config().delay_steps
        hist = np.full(d, 1.2)
        a = generate_mg(std_config(initial_history=hist, total_steps=100))
        b = generate_mg(std_config(initial_history=1.2, total_steps=100))
        np.testing.assert_array_equal(a.values, b.values)

    def test_wrong_history_length_rejected(self):
        with pytest.raises(ConfigError):
            generate_mg(std_config(initial_history=[1.2, 1.2]))

    def test_determinism(self):
        a = generate_mg(std_config(total_steps=500))
        b = generate_mg(std_config(total_steps=500))
        np.testing.assert_array_equal(a.values, b.values)


class TestScaler:
    def test_endpoints_and_midpoint(self):
        series = TimeSeries(values=np.array([0.4, 0.9, 1.4]), dt=0.2)
        sc = fit_scaler(series, -0.5, 0.5)
        assert sc.apply(0.4) == -0.5
        assert sc.apply(1.4) == 0.5
        assert sc.apply(0.9) == pytest.approx(0.0, abs=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        series = TimeSeries(values=rng.uniform(0.3, 1.5, 100), dt=0.2)
        sc = fit_scaler(series)
        x = rng.uniform(0.3, 1.5, 50)
        np.testing.assert_allclose(sc.invert(sc.apply(x)), x, rtol=0, atol=1e-12)

    def test_constant_series_rejected(self):
        series = TimeSeries(values=np.ones(10), dt=1.0)
        with pytest.raises(ConfigError):
            fit_scaler(series)

    def test_scaled_extrema_hit_bounds_exactly(self):
        series = generate_mg(std_config(total_steps=2000))
        sc = fit_scaler(series, -0.5, 0.5)
        scaled = sc.apply(series.values)
        assert scaled.min() == -0.5
        assert scaled.max() == 0.5


class TestWindow:
    def test_small_series_example(self):
        series = TimeSeries(values=np.arange(6, dtype=float), dt=1.0)
        ds = window(series, t_x=3, horizon=2, n_samples=2, stride=1)
        np.testing.assert_array_equal(ds.inputs, [[0, 1, 2], [1, 2, 3]])
        np.testing.assert_array_equal(ds.targets, [[2, 3, 4], [3, 4, 5]])

    def test_zero_horizon_rejected(self):
        series = TimeSeries(values=np.arange(10, dtype=float), dt=1.0)
        with pytest.raises(ConfigError):
            window(series, t_x=3, horizon=0, n_samples=1, stride=1)

    def test_capacity_error_names_required_length(self):
        series = TimeSeries(values=np.arange(10, dtype=float), dt=1.0)
        with pytest.raises(ConfigError, match="11"):
            window(series, t_x=4, horizon=3, n_samples=3, stride=2)

    @given(st.integers(1, 5), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3))
    @settings(max_examples=50, deadline=None)
    def test_alignment_property(self, t_x, horizon, n_samples, stride):
        length = (n_samples - 1) * stride + t_x + horizon
        series = TimeSeries(values=np.arange(length, dtype=float) ** 2, dt=1.0)
        ds = window(series, t_x=t_x, horizon=horizon, n_samples=n_samples, stride=stride)
        for k in range(n_samples):
            for t in range(t_x):
                src = k * stride + t
                assert ds.inputs[k, t] == series.values[src]
                assert ds.targets[k, t] == series.values[src + horizon]


class TestLyapunov:
    def test_sine_wave_non_positive(self):
        # incommensurate angular step: phases are dense, no exact revisits
        phase = 0.173205080757 * np.arange(25000)
        series = TimeSeries(values=np.sin(phase), dt=0.2)
        lam = estimate_lyapunov(series)
        assert lam <= 1e-4

    def test_periodic_mg_non_positive(self):
        # tau=5 sits in the periodic regime: the long-run trajectory repeats
        # with period ~87 steps to 3.5e-4 (integration oracle)
        series = generate_mg(std_config(tau_delay=5.0, total_steps=25000,
                                        transient_steps=50000))
        lam = estimate_lyapunov(series)
        assert lam <= 1e-4

    def test_constant_series_degenerate(self):
        series = TimeSeries(values=np.ones(30000), dt=0.2)
        with pytest.raises(ConfigError, match="degenerate"):
            estimate_lyapunov(series)

    def test_too_short_series(self):
        series = TimeSeries(values=np.sin(np.arange(500) * 0.3), dt=0.2)
        with pytest.raises(ConfigError, match="few"):
            estimate_lyapunov(series)

    def test_bad_embedding_params(self):
        series = TimeSeries(values=np.sin(np.arange(5000) * 0.3), dt=0.2)
        with pytest.raises(ConfigError):
            estimate_lyapunov(series, embed_dim=1)
