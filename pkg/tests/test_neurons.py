"""Neuron step functions, transduction, and static I-V curves."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikecast.errors import ConfigError
from spikecast.neurons import (
    AdLIFParams,
    AdLIFState,
    ConductanceElement,
    LIFParams,
    LIFState,
    MTCParams,
    MTCState,
    adlif_step,
    iv_curves,
    lif_step,
    mtc_step,
    transduce,
)


class TestLIF:
    def test_equilibrium_at_rest(self):
        p = LIFParams.create(tau_m=5.0, u_th=1.0, u_rest=0.0)
        state = LIFState.rest(p)
        new, spikes = lif_step(p, state, 0.0)
        assert new.u_m[0] == 0.0
        assert spikes[0] == 0.0

    def test_threshold_arithmetic_with_unit_decay(self):
        # tau_m -> inf gives decay factor exactly 1
        p = LIFParams.create(tau_m=np.inf, u_th=1.0, u_rest=0.0,
                             reset_mode="subtract")
        new, spikes = lif_step(p, LIFState(u_m=np.array([0.6])), 0.5)
        assert spikes[0] == 1.0
        assert new.u_m[0] == pytest.approx(0.1, abs=1e-15)

    def test_to_rest_reset(self):
        p = LIFParams.create(tau_m=np.inf, u_th=1.0, u_rest=0.2,
                             reset_mode="to_rest")
        new, spikes = lif_step(p, LIFState(u_m=np.array([0.9])), 0.5)
        assert spikes[0] == 1.0
        assert new.u_m[0] == 0.2

    def test_constant_drive_isi_matches_closed_form(self):
        # from rest with constant input c, membrane after k steps is
        # u_k = c * (1 - a^k) / (1 - a); with to-rest reset every cycle
        # restarts identically, so the ISI equals the smallest k reaching
        # threshold
        tau_m, c, u_th = 10.0, 0.2, 1.0
        a = math.exp(-1.0 / tau_m)
        p = LIFParams.create(tau_m=tau_m, u_th=u_th, u_rest=0.0,
                             reset_mode="to_rest")
        state = LIFState.rest(p)
        spike_steps = []
        for t in range(200):
            state, spikes = lif_step(p, state, c)
            if spikes[0]:
                spike_steps.append(t)
        k_isi = math.ceil(math.log(1 - u_th * (1 - a) / c) / math.log(a))
        assert spike_steps[0] == k_isi - 1  # k steps counting from step 0
        isis = set(np.diff(spike_steps))
        assert isis == {k_isi}

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            LIFParams.create(tau_m=-1.0)
        with pytest.raises(ConfigError):
            LIFParams.create(tau_m=5.0, u_th=0.0, u_rest=0.0)


class TestAdLIF:
    def test_reduces_to_lif_bitwise(self):
        rng = np.random.default_rng(3)
        n = 16
        tau_m = rng.uniform(2.0, 20.0, n)
        ad = AdLIFParams.create(tau_m=tau_m, tau_w=100.0, a=0.0, b=0.0,
                                u_th=1.0, u_rest=0.0)
        lif = LIFParams.create(tau_m=tau_m, u_th=1.0, u_rest=0.0,
                               reset_mode="to_rest")
        s_ad = AdLIFState.rest(ad)
        s_lif = LIFState.rest(lif)
        for t in range(300):
            drive = rng.uniform(-0.5, 1.5, n)
            s_ad, sp_ad = adlif_step(ad, s_ad, drive)
            s_lif, sp_lif = lif_step(lif, s_lif, drive)
            assert np.array_equal(s_ad.u_m, s_lif.u_m)
            assert np.array_equal(sp_ad, sp_lif)
            assert np.all(s_ad.w == 0.0)

    def test_adaptation_hyperpolarizes(self):
        tau_m = 5.0
        a_m = math.exp(-1.0 / tau_m)
        p = AdLIFParams.create(tau_m=tau_m, tau_w=50.0, a=1.0, b=0.5,
                               u_th=10.0, u_rest=0.0)
        w0 = 2.0
        state = AdLIFState(u_m=np.array([0.0]), w=np.array([w0]))
        new, _ = adlif_step(p, state, 0.0)
        assert new.u_m[0] == pytest.approx(-(1 - a_m) * w0, rel=1e-12)

    def test_spike_frequency_adaptation(self):
        p = AdLIFParams.create(tau_m=5.0, tau_w=80.0, a=0.5, b=1.0,
                               u_th=1.0, u_rest=0.0)
        state = AdLIFState.rest(p)
        spike_steps = []
        t = 0
        while len(spike_steps) < 20 and t < 20000:
            state, spikes = adlif_step(p, state, 0.5)
            if spikes[0]:
                spike_steps.append(t)
            t += 1
        isis = np.diff(spike_steps[:6])
        assert np.all(np.diff(isis) >= 0)
        assert isis[-1] > isis[0]


class TestMTC:
    def _rc_params(self, **kw):
        return MTCParams.create(tau_m=kw.get("tau_m", 5.0), tau_s=50.0,
                                tau_us=2000.0, elements=kw.get("elements", ()),
                                u_rest=kw.get("u_rest", 0.0))

    def test_zero_gains_match_rc_closed_form(self):
        tau_m = 5.0
        p = self._rc_params(tau_m=tau_m)
        state = MTCState.rest(p)
        c = 0.7
        u = 0.0
        for _ in range(200):
            state, u_m = mtc_step(p, state, c)
            u = u + (1.0 / tau_m) * (-u + c)
            assert abs(u_m[0] - u) < 1e-12

    def test_element_at_offset_contributes_nothing(self):
        el = ConductanceElement.create("fast", -1, 5.0, 0.0)
        p = self._rc_params(elements=[el])
        state = MTCState.rest(p)  # u_m = 0 = delta -> tanh(0) = 0
        new, u_m = mtc_step(p, state, 0.0)
        assert u_m[0] == 0.0

    def test_stability_guard(self):
        p = self._rc_params()
        p.tau_m = np.array([0.5])
        state = MTCState.rest(p)
        with pytest.raises(ConfigError, match="stability"):
            mtc_step(p, state, 0.0, dt=1.0)

    def test_element_current_bounded_by_gain(self):
        rng = np.random.default_rng(1)
        el = ConductanceElement.create("slow", +1, 3.0, 0.5)
        p = self._rc_params(elements=[el])
        state = MTCState(u_m=rng.normal(0, 2, 1), u_s=rng.normal(0, 2, 1),
                         u_us=rng.normal(0, 2, 1))
        # bound check via the step: |du contribution| of the element <= gain/tau_m
        new, _ = mtc_step(p, state, 0.0)
        current = el.polarity * el.gain * np.tanh(state.u_s - el.delta)
        assert abs(current[0]) <= 3.0

    def test_lipschitz_in_state_and_input(self):
        rng = np.random.default_rng(7)
        els = [ConductanceElement.create("fast", -1, 2.0, 0.6),
               ConductanceElement.create("slow", +1, 10.0, -0.4)]
        p = self._rc_params(elements=els)
        eps = 1e-6
        # upper bound on the one-step Jacobian column sums
        lip = 1.0 + (1.0 / 5.0) * (1.0 + 2.0 + 10.0 + 1.0)
        for _ in range(20):
            base = MTCState(u_m=rng.normal(0, 1, 1), u_s=rng.normal(0, 1, 1),
                            u_us=rng.normal(0, 1, 1))
            drive = rng.normal(0, 1)
            out0, _ = mtc_step(p, base, drive)
            for which in ("u_m", "u_s", "u_us"):
                pert = MTCState(u_m=base.u_m.copy(), u_s=base.u_s.copy(),
                                u_us=base.u_us.copy())
                getattr(pert, which)[0] += eps
                out1, _ = mtc_step(p, pert, drive)
                delta = max(abs(out1.u_m[0] - out0.u_m[0]),
                            abs(out1.u_s[0] - out0.u_s[0]),
                            abs(out1.u_us[0] - out0.u_us[0]))
                assert delta <= lip * eps * (1 + 1e-9)
            out2, _ = mtc_step(p, base, drive + eps)
            assert abs(out2.u_m[0] - out0.u_m[0]) <= lip * eps

    def test_timescale_separation_enforced(self):
        with pytest.raises(ConfigError):
            MTCParams.create(tau_m=5.0, tau_s=3.0, tau_us=2000.0)


class TestTransduce:
    def test_boundary_and_midpoint(self):
        assert transduce(0.5, 0.5, 1.5) == 0.0
        assert transduce(1.0, 0.5, 1.5) == 0.5
        assert transduce(11.5, 0.5, 1.5) == 1.0

    def test_exact_zero_below_threshold(self):
        u = np.linspace(-3.0, 0.5, 100)
        s = transduce(u, 0.5, 1.5)
        assert np.all(s == 0.0)

    @given(st.floats(-10, 10), st.floats(-1, 1), st.floats(0.1, 3))
    @settings(max_examples=200, deadline=None)
    def test_range_property(self, u, th, width):
        s = transduce(u, th, th + width)
        assert 0.0 <= s <= 1.0
        if u <= th:
            assert s == 0.0
        if u >= th + width:
            assert s == 1.0

    def test_invalid_bounds(self):
        with pytest.raises(ConfigError):
            transduce(0.0, 1.0, 1.0)


class TestIVCurves:
    def test_no_elements_pure_leak(self):
        p = MTCParams.create(tau_m=5.0, tau_s=50.0, tau_us=2000.0, u_rest=0.1)
        grid = np.linspace(-2, 2, 41)
        curves = iv_curves(p, grid)
        for key in ("fast", "slow", "ultraslow"):
            np.testing.assert_allclose(curves[key], grid - 0.1, atol=1e-15)

    def test_negative_resistance_region(self):
        el = ConductanceElement.create("fast", -1, 2.0, 0.0)
        p = MTCParams.create(tau_m=5.0, tau_s=50.0, tau_us=2000.0, elements=[el])
        grid = np.linspace(-0.01, 0.01, 3)
        curves = iv_curves(p, grid)
        np.testing.assert_allclose(curves["fast"], grid - 2 * np.tanh(grid),
                                   atol=1e-15)
        slope = np.gradient(curves["fast"], grid)
        assert slope[1] < 0  # 1 - 2 = -1 at the origin

    def test_tonic_curves_shapes(self):
        # tonic circuit: N-shaped fast curve, monotone increasing slow curve
        els = [ConductanceElement.create("fast", -1, 2.0, 0.6),
               ConductanceElement.create("slow", +1, 10.0, -0.4)]
        p = MTCParams.create(tau_m=5.0, tau_s=50.0, tau_us=2000.0, elements=els)
        grid = np.arange(-3.0, 3.0, 0.01)
        curves = iv_curves(p, grid)
        d_fast = np.diff(curves["fast"])
        d_slow = np.diff(curves["slow"])
        assert np.any(d_fast < 0) and np.any(d_fast > 0)  # N-shaped
        assert np.all(d_slow > 0)  # restorative dominates

    def test_ultraslow_zero_crossing_matches_relaxed_simulation(self):
        # the fixed point of the full dynamics sits where the ultraslow
        # aggregate curve crosses the input level
        from spikecast.regimes import simulate_population

        els = [ConductanceElement.create("fast", -1, 2.0, 0.6),
               ConductanceElement.create("slow", +1, 10.0, -0.4)]
        p = MTCParams.create(tau_m=5.0, tau_s=50.0, tau_us=200.0, elements=els)
        currents = np.full((20000, 1), 0.3)
        um, _ = simulate_population(p, currents)
        u_star = um[-1, 0]
        grid = np.linspace(u_star - 0.01, u_star + 0.01, 101)
        curves = iv_curves(p, grid)
        # net current driving the membrane is I - curve; it crosses zero at u*
        net = 0.3 - curves["ultraslow"]
        assert net[0] * net[-1] < 0
        crossing = grid[np.argmin(np.abs(net))]
        assert abs(crossing - u_star) < 1e-3

    def test_monotone_grid_required(self):
        p = MTCParams.create(tau_m=5.0, tau_s=50.0, tau_us=2000.0)
        with pytest.raises(ConfigError):
            iv_curves(p, np.array([0.0, 1.0, 0.5]))
