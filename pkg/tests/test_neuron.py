from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vcoreservoir.neuron import (
    LinearVcoModel,
    NeuronParams,
    advance_phase,
    apply_pulse,
    leak,
    negative_vco,
    positive_vco,
    resting_state,
    vco_frequency,
)


class TestVcoModels:
    def test_positive_anchor_points(self):
        f = positive_vco()
        assert f.frequency(1.0) == pytest.approx(1.0e6)
        assert f.frequency(0.35) == pytest.approx(0.155e6)
        assert f.frequency(0.5) == pytest.approx(0.35e6)

    def test_negative_anchor_points(self):
        g = negative_vco()
        assert g.frequency(0.0) == pytest.approx(1.0e6)
        assert g.frequency(0.65) == pytest.approx(0.155e6)
        assert g.frequency(0.5) == pytest.approx(0.35e6)

    def test_flat_regions(self):
        f, g = positive_vco(), negative_vco()
        # below/above the knees the frequency pins to the knee value
        assert f.frequency(0.1) == f.frequency(0.35)
        assert f.frequency(0.0) == f.frequency(0.35)
        assert g.frequency(0.9) == g.frequency(0.65)
        assert g.frequency(1.0) == g.frequency(0.65)

    def test_voltage_inverts_frequency_in_linear_band(self):
        f = positive_vco()
        for v in (0.4, 0.5, 0.75, 0.95):
            assert f.voltage(f.frequency(v)) == pytest.approx(v, abs=1e-12)

    def test_flat_side_validation(self):
        with pytest.raises(ValueError):
            LinearVcoModel(1.0, 0.0, 0.5, flat_side="sideways")

    @given(st.floats(0.0, 1.0))
    def test_positive_monotone_nondecreasing(self, v):
        f = positive_vco()
        assert f.frequency(v) <= f.frequency(min(1.0, v + 0.01)) + 1e-9


class TestPulse:
    def test_excitation_raises_voltage(self, rng):
        p = NeuronParams()
        s = resting_state(p)
        s2 = apply_pulse(s, p, "excitation", 100e-9)
        assert s2.v_cap == pytest.approx(0.5 + 5e4 * 100e-9)

    def test_inhibition_lowers_voltage(self):
        p = NeuronParams()
        s = resting_state(p)
        s2 = apply_pulse(s, p, "inhibition", 100e-9)
        assert s2.v_cap == pytest.approx(0.5 - 5e4 * 100e-9)

    def test_clamps_at_rails(self):
        p = NeuronParams()
        s = resting_state(p)
        for _ in range(300):
            s = apply_pulse(s, p, "excitation", 1e-6)
        assert s.v_cap == p.v_cc
        for _ in range(600):
            s = apply_pulse(s, p, "inhibition", 1e-6)
        assert s.v_cap == 0.0

    def test_rejects_unknown_polarity(self):
        p = NeuronParams()
        with pytest.raises(ValueError):
            apply_pulse(resting_state(p), p, "sideways", 1e-9)

    @given(
        st.floats(0.0, 1.0),
        st.sampled_from(["excitation", "inhibition"]),
        st.floats(0.0, 1e-5),
    )
    def test_result_always_within_rails(self, v0, polarity, width):
        p = NeuronParams()
        s = replace(resting_state(p), v_cap=v0)
        out = apply_pulse(s, p, polarity, width)
        assert 0.0 <= out.v_cap <= p.v_cc


class TestLeak:
    def test_closed_form_one_tau(self):
        # 0.5 + 0.1 * exp(-1)
        p = NeuronParams(tau_leak=2e-3)
        s = replace(resting_state(p), v_cap=0.6)
        out = leak(s, p, 2e-3)
        assert out.v_cap == pytest.approx(0.53679, abs=1e-5)

    def test_rest_is_fixed_point(self):
        p = NeuronParams()
        s = resting_state(p)
        assert leak(s, p, 1.0).v_cap == pytest.approx(p.v_rest)

    def test_zero_dt_identity(self):
        p = NeuronParams()
        s = replace(resting_state(p), v_cap=0.81)
        assert leak(s, p, 0.0).v_cap == 0.81

    @given(st.floats(0.0, 1.0), st.floats(0.0, 0.1))
    def test_leak_contracts_toward_rest(self, v0, dt):
        p = NeuronParams()
        s = replace(resting_state(p), v_cap=v0)
        out = leak(s, p, dt)
        assert abs(out.v_cap - p.v_rest) <= abs(v0 - p.v_rest) + 1e-12

    def test_negative_dt_rejected(self):
        p = NeuronParams()
        with pytest.raises(ValueError):
            leak(resting_state(p), p, -1e-9)


class TestPhase:
    def test_advance_accumulates_and_wraps(self):
        phase, wrapped = advance_phase(0.9, 1e6, 2e-7)
        # 0.9 + 0.2 wraps once
        assert wrapped
        assert phase == pytest.approx(0.1)

    def test_no_wrap_below_unity(self):
        phase, wrapped = advance_phase(0.2, 1e6, 2e-7)
        assert not wrapped
        assert phase == pytest.approx(0.4)

    def test_edge_rate_matches_frequency(self):
        # over many steps the wrap count tracks f*t to within one edge
        freq, dt, steps = 0.731e6, 2e-7, 5000
        phase, edges = 0.0, 0
        for _ in range(steps):
            phase, w = advance_phase(phase, freq, dt)
            edges += int(w)
        assert abs(edges - freq * dt * steps) <= 1.0


class TestParamsValidation:
    def test_rest_must_sit_inside_rails(self):
        with pytest.raises(ValueError):
            NeuronParams(v_rest=1.5)

    def test_tau_positive(self):
        with pytest.raises(ValueError):
            NeuronParams(tau_leak=0.0)

    def test_vco_frequency_helper_matches_model(self):
        p = NeuronParams()
        assert vco_frequency(p.vco_pos, 0.5) == pytest.approx(0.35e6)
        assert vco_frequency(p.vco_neg, 0.5) == pytest.approx(0.35e6)
