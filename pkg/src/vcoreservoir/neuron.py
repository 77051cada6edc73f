"""Single-neuron device model: leaky capacitor plus two ring-oscillator VCOs.

Each neuron stores its state on one capacitor.  Incoming pulses move the
capacitor voltage up (excitation) or down (inhibition) in proportion to the
pulse width, the voltage relaxes exponentially toward a mid-rail resting
level, and two voltage-controlled oscillators translate the voltage into
frequencies: one increasing with voltage (it drives the coupling fabric and
the readout) and one decreasing (readout only, to cover the low end of the
swing where the first one goes flat).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class LinearVcoModel:
    """Piecewise-linear VCO response: linear in voltage, flat past a corner.

    ``flat_side`` names the side of ``flat_threshold`` where the response
    stops following the line and holds the corner frequency: ``"below"`` for
    an oscillator that rises with voltage, ``"above"`` for one that falls.
    """

    slope_hz_per_v: float
    intercept_hz: float
    flat_threshold: float
    flat_side: str = "below"

    def __post_init__(self):
        if self.flat_side not in ("below", "above"):
            raise ValueError(f"flat_side must be 'below' or 'above', got {self.flat_side!r}")
        if self.slope_hz_per_v == 0.0:
            raise ValueError("VCO slope must be nonzero")
        if self.frequency(self.flat_threshold) <= 0.0:
            raise ValueError("VCO corner frequency must be positive")

    def effective_voltage(self, v: float) -> float:
        """Voltage actually seen by the linear law, after the flat region."""
        if self.flat_side == "below":
            return max(v, self.flat_threshold)
        return min(v, self.flat_threshold)

    def frequency(self, v: float) -> float:
        return self.slope_hz_per_v * self.effective_voltage(v) + self.intercept_hz

    def voltage(self, f: float) -> float:
        """Invert the linear law.  Only meaningful on the non-flat region."""
        return (f - self.intercept_hz) / self.slope_hz_per_v


def positive_vco() -> LinearVcoModel:
    # 1.3 MHz/V with a -0.3 MHz intercept; flat below 0.35 V where the
    # ring oscillator stops following the control voltage.
    return LinearVcoModel(1.3e6, -0.3e6, 0.35, "below")


def negative_vco() -> LinearVcoModel:
    return LinearVcoModel(-1.3e6, 1.0e6, 0.65, "above")


@dataclass(frozen=True)
class NeuronParams:
    """Electrical constants shared by every neuron on the fabric."""

    v_cc: float = 1.0
    v_rest: float = 0.5
    tau_leak: float = 2e-3
    eta_v_per_s: float = 5e4
    vco_pos: LinearVcoModel = field(default_factory=positive_vco)
    vco_neg: LinearVcoModel = field(default_factory=negative_vco)

    def __post_init__(self):
        if self.v_cc <= 0.0:
            raise ValueError("v_cc must be positive")
        if not 0.0 <= self.v_rest <= self.v_cc:
            raise ValueError("v_rest must lie within [0, v_cc]")
        if self.tau_leak <= 0.0:
            raise ValueError("tau_leak must be positive")
        if self.eta_v_per_s <= 0.0:
            raise ValueError("eta_v_per_s must be positive")
        for model in (self.vco_pos, self.vco_neg):
            # frequency must stay positive over the whole reachable swing
            for v in (0.0, self.v_cc):
                if model.frequency(v) <= 0.0:
                    raise ValueError(
                        f"VCO frequency not positive at v={v}: {model.frequency(v)}"
                    )


@dataclass(frozen=True)
class NeuronState:
    """Capacitor voltage plus the phase of each oscillator, phases in [0, 1)."""

    v_cap: float
    phase_pos: float = 0.0
    phase_neg: float = 0.0


def resting_state(params: NeuronParams) -> NeuronState:
    return NeuronState(v_cap=params.v_rest)


def apply_pulse(
    state: NeuronState, params: NeuronParams, polarity: str, width_s: float
) -> NeuronState:
    """Inject one pulse of the given width; the voltage step is eta * width.

    The result is clamped to the supply rails immediately, so a train of
    pulses applied one at a time saturates instead of accumulating past a
    rail.
    """
    if polarity == "excitation":
        dv = params.eta_v_per_s * width_s
    elif polarity == "inhibition":
        dv = -params.eta_v_per_s * width_s
    else:
        raise ValueError(f"polarity must be 'excitation' or 'inhibition', got {polarity!r}")
    if width_s < 0.0:
        raise ValueError("pulse width must be nonnegative")
    return replace(state, v_cap=_clamp(state.v_cap + dv, 0.0, params.v_cc))


def leak(state: NeuronState, params: NeuronParams, dt: float) -> NeuronState:
    """Relax the capacitor toward v_rest over dt (closed-form exponential)."""
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    decay = math.exp(-dt / params.tau_leak)
    return replace(state, v_cap=params.v_rest + (state.v_cap - params.v_rest) * decay)


def vco_frequency(model: LinearVcoModel, v_cap: float) -> float:
    """Oscillator frequency in Hz at the given capacitor voltage."""
    return model.frequency(v_cap)


def advance_phase(phase: float, freq_hz: float, dt: float) -> tuple[float, bool]:
    """Advance a phase accumulator; returns (new_phase, wrapped).

    Callers keep dt small enough that at most one wrap can happen per call
    (dt <= 1 / (2 * freq) for every frequency in play).
    """
    phase += freq_hz * dt
    if phase >= 1.0:
        return phase - 1.0, True
    return phase, False
