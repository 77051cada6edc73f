"""Counter-based state readout.

Instead of an ADC, each neuron's voltage is observed by counting a fast
reference clock against one period of each VCO.  The counter values are
inverted back to frequencies and then to a voltage estimate, picking
whichever oscillator (or the average of both) is in its linear region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neuron import LinearVcoModel, NeuronParams, NeuronState

DEFAULT_F_BASE = 50e6
COUNTER_MAX = 2**16 - 1


@dataclass(frozen=True)
class CounterPair:
    """Reference-clock counts across one period of each oscillator."""

    count_pos: int
    count_neg: int
    f_base: float = DEFAULT_F_BASE


@dataclass(frozen=True)
class VoltageEstimate:
    v_hat: float
    source: str  # "positive_only" | "negative_only" | "average"


def measure_counters(
    state: NeuronState, params: NeuronParams, f_base: float = DEFAULT_F_BASE
) -> CounterPair:
    """Ideal counter model: round(f_base / f), saturating at 16 bits.

    A count can never be zero; every oscillator runs below f_base.
    """
    c_pos = round(f_base / params.vco_pos.frequency(state.v_cap))
    c_neg = round(f_base / params.vco_neg.frequency(state.v_cap))
    return CounterPair(
        count_pos=int(min(max(c_pos, 1), COUNTER_MAX)),
        count_neg=int(min(max(c_neg, 1), COUNTER_MAX)),
        f_base=f_base,
    )


def counter_to_freq(count: int, f_base: float = DEFAULT_F_BASE) -> float:
    if count < 1:
        raise ValueError("counter value must be >= 1")
    return f_base / count


def estimate_vcap(
    f_pos: float,
    f_neg: float,
    pos_model: LinearVcoModel,
    neg_model: LinearVcoModel,
    v_cc: float = 1.0,
) -> VoltageEstimate:
    """Combine both measured frequencies into one voltage estimate.

    Each oscillator is trusted only where it is linear.  The preliminary
    average of both inversions decides which region the voltage is in: past
    the falling oscillator's corner only the rising one is valid, below the
    rising one's corner only the falling one is, in between both are
    averaged.
    """
    v_pos = pos_model.voltage(f_pos)
    v_neg = neg_model.voltage(f_neg)
    avg = 0.5 * (v_pos + v_neg)
    if avg > neg_model.flat_threshold:
        v_hat, source = v_pos, "positive_only"
    elif avg < pos_model.flat_threshold:
        v_hat, source = v_neg, "negative_only"
    else:
        v_hat, source = avg, "average"
    return VoltageEstimate(v_hat=min(max(v_hat, 0.0), v_cc), source=source)


@dataclass
class SampleFrame:
    """One readout snapshot of the whole fabric."""

    sample_index: int
    time_s: float
    voltages: np.ndarray
    counts_pos: np.ndarray
    counts_neg: np.ndarray


def _estimate_array(
    f_pos: np.ndarray,
    f_neg: np.ndarray,
    pos_model: LinearVcoModel,
    neg_model: LinearVcoModel,
    v_cc: float,
) -> np.ndarray:
    # vectorized twin of estimate_vcap, kept in lockstep by tests
    v_pos = (f_pos - pos_model.intercept_hz) / pos_model.slope_hz_per_v
    v_neg = (f_neg - neg_model.intercept_hz) / neg_model.slope_hz_per_v
    avg = 0.5 * (v_pos + v_neg)
    v_hat = np.where(
        avg > neg_model.flat_threshold,
        v_pos,
        np.where(avg < pos_model.flat_threshold, v_neg, avg),
    )
    return np.clip(v_hat, 0.0, v_cc)


def sample_voltages(
    v_cap: np.ndarray,
    params: NeuronParams,
    f_base: float = DEFAULT_F_BASE,
    sample_index: int = 0,
    time_s: float = 0.0,
) -> SampleFrame:
    """Run the full counter -> frequency -> voltage chain for every neuron."""
    v_cap = np.asarray(v_cap, dtype=np.float64)
    pos, neg = params.vco_pos, params.vco_neg
    f_pos = pos.slope_hz_per_v * np.maximum(v_cap, pos.flat_threshold) + pos.intercept_hz
    f_neg = neg.slope_hz_per_v * np.minimum(v_cap, neg.flat_threshold) + neg.intercept_hz
    c_pos = np.clip(np.rint(f_base / f_pos), 1, COUNTER_MAX).astype(np.int64)
    c_neg = np.clip(np.rint(f_base / f_neg), 1, COUNTER_MAX).astype(np.int64)
    v_hat = _estimate_array(f_base / c_pos, f_base / c_neg, pos, neg, params.v_cc)
    return SampleFrame(
        sample_index=sample_index,
        time_s=time_s,
        voltages=v_hat,
        counts_pos=c_pos,
        counts_neg=c_neg,
    )
