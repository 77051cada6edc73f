"""Closed-loop FORCE learning driven by a per-sample RLS filter.

The readout output is always fed back into the reservoir as the input
signal; during teaching an RLS update keeps the output close to the target,
after which the frozen filter runs free.  A fixed-point mode mirrors a DSP
datapath built from 32-bit registers with 28 fractional bits, 64-bit
accumulators for the inner products, and an unsigned divider.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fabric import Fabric, ReservoirConfig

FRAC_BITS = 28
_ONE = 1 << FRAC_BITS
_HALF_SHIFT = 14  # products come out at 2*FRAC_BITS; shift in two stages
_ROUND_HALF = 1 << (_HALF_SHIFT - 1)  # round-to-nearest on every shift-out
_ROUND_FULL = 1 << (2 * _HALF_SHIFT - 1)
_INT32_MIN = -(2**31)
_INT32_MAX = 2**31 - 1

MODE_FLOAT = "float64"
MODE_FIXED = "q4.28"


def to_fixed(x) -> np.ndarray:
    """Quantize to signed 32-bit with 28 fractional bits (stored in int64)."""
    q = np.rint(np.asarray(x, dtype=np.float64) * _ONE).astype(np.int64)
    return np.clip(q, _INT32_MIN, _INT32_MAX)


def from_fixed(q) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) / _ONE


def _saturate(q: np.ndarray) -> np.ndarray:
    return np.clip(q, _INT32_MIN, _INT32_MAX, out=q)


def _fx_dot(a: np.ndarray, b: np.ndarray) -> np.int64:
    # each product lands at 2*FRAC_BITS fractional bits; shed half before
    # accumulating so the 64-bit accumulator cannot overflow, half after.
    # shifts round to nearest: plain truncation biases toward -inf and the
    # bias compounds through P over thousands of steps
    acc = np.sum((a * b + _ROUND_HALF) >> _HALF_SHIFT)
    return np.int64((acc + _ROUND_HALF) >> _HALF_SHIFT)


def _fx_divide(num: np.ndarray, den: int) -> np.ndarray:
    # unsigned divider with the signs handled outside, quotient at FRAC_BITS
    sign = np.sign(num) * (1 if den >= 0 else -1)
    d = abs(int(den))
    q = ((np.abs(num) << FRAC_BITS) + d // 2) // d
    return sign * q


@dataclass
class RlsState:
    """Weights and recursion matrix of one adaptive readout filter."""

    weights: np.ndarray
    p_matrix: np.ndarray
    alpha: float
    mode: str = MODE_FLOAT


def rls_init(n: int, alpha: float = 1.0, mode: str = MODE_FLOAT) -> RlsState:
    """All-ones weights and P = alpha * identity."""
    if n < 1:
        raise ValueError("filter needs at least one regressor")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if mode not in (MODE_FLOAT, MODE_FIXED):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    if mode == MODE_FLOAT:
        return RlsState(np.ones(n), alpha * np.eye(n), alpha, mode)
    return RlsState(
        np.full(n, _ONE, dtype=np.int64),
        to_fixed(alpha * np.eye(n)),
        alpha,
        mode,
    )


def predict(state: RlsState, x: np.ndarray) -> float:
    """Filter output for one state vector: the inner product with w."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != state.weights.shape:
        raise ValueError(f"expected {state.weights.shape[0]} regressors, got {x.shape}")
    if state.mode == MODE_FLOAT:
        return float(x @ state.weights)
    return float(from_fixed(_fx_dot(to_fixed(x), state.weights)))


def rls_step(state: RlsState, x: np.ndarray, z: float) -> tuple[RlsState, float, float]:
    """One recursive update toward target z; returns (state, error, output).

    The output z_p is the prediction with the incoming weights; the error
    drives the weight update.  P is symmetrized every step to stop drift.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != state.weights.shape:
        raise ValueError(f"expected {state.weights.shape[0]} regressors, got {x.shape}")
    if state.mode == MODE_FLOAT:
        w, p = state.weights, state.p_matrix
        px = p @ x
        z_p = float(x @ w)
        eps = float(z) - z_p
        gain = px / (1.0 + float(x @ px))
        w += eps * gain
        # x'P equals (Px)' while P stays symmetric
        p -= np.outer(gain, px)
        p += p.T.copy()
        p *= 0.5
        return state, eps, z_p

    xq = to_fixed(x)
    zq = int(to_fixed(z))
    w, p = state.weights, state.p_matrix
    px = _saturate(
        (((p * xq[None, :] + _ROUND_HALF) >> _HALF_SHIFT).sum(axis=1) + _ROUND_HALF)
        >> _HALF_SHIFT
    )
    z_pq = int(_fx_dot(xq, w))
    epsq = zq - z_pq
    den = _ONE + int(_fx_dot(xq, px))
    gain = _saturate(_fx_divide(px, den))
    w += (epsq * gain + _ROUND_FULL) >> (2 * _HALF_SHIFT)
    _saturate(w)
    p -= (gain[:, None] * px[None, :] + _ROUND_FULL) >> (2 * _HALF_SHIFT)
    p += p.T.copy()
    p >>= 1
    _saturate(p)
    return state, float(from_fixed(epsq)), float(from_fixed(z_pq))


def operation_report(
    n: int,
    multipliers: int = 50,
    clock_hz: float = 50e6,
    window_s: float = 30e-6,
) -> dict:
    """Per-sample arithmetic cost of one RLS step on a parallel datapath.

    Counts assume x'P is reused as (Px)' thanks to symmetry: N^2 multiplies
    for Px, N^2 for the P update outer product, and 3N across the two inner
    products and the weight update, plus N divisions for the gain.
    """
    multiplies = 2 * n * n + 3 * n
    divisions = n
    budget_cycles = int(round(window_s * clock_hz))
    cycles_with_multipliers = math.ceil(multiplies / multipliers)
    return {
        "n": n,
        "multiplies_per_step": multiplies,
        "divisions_per_step": divisions,
        "budget_cycles": budget_cycles,
        "multipliers": multipliers,
        "cycles_with_multipliers": cycles_with_multipliers,
        "exceeds_serial_budget": multiplies > budget_cycles,
        "fits_budget_with_multipliers": cycles_with_multipliers <= budget_cycles,
    }


@dataclass
class ForceResult:
    """Full trace of one closed-loop run, teaching followed by test."""

    n_teach: int
    n_test: int
    sample_period: float
    target_freq: float
    alpha: float
    mode: str
    correlation: float
    degenerate: bool
    clamp_events: int
    targets: np.ndarray
    outputs: np.ndarray
    errors: np.ndarray  # NaN over the test phase (no updates there)
    feedback: np.ndarray  # clamped drive actually sent into the fabric
    neuron_traces: np.ndarray  # (n_samples, len(trace_neurons))
    trace_neurons: tuple[int, ...]
    weights: np.ndarray
    operation_report: dict = field(default_factory=dict)

    @property
    def phase_labels(self) -> list[str]:
        return ["teach"] * self.n_teach + ["test"] * self.n_test

    @property
    def test_slice(self) -> slice:
        return slice(self.n_teach, self.n_teach + self.n_test)


def force_run(
    config: ReservoirConfig,
    target_freq: float,
    sample_period: float = 50e-6,
    teach_cycles: int = 15,
    test_cycles: int = 5,
    alpha: float = 1.0,
    amplitude: float = 1.0,
    mode: str = MODE_FLOAT,
    trace_neurons: tuple[int, ...] | None = None,
) -> ForceResult:
    """Teach the readout a sine of target_freq, then let it run frozen.

    The reservoir input at sample n is always the previous readout output,
    clamped to the legal input range (clamping is recorded, never fatal).
    Correlation between target and output over the test phase is the score;
    a zero-variance phase makes it NaN with the degenerate flag set.
    """
    if target_freq <= 0.0:
        raise ValueError("target_freq must be positive")
    if 1.0 / sample_period < 10.0 * target_freq:
        raise ValueError(
            f"sample period {sample_period} too coarse for {target_freq} Hz: "
            "need at least 10 samples per cycle"
        )
    if teach_cycles < 1 or test_cycles < 0:
        raise ValueError("need at least one teaching cycle")
    n_teach = round(teach_cycles / target_freq / sample_period)
    n_test = round(test_cycles / target_freq / sample_period)
    total = n_teach + n_test
    if trace_neurons is None:
        trace_neurons = tuple(range(min(3, config.n)))

    fabric = Fabric(config)
    rls = rls_init(config.n, alpha, mode)
    targets = np.empty(total)
    outputs = np.empty(total)
    errors = np.full(total, np.nan)
    feedback = np.empty(total)
    traces = np.empty((total, len(trace_neurons)))
    trace_idx = list(trace_neurons)
    clamp_events = 0
    drive = 0.0

    for n in range(total):
        feedback[n] = drive
        frame = fabric.run_until_sample(drive, sample_period)
        x = frame.voltages
        z = amplitude * math.sin(2.0 * math.pi * target_freq * fabric.state.time_s)
        if n < n_teach:
            rls, eps, z_p = rls_step(rls, x, z)
            errors[n] = eps
        else:
            z_p = predict(rls, x)
        targets[n] = z
        outputs[n] = z_p
        traces[n] = x[trace_idx]
        drive = z_p
        if abs(drive) > 1.0:
            clamp_events += 1
            drive = math.copysign(1.0, drive)

    test = slice(n_teach, total)
    z_t, y_t = targets[test], outputs[test]
    # constancy instead of std == 0: a constant series still carries float
    # summation noise in its computed variance
    degenerate = (
        n_test < 2 or bool(np.all(z_t == z_t[0])) or bool(np.all(y_t == y_t[0]))
    )
    corr = float("nan") if degenerate else float(np.corrcoef(z_t, y_t)[0, 1])

    return ForceResult(
        n_teach=n_teach,
        n_test=n_test,
        sample_period=sample_period,
        target_freq=target_freq,
        alpha=alpha,
        mode=mode,
        correlation=corr,
        degenerate=degenerate,
        clamp_events=clamp_events,
        targets=targets,
        outputs=outputs,
        errors=errors,
        feedback=feedback,
        neuron_traces=traces,
        trace_neurons=tuple(trace_neurons),
        weights=np.array(rls.weights, copy=True),
        operation_report=operation_report(config.n),
    )
