"""Reservoir fabric: programmable pulse coupling between neurons.

The fabric wires N neurons and two shared input channels through a sparse
matrix of one-directional pulse connections.  Every oscillator edge (a phase
accumulator wrapping past 1) emits one pulse toward each of its destinations;
the pulse width is set by a 4-bit weight, and its polarity by the connection
type.  Only the rising (positive-slope) VCO of a neuron drives connections;
the falling one exists for readout.

The inner loop is compiled with numba: each sample window of many microsteps
runs as one kernel call over flat connection arrays in CSR-by-source layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
from numba import njit

from .neuron import NeuronParams, NeuronState
from .readout import DEFAULT_F_BASE, SampleFrame, sample_voltages

WEIGHT_BITS = 4
MAX_WEIGHT = 2**WEIGHT_BITS - 1
DEFAULT_DELAY_UNIT = 25e-9
DEFAULT_INPUT_MAX_FREQ = 1e6
DEFAULT_MICROSTEP = 2e-7
DEFAULT_FAN_IN_LIMIT = 16

KIND_NONE = 0
KIND_EXCITATION = 1
KIND_INHIBITION = -1

_KIND_NAMES = {KIND_NONE: "none", KIND_EXCITATION: "excitation", KIND_INHIBITION: "inhibition"}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


class ConnectionEntry(NamedTuple):
    kind: str  # "none" | "excitation" | "inhibition"
    weight: int = 0


def weight_to_width(weight: int, delay_unit: float = DEFAULT_DELAY_UNIT) -> float:
    """Pulse width in seconds for a 4-bit weight: (weight + 1) delay units."""
    if not 0 <= weight <= MAX_WEIGHT:
        raise ValueError(f"weight must be in [0, {MAX_WEIGHT}], got {weight}")
    return (weight + 1) * delay_unit


def input_frequencies(u: float, f_max: float = DEFAULT_INPUT_MAX_FREQ) -> tuple[float, float]:
    """Map a signed input sample in [-1, 1] onto the two input channels.

    Positive input drives the excitation channel, negative the inhibition
    channel; the other one stays silent.
    """
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"input sample must lie in [-1, 1], got {u}")
    if u >= 0.0:
        return f_max * u, 0.0
    return 0.0, f_max * -u


class ConnectivityMatrix:
    """Dense (N, N+2) connection table; rows are destinations.

    Source columns 0..N-1 are the neurons' rising VCOs; column N is the
    excitation input channel, column N+1 the inhibition input channel.
    Each cell holds a polarity and a 4-bit weight; a cell drives exactly one
    polarity or none.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one neuron")
        self.n = n
        self.kind = np.zeros((n, n + 2), dtype=np.int8)
        self.weight = np.zeros((n, n + 2), dtype=np.uint8)

    @property
    def exc_col(self) -> int:
        return self.n

    @property
    def inh_col(self) -> int:
        return self.n + 1

    def entry(self, dst: int, src: int) -> ConnectionEntry:
        return ConnectionEntry(_KIND_NAMES[int(self.kind[dst, src])], int(self.weight[dst, src]))

    def set_entry(self, dst: int, src: int, entry: ConnectionEntry) -> None:
        code = _KIND_CODES.get(entry.kind)
        if code is None:
            raise ValueError(f"unknown connection kind {entry.kind!r}")
        if code != KIND_NONE and not 0 <= entry.weight <= MAX_WEIGHT:
            raise ValueError(f"weight must be in [0, {MAX_WEIGHT}], got {entry.weight}")
        self.kind[dst, src] = code
        self.weight[dst, src] = entry.weight if code != KIND_NONE else 0

    def connections(self) -> Iterator[tuple[int, int, str, int]]:
        """Yield (dst, src, kind, weight) for every non-empty cell, row major."""
        dsts, srcs = np.nonzero(self.kind)
        for dst, src in zip(dsts.tolist(), srcs.tolist()):
            yield dst, src, _KIND_NAMES[int(self.kind[dst, src])], int(self.weight[dst, src])

    @property
    def n_connections(self) -> int:
        return int(np.count_nonzero(self.kind))

    def fan_in(self, dst: int, kind: str) -> int:
        return int(np.count_nonzero(self.kind[dst] == _KIND_CODES[kind]))

    def copy(self) -> "ConnectivityMatrix":
        out = ConnectivityMatrix(self.n)
        out.kind = self.kind.copy()
        out.weight = self.weight.copy()
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConnectivityMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.kind, other.kind)
            and np.array_equal(self.weight, other.weight)
        )


def _max_source_frequency(params: NeuronParams, f_max_input: float) -> float:
    candidates = [f_max_input]
    for model in (params.vco_pos, params.vco_neg):
        candidates += [model.frequency(0.0), model.frequency(params.v_cc)]
    return max(candidates)


@dataclass(frozen=True)
class ReservoirConfig:
    """Everything needed to reproduce a fabric run bit for bit."""

    matrix: ConnectivityMatrix
    neuron: NeuronParams = field(default_factory=NeuronParams)
    delay_unit: float = DEFAULT_DELAY_UNIT
    input_max_freq: float = DEFAULT_INPUT_MAX_FREQ
    microstep: float = DEFAULT_MICROSTEP
    seed: int = 0
    noise_sigma: float = 0.0
    fan_in_limit: int = DEFAULT_FAN_IN_LIMIT

    def __post_init__(self):
        if self.delay_unit <= 0.0 or self.input_max_freq <= 0.0 or self.microstep <= 0.0:
            raise ValueError("delay_unit, input_max_freq and microstep must be positive")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.fan_in_limit < 0:
            raise ValueError("fan_in_limit must be nonnegative")
        # the engine applies at most one edge per oscillator per microstep,
        # which is only exact if every period spans at least two microsteps
        f_top = _max_source_frequency(self.neuron, self.input_max_freq)
        if self.microstep > 1.0 / (2.0 * f_top):
            raise ValueError(
                f"microstep {self.microstep} too coarse for max source frequency "
                f"{f_top}: must be <= {1.0 / (2.0 * f_top)}"
            )
        widest = (MAX_WEIGHT + 1) * self.delay_unit
        if widest >= 1.0 / self.input_max_freq:
            raise ValueError(
                "widest pulse must be shorter than the shortest input period: "
                f"{widest} >= {1.0 / self.input_max_freq}"
            )

    @property
    def n(self) -> int:
        return self.matrix.n


@dataclass
class FabricState:
    """Mutable run state: per-neuron voltages and phases plus input phases."""

    v_cap: np.ndarray
    phase_pos: np.ndarray
    phase_neg: np.ndarray
    input_phase: np.ndarray  # (2,): excitation, inhibition
    time_s: float = 0.0
    sample_index: int = 0


@njit(cache=True)
def _run_window(
    v, ph_pos, ph_neg, in_phase, edge_counts, n_steps, dt, decay, v_rest, v_cc,
    pos_slope, pos_icpt, pos_lo, pos_hi, neg_slope, neg_icpt, neg_lo, neg_hi,
    f_exc, f_inh, indptr, dst_idx, dv,
):  # pragma: no cover - exercised through Fabric
    n = v.shape[0]
    wrapped = np.empty(n + 2, np.int64)
    for _ in range(n_steps):
        m = 0
        for i in range(n):
            vi = v[i]
            ve = vi
            if ve < pos_lo:
                ve = pos_lo
            elif ve > pos_hi:
                ve = pos_hi
            p = ph_pos[i] + (pos_slope * ve + pos_icpt) * dt
            if p >= 1.0:
                p -= 1.0
                wrapped[m] = i
                m += 1
            ph_pos[i] = p
            ve = vi
            if ve < neg_lo:
                ve = neg_lo
            elif ve > neg_hi:
                ve = neg_hi
            q = ph_neg[i] + (neg_slope * ve + neg_icpt) * dt
            if q >= 1.0:
                q -= 1.0
            ph_neg[i] = q
        p = in_phase[0] + f_exc * dt
        if p >= 1.0:
            p -= 1.0
            wrapped[m] = n
            m += 1
        in_phase[0] = p
        p = in_phase[1] + f_inh * dt
        if p >= 1.0:
            p -= 1.0
            wrapped[m] = n + 1
            m += 1
        in_phase[1] = p
        # pulses land one at a time, each clamped at the rails, in
        # (source, destination) order within the step
        for k in range(m):
            s = wrapped[k]
            edge_counts[s] += 1
            for j in range(indptr[s], indptr[s + 1]):
                d = dst_idx[j]
                nv = v[d] + dv[j]
                if nv < 0.0:
                    nv = 0.0
                elif nv > v_cc:
                    nv = v_cc
                v[d] = nv
        for i in range(n):
            v[i] = v_rest + (v[i] - v_rest) * decay


def _vco_bounds(model) -> tuple[float, float]:
    if model.flat_side == "below":
        return model.flat_threshold, np.inf
    return -np.inf, model.flat_threshold


class Fabric:
    """Compiled simulation engine for one reservoir configuration."""

    def __init__(self, config: ReservoirConfig):
        self.config = config
        n = config.n
        mat = config.matrix
        # CSR by source column: all destinations of a source, ascending
        indptr = np.zeros(n + 3, dtype=np.int64)
        dst_idx = []
        dv = []
        eta = config.neuron.eta_v_per_s
        for src in range(n + 2):
            col_kind = mat.kind[:, src]
            dsts = np.nonzero(col_kind)[0]
            indptr[src + 1] = indptr[src] + dsts.size
            for dst in dsts.tolist():
                width = weight_to_width(int(mat.weight[dst, src]), config.delay_unit)
                dst_idx.append(dst)
                dv.append(float(col_kind[dst]) * eta * width)
        self._indptr = indptr
        self._dst_idx = np.asarray(dst_idx, dtype=np.int64)
        self._dv = np.asarray(dv, dtype=np.float64)
        self._pos_bounds = _vco_bounds(config.neuron.vco_pos)
        self._neg_bounds = _vco_bounds(config.neuron.vco_neg)
        self.edge_counts = np.zeros(n + 2, dtype=np.int64)
        self.state = FabricState(
            v_cap=np.empty(n), phase_pos=np.empty(n), phase_neg=np.empty(n),
            input_phase=np.empty(2),
        )
        self.reset()

    def reset(self) -> None:
        """Return to the power-on state: voltages at rest, fresh RNG.

        Free-running oscillators power on at arbitrary phase, so phases are
        drawn from the seeded RNG; runs stay reproducible per seed.
        """
        st = self.state
        self._rng = np.random.default_rng(self.config.seed)
        st.v_cap[:] = self.config.neuron.v_rest
        st.phase_pos[:] = self._rng.random(st.phase_pos.shape)
        st.phase_neg[:] = self._rng.random(st.phase_neg.shape)
        st.input_phase[:] = self._rng.random(st.input_phase.shape)
        st.time_s = 0.0
        st.sample_index = 0
        self.edge_counts[:] = 0

    def neuron_state(self, i: int) -> NeuronState:
        st = self.state
        return NeuronState(float(st.v_cap[i]), float(st.phase_pos[i]), float(st.phase_neg[i]))

    def _steps_for(self, duration: float) -> int:
        ratio = duration / self.config.microstep
        n_steps = round(ratio)
        if n_steps < 1 or abs(ratio - n_steps) > 1e-6:
            raise ValueError(
                f"duration {duration} is not a whole number of microsteps "
                f"({self.config.microstep})"
            )
        return n_steps

    def _advance(self, u: float, n_steps: int) -> None:
        cfg = self.config
        p = cfg.neuron
        f_exc, f_inh = input_frequencies(u, cfg.input_max_freq)
        st = self.state
        _run_window(
            st.v_cap, st.phase_pos, st.phase_neg, st.input_phase, self.edge_counts,
            n_steps, cfg.microstep, math.exp(-cfg.microstep / p.tau_leak),
            p.v_rest, p.v_cc,
            p.vco_pos.slope_hz_per_v, p.vco_pos.intercept_hz, *self._pos_bounds,
            p.vco_neg.slope_hz_per_v, p.vco_neg.intercept_hz, *self._neg_bounds,
            f_exc, f_inh, self._indptr, self._dst_idx, self._dv,
        )
        st.time_s += n_steps * cfg.microstep

    def advance_microstep(self, u: float) -> None:
        """Run a single microstep with the input held at u."""
        self._advance(u, 1)

    def run_until_sample(self, u: float, ts: float) -> SampleFrame:
        """Hold the input at u for one sample period, then read out.

        State noise, when configured, perturbs the capacitor voltages once
        per sample window, after the window's microsteps.
        """
        self._advance(u, self._steps_for(ts))
        st = self.state
        if self.config.noise_sigma > 0.0:
            st.v_cap += self._rng.normal(0.0, self.config.noise_sigma, st.v_cap.shape)
            np.clip(st.v_cap, 0.0, self.config.neuron.v_cc, out=st.v_cap)
        frame = sample_voltages(
            st.v_cap, self.config.neuron, DEFAULT_F_BASE, st.sample_index, st.time_s,
        )
        st.sample_index += 1
        return frame
