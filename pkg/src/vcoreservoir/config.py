"""Reservoir configuration: random generation, validation, serialization.

Two on-disk forms exist.  The binary bitstream (.rcfg) carries exactly what
the programmable fabric stores, the connection table, with a CRC; the text
form carries the full configuration including electrical parameters and is
what the CLI reads and writes for humans.
"""

from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .fabric import (
    DEFAULT_DELAY_UNIT,
    DEFAULT_FAN_IN_LIMIT,
    DEFAULT_INPUT_MAX_FREQ,
    DEFAULT_MICROSTEP,
    KIND_EXCITATION,
    KIND_INHIBITION,
    MAX_WEIGHT,
    ConnectivityMatrix,
    ReservoirConfig,
)
from .neuron import LinearVcoModel, NeuronParams

MAGIC = b"RCFG"
BITSTREAM_VERSION = 1
_RECORD = struct.Struct(">HHB")
_FLAG_INHIBITION = 0x80
_FLAG_RESERVED = 0x70


class BitstreamError(ValueError):
    """Raised when a bitstream fails structural or CRC checks."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (at byte {offset})")
        self.offset = offset


class ConfigTextError(ValueError):
    """Raised when the text configuration format fails to parse."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class Violation(NamedTuple):
    code: str
    message: str


@dataclass(frozen=True)
class ReservoirSpec:
    """Knobs for drawing a random fabric configuration.

    The defaults are the calibrated desk-scale operating point: minimum-width
    pulses everywhere (weight 0), a recurrent density that keeps the typical
    in-degree high enough for multi-hop mixing without pinning capacitors at
    the rails, and a leak fast enough that the restoring force at the rail
    beats the standing drive of a few connections.  They were chosen by a
    benchmark sweep; see the README for the measured figures.
    """

    n_neurons: int = 100
    connection_density: float = 0.14
    input_density: float = 0.25
    excitation_fraction: float = 0.5
    # "uniform" draws each weight from 0..15; an int fixes every weight
    weight_distribution: Union[str, int] = 0
    # leak applied by the generated config; NeuronParams keeps its own default
    tau_leak: float = 4e-4
    fan_in_limit: int = DEFAULT_FAN_IN_LIMIT
    allow_self_connections: bool = False
    seed: int = 23

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ValueError("n_neurons must be >= 1")
        for name in ("connection_density", "input_density", "excitation_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if isinstance(self.weight_distribution, str):
            if self.weight_distribution != "uniform":
                raise ValueError(
                    "weight_distribution must be 'uniform' or a fixed integer weight"
                )
        elif not 0 <= self.weight_distribution <= MAX_WEIGHT:
            raise ValueError(f"fixed weight must lie in [0, {MAX_WEIGHT}]")
        if self.tau_leak <= 0:
            raise ValueError("tau_leak must be positive")
        if self.fan_in_limit < 0:
            raise ValueError("fan_in_limit must be nonnegative")


def random_reservoir(spec: ReservoirSpec, **config_kwargs) -> ReservoirConfig:
    """Draw a configuration from the spec, deterministically in spec.seed.

    Fan-in overflow on a destination is resolved by dropping lowest-weight
    connections of the offending polarity first, ties going to the lower
    source index, so the same spec always yields the same matrix.
    """
    n = spec.n_neurons
    rng = np.random.default_rng(spec.seed)
    density = np.full((n, n + 2), spec.connection_density)
    density[:, n:] = spec.input_density
    present = rng.random((n, n + 2)) < density
    excitatory = rng.random((n, n + 2)) < spec.excitation_fraction
    if spec.weight_distribution == "uniform":
        weights = rng.integers(0, MAX_WEIGHT + 1, size=(n, n + 2), dtype=np.uint8)
    else:
        weights = np.full((n, n + 2), spec.weight_distribution, dtype=np.uint8)
    if not spec.allow_self_connections:
        np.fill_diagonal(present[:, :n], False)

    matrix = ConnectivityMatrix(n)
    matrix.kind[present & excitatory] = KIND_EXCITATION
    matrix.kind[present & ~excitatory] = KIND_INHIBITION
    matrix.weight[present] = weights[present]

    limit = spec.fan_in_limit
    for dst in range(n):
        for code in (KIND_EXCITATION, KIND_INHIBITION):
            srcs = np.nonzero(matrix.kind[dst] == code)[0]
            excess = srcs.size - limit
            if excess > 0:
                order = np.lexsort((srcs, matrix.weight[dst, srcs]))
                drop = srcs[order[:excess]]
                matrix.kind[dst, drop] = 0
                matrix.weight[dst, drop] = 0

    config_kwargs.setdefault("fan_in_limit", spec.fan_in_limit)
    config_kwargs.setdefault("seed", spec.seed)
    config_kwargs.setdefault("neuron", NeuronParams(tau_leak=spec.tau_leak))
    return ReservoirConfig(matrix=matrix, **config_kwargs)


def validate(config: ReservoirConfig) -> list[Violation]:
    """Structural checks on a configuration; empty list means clean."""
    out: list[Violation] = []
    mat = config.matrix
    n = mat.n
    if mat.kind.shape != (n, n + 2) or mat.weight.shape != (n, n + 2):
        out.append(Violation("shape", f"matrix arrays must be ({n}, {n + 2})"))
        return out
    bad_kind = ~np.isin(mat.kind, (0, KIND_EXCITATION, KIND_INHIBITION))
    if bad_kind.any():
        dst, src = np.argwhere(bad_kind)[0]
        out.append(Violation("kind", f"invalid polarity code at dst={dst} src={src}"))
    if (mat.weight > MAX_WEIGHT).any():
        dst, src = np.argwhere(mat.weight > MAX_WEIGHT)[0]
        out.append(Violation("weight", f"weight out of range at dst={dst} src={src}"))
    stray = (mat.kind == 0) & (mat.weight != 0)
    if stray.any():
        dst, src = np.argwhere(stray)[0]
        out.append(Violation("weight", f"weight set on empty cell at dst={dst} src={src}"))
    diag = np.diagonal(mat.kind[:, :n])
    if (diag != 0).any():
        i = int(np.nonzero(diag)[0][0])
        out.append(Violation("self", f"neuron {i} connects to itself"))
    for code, name in ((KIND_EXCITATION, "excitation"), (KIND_INHIBITION, "inhibition")):
        fan = (mat.kind == code).sum(axis=1)
        over = np.nonzero(fan > config.fan_in_limit)[0]
        if over.size:
            dst = int(over[0])
            out.append(
                Violation(
                    "fan_in",
                    f"neuron {dst} has {int(fan[dst])} {name} inputs, "
                    f"limit {config.fan_in_limit}",
                )
            )
    return out


# -- binary bitstream ---------------------------------------------------------

def serialize(config: ReservoirConfig) -> bytes:
    """Encode the connection table as a framed, CRC-protected bitstream.

    Only the programmable state (size and connections) is carried; the
    electrical constants travel in the text form.  Records are emitted in
    (source, destination) order.
    """
    mat = config.matrix
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack(">BHI", BITSTREAM_VERSION, mat.n, mat.n_connections))
    srcs, dsts = np.nonzero(mat.kind.T)
    for src, dst in zip(srcs.tolist(), dsts.tolist()):
        flags = int(mat.weight[dst, src]) & 0x0F
        if mat.kind[dst, src] == KIND_INHIBITION:
            flags |= _FLAG_INHIBITION
        buf.write(_RECORD.pack(src, dst, flags))
    body = buf.getvalue()
    return body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def deserialize(data: bytes, **config_kwargs) -> ReservoirConfig:
    """Decode a bitstream back into a configuration.

    Electrical parameters are not part of the stream; pass them as keyword
    overrides (same names as ReservoirConfig) or accept the defaults.
    """
    header_len = len(MAGIC) + 7
    if len(data) < header_len + 4:
        raise BitstreamError(f"truncated stream: {len(data)} bytes")
    if data[:4] != MAGIC:
        raise BitstreamError(f"bad magic {data[:4]!r}", offset=0)
    stored_crc = struct.unpack(">I", data[-4:])[0]
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise BitstreamError(
            f"CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}",
            offset=len(data) - 4,
        )
    version, n, count = struct.unpack(">BHI", data[4:header_len])
    if version != BITSTREAM_VERSION:
        raise BitstreamError(f"unsupported version {version}", offset=4)
    if n < 1:
        raise BitstreamError("neuron count must be >= 1", offset=5)
    expected = header_len + count * _RECORD.size + 4
    if len(data) != expected:
        raise BitstreamError(
            f"length {len(data)} does not match {count} records (expected {expected})"
        )
    matrix = ConnectivityMatrix(n)
    offset = header_len
    for _ in range(count):
        src, dst, flags = _RECORD.unpack_from(data, offset)
        if src >= n + 2:
            raise BitstreamError(f"source index {src} out of range", offset=offset)
        if dst >= n:
            raise BitstreamError(f"destination index {dst} out of range", offset=offset + 2)
        if flags & _FLAG_RESERVED:
            raise BitstreamError(f"reserved flag bits set: {flags:#04x}", offset=offset + 4)
        if matrix.kind[dst, src] != 0:
            raise BitstreamError(f"duplicate record for dst={dst} src={src}", offset=offset)
        matrix.kind[dst, src] = (
            KIND_INHIBITION if flags & _FLAG_INHIBITION else KIND_EXCITATION
        )
        matrix.weight[dst, src] = flags & 0x0F
        offset += _RECORD.size
    return ReservoirConfig(matrix=matrix, **config_kwargs)


# -- text configuration -------------------------------------------------------

_KIND_TOKENS = {"exc": KIND_EXCITATION, "inh": KIND_INHIBITION}


def write_text_config(config: ReservoirConfig, stream) -> None:
    """Write the full configuration, parameters and wiring, as plain text."""
    p = config.neuron
    w = stream.write
    w("# vcoreservoir configuration\n")
    w("[params]\n")
    w(f"n_neurons = {config.n}\n")
    w(f"v_cc = {p.v_cc!r}\n")
    w(f"v_rest = {p.v_rest!r}\n")
    w(f"tau_leak = {p.tau_leak!r}\n")
    w(f"eta_v_per_s = {p.eta_v_per_s!r}\n")
    for name, m in (("vco_pos", p.vco_pos), ("vco_neg", p.vco_neg)):
        w(
            f"{name} = {m.slope_hz_per_v!r} {m.intercept_hz!r} "
            f"{m.flat_threshold!r} {m.flat_side}\n"
        )
    w(f"delay_unit = {config.delay_unit!r}\n")
    w(f"input_max_freq = {config.input_max_freq!r}\n")
    w(f"microstep = {config.microstep!r}\n")
    w(f"seed = {config.seed}\n")
    w(f"noise_sigma = {config.noise_sigma!r}\n")
    w(f"fan_in_limit = {config.fan_in_limit}\n")
    w("\n[connections]\n")
    w("# dst src kind weight\n")
    for dst, src, kind, weight in config.matrix.connections():
        w(f"{dst} {src} {kind[:3]} {weight}\n")


def read_text_config(stream) -> ReservoirConfig:
    params: dict[str, str] = {}
    connections: list[tuple[int, int, int, int]] = []
    section = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in ("params", "connections"):
                raise ConfigTextError(f"unknown section {section!r}", lineno)
            continue
        if section == "params":
            if "=" not in line:
                raise ConfigTextError("expected 'name = value'", lineno)
            name, value = (part.strip() for part in line.split("=", 1))
            params[name] = value
        elif section == "connections":
            parts = line.split()
            if len(parts) != 4:
                raise ConfigTextError("expected 'dst src kind weight'", lineno)
            try:
                dst, src, weight = int(parts[0]), int(parts[1]), int(parts[3])
            except ValueError as exc:
                raise ConfigTextError(str(exc), lineno) from None
            kind = _KIND_TOKENS.get(parts[2])
            if kind is None:
                raise ConfigTextError(f"unknown kind {parts[2]!r}", lineno)
            connections.append((dst, src, kind, weight))
        else:
            raise ConfigTextError("content before any section header", lineno)

    def need(name: str) -> str:
        if name not in params:
            raise ConfigTextError(f"missing parameter {name!r}")
        return params[name]

    def vco(name: str) -> LinearVcoModel:
        parts = need(name).split()
        if len(parts) != 4:
            raise ConfigTextError(f"{name} expects 'slope intercept threshold side'")
        return LinearVcoModel(float(parts[0]), float(parts[1]), float(parts[2]), parts[3])

    try:
        n = int(need("n_neurons"))
        neuron = NeuronParams(
            v_cc=float(need("v_cc")),
            v_rest=float(need("v_rest")),
            tau_leak=float(need("tau_leak")),
            eta_v_per_s=float(need("eta_v_per_s")),
            vco_pos=vco("vco_pos"),
            vco_neg=vco("vco_neg"),
        )
        matrix = ConnectivityMatrix(n)
        for dst, src, kind, weight in connections:
            if not 0 <= dst < n or not 0 <= src < n + 2:
                raise ConfigTextError(f"connection index out of range: dst={dst} src={src}")
            if not 0 <= weight <= MAX_WEIGHT:
                raise ConfigTextError(f"weight out of range: {weight}")
            matrix.kind[dst, src] = kind
            matrix.weight[dst, src] = weight
        return ReservoirConfig(
            matrix=matrix,
            neuron=neuron,
            delay_unit=float(need("delay_unit")),
            input_max_freq=float(need("input_max_freq")),
            microstep=float(need("microstep")),
            seed=int(need("seed")),
            noise_sigma=float(params.get("noise_sigma", "0.0")),
            fan_in_limit=int(params.get("fan_in_limit", str(DEFAULT_FAN_IN_LIMIT))),
        )
    except ConfigTextError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigTextError(str(exc)) from None
