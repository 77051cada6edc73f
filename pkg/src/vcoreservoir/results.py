"""Result emission: deterministic CSV/JSON files plus the run manifest.

Every float is written with repr (shortest roundtrip form) and every JSON
object with sorted keys, so identical runs produce identical bytes; the
manifest carries enough to reproduce a run exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .benchmarks import CapacityReport, Narma10Result
from .config import serialize
from .fabric import ReservoirConfig
from .force import ForceResult
from .openloop import Recording


def config_hash(config: ReservoirConfig) -> str:
    """Hash of the wiring bitstream; parameters are manifested separately."""
    return hashlib.sha256(serialize(config)).hexdigest()


def _jsonable(value):
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return _jsonable(value.item())
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_json(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class RunManifest:
    """Everything needed to rerun a result set bit for bit."""

    command: str
    config_sha256: str
    parameters: dict
    seeds: dict
    version: str = __version__
    duration_s: float | None = None

    def write(self, path: Path) -> None:
        write_json(
            Path(path),
            {
                "command": self.command,
                "config_sha256": self.config_sha256,
                "parameters": self.parameters,
                "seeds": self.seeds,
                "version": self.version,
                "duration_s": self.duration_s,
            },
        )


def _split_labels(ranges: tuple[range, range, range], n: int) -> list[str]:
    labels = ["ignore"] * n
    for name, rng in zip(("ignore", "train", "test"), ranges):
        for i in rng:
            labels[i] = name
    return labels


def write_recording_csv(path: Path, recording: Recording) -> None:
    """Inputs plus the full state matrix, one sample per row."""
    n = recording.states.shape[1]
    header = ["sample_index", "u"] + [f"v{i}" for i in range(n)]
    rows = (
        [t, recording.inputs[t], *recording.states[t]]
        for t in range(recording.inputs.size)
    )
    write_csv(path, header, rows)


def write_weights_json(path: Path, weights: np.ndarray, extra: dict | None = None) -> None:
    payload = {"weights": weights}
    if extra:
        payload.update(extra)
    write_json(path, payload)


def write_frames_csv(path: Path, frames) -> None:
    """Sampled voltages then both raw counters for each neuron, per sample."""
    frames = list(frames)
    if not frames:
        write_csv(path, ["sample_index"], [])
        return
    n = frames[0].voltages.size
    header = (
        ["sample_index"]
        + [f"v{i}" for i in range(n)]
        + [f"cpos{i}" for i in range(n)]
        + [f"cneg{i}" for i in range(n)]
    )
    rows = (
        [f.sample_index, *f.voltages, *f.counts_pos, *f.counts_neg] for f in frames
    )
    write_csv(path, header, rows)


def emit_capacity_report(report: CapacityReport, out_dir: Path, prefix: str) -> None:
    """Series CSV, per-key trace CSVs, and a JSON summary for one report."""
    out_dir = Path(out_dir)
    summary: dict = {
        "sample_period": report.sample_period,
        "degenerate": report.degenerate,
        "input_spec": vars(report.input_spec) if report.input_spec else None,
    }
    if report.mc_k is not None:
        summary["mc_k"] = {str(k): v for k, v in report.mc_k.items()}
        summary["total_mc"] = report.total_mc
        write_csv(
            out_dir / f"{prefix}_series.csv",
            ["k", "mc_k"],
            ([k, v] for k, v in sorted(report.mc_k.items())),
        )
    if report.mc_d is not None:
        summary["mc_d"] = {str(d): v for d, v in report.mc_d.items()}
        summary["argmax_strings"] = {
            str(d): str(s) for d, s in (report.argmax_strings or {}).items()
        }
        summary["family"] = {
            str(d): vars(s) for d, s in (report.family_stats or {}).items()
        }
        write_csv(
            out_dir / f"{prefix}_series.csv",
            ["d", "mc_d", "argmax"],
            ([d, v, str(report.argmax_strings[d])] for d, v in sorted(report.mc_d.items())),
        )
    labels = _split_labels(report.split_ranges, report.inputs.size)
    for key, (z, z_p) in report.traces.items():
        write_csv(
            out_dir / f"{prefix}_trace_{key}.csv",
            ["n", "u", "z", "z_p", "split"],
            (
                [t, report.inputs[t], z[t], z_p[t], labels[t]]
                for t in range(report.inputs.size)
            ),
        )
    write_json(out_dir / f"{prefix}_summary.json", summary)


def emit_narma10(result: Narma10Result, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    labels = _split_labels(result.split_ranges, result.inputs.size)
    write_csv(
        out_dir / "narma10_trace.csv",
        ["n", "u", "z", "z_p", "split"],
        (
            [t, result.inputs[t], result.targets[t], result.predictions[t], labels[t]]
            for t in range(result.inputs.size)
        ),
    )
    write_json(
        out_dir / "narma10_summary.json",
        {
            "test": result.test_metrics._asdict(),
            "train": result.train_metrics._asdict(),
            "regenerations": result.regenerations,
            "input_seed_used": result.input_seed_used,
            "sample_period": result.sample_period,
            "input_spec": vars(result.input_spec),
        },
    )
    write_weights_json(out_dir / "narma10_weights.json", result.weights)


def emit_force(result: ForceResult, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    phases = result.phase_labels
    write_csv(
        out_dir / "force_trace.csv",
        ["n", "z", "z_p", "epsilon", "phase"],
        (
            [n, result.targets[n], result.outputs[n], result.errors[n], phases[n]]
            for n in range(result.targets.size)
        ),
    )
    write_json(
        out_dir / "force_summary.json",
        {
            "frequency_hz": result.target_freq,
            "correlation": result.correlation,
            "degenerate": result.degenerate,
            "alpha": result.alpha,
            "mode": result.mode,
            "n_teach": result.n_teach,
            "n_test": result.n_test,
            "sample_period": result.sample_period,
            "clamp_events": result.clamp_events,
            "operation_report": result.operation_report,
        },
    )
    write_weights_json(out_dir / "force_weights.json", result.weights)
