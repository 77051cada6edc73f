"""Command-line front end: generate configurations and run benchmarks.

Exit codes: 0 success, 2 usage errors (bad flags), 3 configuration errors
(unreadable, unparseable, or invalid config files), 4 runtime failures.
Durations accept s/ms/us/ns suffixes and frequencies Hz/kHz/MHz, so the
mixed units used across tasks cannot be silently confused.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import (
    InputSequenceSpec,
    gen_input,
    mc_benchmark,
    mc_input_spec,
    narma10_benchmark,
    narma10_input_spec,
    nlmc_benchmark,
)
from .config import (
    BitstreamError,
    ConfigTextError,
    ReservoirSpec,
    deserialize,
    random_reservoir,
    read_text_config,
    serialize,
    validate,
    write_text_config,
)
from .fabric import ReservoirConfig
from .force import MODE_FIXED, MODE_FLOAT, force_run
from .openloop import record
from .results import (
    RunManifest,
    config_hash,
    emit_capacity_report,
    emit_force,
    emit_narma10,
    write_recording_csv,
)

EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

_DURATION_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_FREQUENCY_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}


def parse_duration(text: str) -> float:
    """'120us', '2 ms', '0.05' (seconds) -> seconds."""
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse duration {text!r}")
    unit = m.group(2).lower()
    if unit and unit not in _DURATION_UNITS:
        raise argparse.ArgumentTypeError(f"unknown duration unit {m.group(2)!r}")
    try:
        value = float(m.group(1))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse duration {text!r}") from None
    return value * _DURATION_UNITS.get(unit, 1.0)


def parse_frequency(text: str) -> float:
    """'220', '220Hz', '1 MHz' -> Hz."""
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse frequency {text!r}")
    unit = m.group(2).lower()
    if unit and unit not in _FREQUENCY_UNITS:
        raise argparse.ArgumentTypeError(f"unknown frequency unit {m.group(2)!r}")
    try:
        value = float(m.group(1))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse frequency {text!r}") from None
    return value * _FREQUENCY_UNITS.get(unit, 1.0)


def _parse_sweep(text: str) -> range:
    m = re.fullmatch(r"seed=(\d+)\.\.(\d+)", text.strip())
    if not m:
        raise argparse.ArgumentTypeError("sweep syntax is seed=<first>..<last>")
    first, last = int(m.group(1)), int(m.group(2))
    if last < first:
        raise argparse.ArgumentTypeError("sweep range is empty")
    return range(first, last + 1)


def load_config(path: Path) -> ReservoirConfig:
    """Read either a binary .rcfg (wiring only) or a text config (full)."""
    data = path.read_bytes()
    if data[:4] == b"RCFG":
        return deserialize(data)
    return read_text_config(data.decode().splitlines())


def _default_out_dir(task: str) -> Path:
    base = os.environ.get("VCORESERVOIR_OUT", "results")
    return Path(base) / task


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcoreservoir",
        description="Simulate and benchmark a pulse-coupled VCO reservoir.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random reservoir configuration")
    gen.add_argument("--n", type=int, default=100, help="neuron count")
    gen.add_argument("--density", type=float, default=0.05,
                     help="neuron-to-neuron connection probability")
    gen.add_argument("--input-density", type=float, default=0.25,
                     help="input-channel connection probability")
    gen.add_argument("--excitation-fraction", type=float, default=0.5)
    gen.add_argument("--fixed-weight", type=int, default=None,
                     help="use this weight everywhere instead of uniform 0..15")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, required=True,
                     help="output base path; writes <out>.rcfg and <out>.cfg")

    run = sub.add_parser("run", help="run a benchmark against a configuration")
    run.add_argument("task", choices=("force", "mc", "nlmc", "narma10"))
    run.add_argument("--config", type=Path, required=True,
                     help="configuration file (.rcfg or text)")
    run.add_argument("--out-dir", type=Path, default=None)
    run.add_argument("--seed", type=int, default=1, help="input-sequence seed")
    run.add_argument("--ts", type=parse_duration, default=None,
                     help="sample period (default 120us; force: 50us)")
    run.add_argument("--samples", type=int, default=None,
                     help="sequence length (mc: 200, nlmc: 3000, narma10: 1000)")
    run.add_argument("--k-max", type=int, default=30, help="mc: largest delay")
    run.add_argument("--d-max", type=int, default=15, help="nlmc: largest degree")
    run.add_argument("--family-limit", type=int, default=2000,
                     help="nlmc: degree strings evaluated per degree")
    run.add_argument("--freq", type=parse_frequency, default=220.0,
                     help="force: teaching sine frequency")
    run.add_argument("--teach-cycles", type=int, default=15)
    run.add_argument("--test-cycles", type=int, default=5)
    run.add_argument("--alpha", type=float, default=1.0)
    run.add_argument("--amplitude", type=float, default=1.0)
    run.add_argument("--fixed-point", action="store_true",
                     help="force: run the RLS filter in fixed-point mode")
    run.add_argument("--save-recording", action="store_true",
                     help="also write the raw recording CSV")
    run.add_argument("--sweep", type=_parse_sweep, default=None,
                     help="repeat over input seeds, e.g. seed=0..9")
    return parser


def cmd_gen(args) -> int:
    spec = ReservoirSpec(
        n_neurons=args.n,
        connection_density=args.density,
        input_density=args.input_density,
        excitation_fraction=args.excitation_fraction,
        weight_distribution=(
            "uniform" if args.fixed_weight is None else args.fixed_weight
        ),
        seed=args.seed,
    )
    config = random_reservoir(spec)
    out: Path = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    out.with_suffix(".rcfg").write_bytes(serialize(config))
    with out.with_suffix(".cfg").open("w") as fh:
        write_text_config(config, fh)
    RunManifest(
        command="gen",
        config_sha256=config_hash(config),
        parameters={
            "n": args.n,
            "density": args.density,
            "input_density": args.input_density,
            "excitation_fraction": args.excitation_fraction,
            "fixed_weight": args.fixed_weight,
        },
        seeds={"config": args.seed},
    ).write(out.with_suffix(".manifest.json"))
    print(f"wrote {out.with_suffix('.rcfg')} and {out.with_suffix('.cfg')}")
    return 0


def _run_task(config: ReservoirConfig, args, seed: int, out_dir: Path) -> dict:
    """Execute one benchmark run and emit its files; returns manifest params."""
    task = args.task
    ts = args.ts if args.ts is not None else (50e-6 if task == "force" else 120e-6)
    params: dict = {"task": task, "sample_period_s": ts}
    if task == "force":
        result = force_run(
            config,
            target_freq=args.freq,
            sample_period=ts,
            teach_cycles=args.teach_cycles,
            test_cycles=args.test_cycles,
            alpha=args.alpha,
            amplitude=args.amplitude,
            mode=MODE_FIXED if args.fixed_point else MODE_FLOAT,
        )
        emit_force(result, out_dir)
        params.update(
            freq_hz=args.freq, teach_cycles=args.teach_cycles,
            test_cycles=args.test_cycles, alpha=args.alpha,
            amplitude=args.amplitude, mode=result.mode,
        )
        return params

    if task == "mc":
        samples = args.samples or 200
        spec = mc_input_spec(length=samples, seed=seed)
    elif task == "nlmc":
        samples = args.samples or 3000
        spec = mc_input_spec(length=samples, seed=seed)
    else:
        samples = args.samples or 1000
        spec = narma10_input_spec(length=samples, seed=seed)
    params.update(samples=samples, input_spec=vars(spec))

    if task == "narma10":
        result = narma10_benchmark(config, spec, sample_period=ts)
        emit_narma10(result, out_dir)
        if args.save_recording:
            write_recording_csv(
                out_dir / "recording.csv",
                record(config, result.inputs, ts),
            )
        return params

    recording = record(config, gen_input(spec), ts)
    if args.save_recording:
        write_recording_csv(out_dir / "recording.csv", recording)
    if task == "mc":
        report = mc_benchmark(config, spec, k_max=args.k_max,
                              sample_period=ts, recording=recording)
        params.update(k_max=args.k_max)
        emit_capacity_report(report, out_dir, "mc")
    else:
        report = nlmc_benchmark(config, spec, d_max=args.d_max,
                                family_limit=args.family_limit,
                                sample_period=ts, recording=recording)
        params.update(d_max=args.d_max, family_limit=args.family_limit)
        emit_capacity_report(report, out_dir, "nlmc")
    return params


def _run_single(config_path: str, args, seed: int, out_dir: Path) -> int:
    config = load_config(Path(config_path))
    started = time.perf_counter()
    params = _run_task(config, args, seed, out_dir)
    RunManifest(
        command=f"run {args.task}",
        config_sha256=config_hash(config),
        parameters=params,
        seeds={"config": config.seed, "input": seed},
        duration_s=time.perf_counter() - started,
    ).write(out_dir / "manifest.json")
    return 0


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except (BitstreamError, ConfigTextError, UnicodeDecodeError, ValueError) as exc:
        print(f"error: cannot parse config {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    violations = validate(config)
    if violations:
        for v in violations:
            print(f"error: invalid config: [{v.code}] {v.message}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out_dir or _default_out_dir(args.task)
    if args.sweep is None:
        _run_single(str(args.config), args, args.seed, out_dir)
        print(f"results in {out_dir}")
        return 0
    seeds = list(args.sweep)
    workers = min(len(seeds), os.cpu_count() or 1)
    if workers <= 1:
        for s in seeds:
            _run_single(str(args.config), args, s, out_dir / f"seed_{s}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_single, str(args.config), args, s,
                            out_dir / f"seed_{s}")
                for s in seeds
            ]
            for f in futures:
                f.result()
    print(f"swept {len(seeds)} seeds into {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_run(args)
    except (BitstreamError, ConfigTextError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
