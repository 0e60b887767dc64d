"""Command-line front end: parse arguments, run an ensemble, write files.

Output directory layout (one run):
    manifest.json             run metadata, resolved config, per-sample seeds
    counts.csv                t, mean/SE of both species counts
    msd.csv                   t, mean/SE of the mean squared displacement
    hist_alpha_t{0..3}.csv    normalized Alpha histograms at the 4 snapshots
    hist_beta_t{0..3}.csv     same for Beta
    field_t{0..3}.csv         nodal concentration at the 4 snapshots

All floating-point values are serialized with 17 significant digits, enough
to round-trip a double exactly, so identical runs produce byte-identical
CSV files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
import types
import typing
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .engine import EXPERIMENTS, EnsembleResult, SimConfig, run_ensemble
from .motion import SimulationError

EXIT_RUN_FAILED = 1
EXIT_USAGE = 2            # argparse: unknown flag, missing required flag
EXIT_MISSING_CONFIG = 3   # --experiment custom without --config
EXIT_BAD_CONFIG_FILE = 4  # unreadable or malformed config file
EXIT_BAD_PARAMETER = 5    # unknown key, bad type, or invalid value


class ConfigFileError(Exception):
    """The config file cannot be read or is not `key = value` lines."""


class ParameterError(Exception):
    """A parameter name, type, or value is invalid."""


_TRUE_WORDS = ("true", "1", "yes", "on")
_FALSE_WORDS = ("false", "0", "no", "off")


def _coerce(key: str, text: str, hint) -> object:
    """Turn the raw string of one config entry into the field's type."""
    optional = False
    if typing.get_origin(hint) in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        optional = len(args) < len(typing.get_args(hint))
        hint = args[0]
    if optional and text.lower() in ("none", "null", ""):
        return None
    try:
        if hint is bool:
            word = text.lower()
            if word in _TRUE_WORDS:
                return True
            if word in _FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ParameterError(f"config key {key!r}: {exc}") from exc


def parse_config_file(path: str) -> dict:
    """Read a `key = value` file into a SimConfig override dict.

    Blank lines are skipped and `#` starts a comment anywhere on a line.
    Keys must be SimConfig field names exactly.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigFileError(f"cannot read config file {path}: {exc}") from exc
    hints = typing.get_type_hints(SimConfig)
    valid = {f.name for f in dataclasses.fields(SimConfig)}
    overrides: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigFileError(
                f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        value = value.strip()
        if key not in valid:
            raise ParameterError(
                f"{path}:{lineno}: unknown config key {key!r}")
        overrides[key] = _coerce(key, value, hints[key])
    return overrides


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_series(path: Path, header: str, columns) -> None:
    rows = zip(*columns)
    lines = [header]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_snapshot(path: Path, t: float, matrix, lo: float, hi: float) -> None:
    lines = [f"# t={_fmt(t)} bins={matrix.shape[0]} domain={_fmt(lo)},{_fmt(hi)}"]
    lines += [",".join(_fmt(v) for v in row) for row in matrix]
    path.write_text("\n".join(lines) + "\n")


def write_outputs(result: EnsembleResult, manifest: dict, out_dir) -> list[str]:
    """Write every CSV plus manifest.json; returns the file inventory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = manifest["config"]
    lo = -config["domain_size"] / 2.0
    hi = config["domain_size"] / 2.0
    files = ["counts.csv", "msd.csv"]

    _write_series(out / "counts.csv",
                  "t,n_alpha_mean,n_alpha_se,n_beta_mean,n_beta_se",
                  (result.times,
                   result.counts_mean[:, 0], result.counts_se[:, 0],
                   result.counts_mean[:, 1], result.counts_se[:, 1]))
    _write_series(out / "msd.csv", "t,msd_mean,msd_se",
                  (result.times, result.msd_mean, result.msd_se))

    n_c = int(round(result.field_mean.shape[1] ** 0.5))
    for k, t in enumerate(result.snapshot_times):
        for stem, mat in ((f"hist_alpha_t{k}", result.hist_alpha_mean[k]),
                          (f"hist_beta_t{k}", result.hist_beta_mean[k]),
                          (f"field_t{k}", result.field_mean[k].reshape(n_c, n_c))):
            _write_snapshot(out / f"{stem}.csv", t, mat, lo, hi)
            files.append(f"{stem}.csv")

    manifest = dict(manifest, outputs=sorted(files))
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sorted(files) + ["manifest.json"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemosim",
        description="Hybrid particle/continuum chemotaxis simulations")
    parser.add_argument("--config", metavar="PATH",
                        help="key = value parameter file (see README)")
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        help="named preset; overrides the config file's "
                             "experiment key; custom requires --config")
    parser.add_argument("--samples", type=int, metavar="S",
                        help="number of realisations to average")
    parser.add_argument("--seed-base", type=int, metavar="INT",
                        dest="seed_base", help="offset added to every seed")
    parser.add_argument("--output-dir", required=True, metavar="DIR",
                        dest="output_dir", help="directory for CSV outputs")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="worker processes for the ensemble")
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    try:
        overrides = (parse_config_file(args.config)
                     if args.config is not None else {})
        # the preset comes from --experiment when given, else from the config
        # file's experiment key; bare custom has no parameters to run with
        name = args.experiment or overrides.get("experiment", "custom")
        if args.config is None and name == "custom":
            print("chemosim: error: --experiment custom requires --config",
                  file=sys.stderr)
            return EXIT_MISSING_CONFIG
        overrides["experiment"] = name
        for key in ("samples", "seed_base", "threads"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        config = SimConfig.preset(name, **overrides)
    except ConfigFileError as exc:
        print(f"chemosim: error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG_FILE
    except (ParameterError, ValueError, TypeError) as exc:
        print(f"chemosim: error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMETER

    start = time.perf_counter()
    try:
        result = run_ensemble(config)
    except (SimulationError, FloatingPointError) as exc:
        print(f"chemosim: error: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    manifest = {
        "version": __version__,
        "experiment": config.experiment,
        "samples": config.samples,
        "seeds": result.seeds,
        "config": config.as_dict(),
        "wall_clock_seconds": time.perf_counter() - start,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    write_outputs(result, manifest, args.output_dir)
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
