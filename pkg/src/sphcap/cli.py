"""Command line runner: ``sphcap <command> [options]``.

Every command writes a CSV (RFC 4180, header row first) and a sidecar
``<output>.manifest.json`` holding the full config, the seed and library
versions, enough to re-run the experiment. ``--plot`` additionally renders
a PNG next to the CSV (needs matplotlib).

Exit codes: 0 success, 2 configuration error, 3 parameter outside the
regime of a formula.
"""
import argparse
import csv
import json
import math
import os
import platform
import sys
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .capmass import RegimeError

COMMANDS = ("spectrum", "variance", "tails", "discrepancy", "figure1", "capdrop")
OUTPUT_DIR_ENV = "SPHCAP_OUTPUT_DIR"
EXIT_CONFIG = 2
EXIT_REGIME = 3


class ConfigError(ValueError):
    def __init__(self, fields_, message):
        self.fields = tuple(fields_)
        super().__init__(f"{', '.join(self.fields)}: {message}")


@dataclass
class ExperimentConfig:
    command: str
    m: int = None
    r: float = None
    rm: float = None
    epsilon: tuple = (0.02,)
    replicates: int = 200
    seed: int = 0
    output: str = None
    format: str = "csv"
    threads: int = 1
    delta: float = None
    samples: int = 1_000_000
    plot: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(["command"], f"unknown command {self.command!r}")
        if self.m is None or int(self.m) != self.m or self.m < 1:
            raise ConfigError(["m"], "degree must be a positive integer")
        if (self.r is None) == (self.rm is None):
            raise ConfigError(["r", "rm"], "give exactly one of r and rm")
        radius = self.radius
        if not 0.0 < radius <= math.pi:
            raise ConfigError(["r" if self.r is not None else "rm"], f"cap radius {radius:g} is outside (0, pi]")
        if not self.epsilon or any(not e > 0 for e in self.epsilon):
            raise ConfigError(["epsilon"], "all epsilon values must be positive")
        for name in ("replicates", "threads", "samples"):
            if getattr(self, name) < 1:
                raise ConfigError([name], "must be positive")
        if self.command == "discrepancy" and self.replicates < 50:
            raise ConfigError(["replicates"], "discrepancy needs at least 50 replicates")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(["seed"], "must be a 64-bit unsigned integer")
        if self.format != "csv":
            raise ConfigError(["format"], "only csv is supported")
        if self.delta is not None and not 0.0 < self.delta <= math.pi:
            raise ConfigError(["delta"], "must lie in (0, pi]")
        return self

    @property
    def radius(self):
        return self.r if self.r is not None else self.rm / self.m

    @property
    def scale(self):
        return self.rm if self.rm is not None else self.r * self.m

    def to_text(self):
        """key = value lines; :meth:`from_text` inverts this exactly."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "epsilon":
                v = ",".join(repr(float(e)) for e in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        return cls(**parse_config_text(text))


_TYPES = {"m": int, "r": float, "rm": float, "replicates": int, "seed": int, "threads": int,
          "delta": float, "samples": int, "command": str, "output": str, "format": str}


def _parse_bool(s):
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config_text(text):
    """Parse ``key = value`` lines (``#`` comments, blank lines ignored)."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(["config"], f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            if key == "epsilon":
                out[key] = tuple(float(v) for v in val.split(","))
            elif key == "plot":
                out[key] = _parse_bool(val)
            elif key in _TYPES:
                out[key] = _TYPES[key](val)
            else:
                raise ConfigError([key], f"unknown config key on line {n}")
        except ValueError as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError([key], f"bad value {val!r}") from None
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="sphcap", description="Cap-mass experiments for random spherical harmonics.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--m", type=int, help="harmonic degree")
    p.add_argument("--r", type=float, help="cap radius (exclusive with --rm)")
    p.add_argument("--rm", type=float, help="scale r*m (exclusive with --r)")
    p.add_argument("--epsilon", type=float, nargs="+", help="deviation thresholds")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help=f"CSV path (default: ${OUTPUT_DIR_ENV} or cwd, <command>.csv)")
    p.add_argument("--format", choices=["csv"])
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    p.add_argument("--delta", type=float, help="net covering radius for discrepancy (default 1/m)")
    p.add_argument("--samples", type=int, help="sample_x draws for tails")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--plot", action="store_true", default=None, help="also render a PNG figure")
    return p


def config_from_args(argv=None):
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as err:
            raise ConfigError(["config"], str(err)) from None
    for key, val in vars(args).items():
        if key == "config" or val is None:
            continue
        values[key] = tuple(val) if key == "epsilon" else val
    values["command"] = args.command
    values.setdefault("threads", os.cpu_count() or 1)
    cfg = ExperimentConfig(**values)
    return cfg.validate()


def output_path(cfg):
    if cfg.output:
        return Path(cfg.output)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"{cfg.command}.csv"


def _cell(v):
    # repr round-trips doubles exactly
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _versions():
    import scipy
    return {"sphcap": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def write_manifest(path, cfg, files):
    manifest = {
        "config": asdict(cfg),
        "config_text": cfg.to_text(),
        "seed": cfg.seed,
        "versions": _versions(),
        "outputs": [str(f) for f in files],
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    manifest["config"]["epsilon"] = list(cfg.epsilon)
    Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _sibling(path, suffix):
    return path.with_name(path.stem + suffix)


def run(cfg):
    """Execute one validated config; returns the list of files written."""
    out = output_path(cfg)
    m, r = cfg.m, cfg.radius
    files = [out]
    if cfg.command == "spectrum":
        header, rows = ex.spectrum_table(m, r)
    elif cfg.command == "variance":
        header, rows = ex.variance_table(m, r)
    elif cfg.command == "tails":
        header, rows = ex.tails_table(m, r, cfg.epsilon, cfg.samples, cfg.seed)
    elif cfg.command == "figure1":
        header, rows = ex.figure1_table(m, cfg.scale)
    elif cfg.command == "capdrop":
        header, rows, summary = ex.capdrop_table(m, r, cfg.replicates, cfg.seed, cfg.threads)
        files.append(_sibling(out, ".summary.csv"))
        write_csv(files[-1], *summary)
    else:
        header, rows, summary, _ = ex.discrepancy_tables(m, r, cfg.epsilon, cfg.replicates, cfg.seed,
                                                                 cfg.delta, cfg.threads)
        files.append(_sibling(out, ".summary.csv"))
        write_csv(files[-1], *summary)
    write_csv(out, header, rows)
    if cfg.plot:
        from . import plotting

        png = _sibling(out, ".png")
        plotting.render(cfg, header, rows, png)
        files.append(png)
    write_manifest(out, cfg, files)
    return files


def main(argv=None):
    try:
        cfg = config_from_args(argv)
        files = run(cfg)
    except ConfigError as err:
        print(f"sphcap: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as err:
        print(f"sphcap: regime error: {err}", file=sys.stderr)
        return EXIT_REGIME
    except ImportError as err:
        print(f"sphcap: {err} (install the 'plot' extra for --plot)", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
