# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
"""
Run configuration for the hslab command line.

Settings are resolved in layers, later layers winning:

  1. DEFAULT_INI below
  2. HSLAB_OUTPUT_DIR (output directory only)
  3. the global file "hslab.ini" in the working directory
  4. the local override "hslab.config" in the working directory
  5. --config FILE
  6. command-line flags

Every key of a file must be known, and every value converts with the type
of its default; failures raise ConfigError naming the key. The resolved
parameters are validated by building the owning module's objects before
anything is computed.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
from dataclasses import dataclass, field
from typing import Callable

from hslab import __version__
from hslab.bubbles import BubbleKind, BubbleProfile
from hslab.constants import ProblemParams
from hslab.errors import ConfigError, ParameterError
from hslab.manifold import PotentialField, SphereModel
from hslab.quadrature import IntegralSpec
from hslab.solver import SolverConfig
from hslab.workers import default_workers

__all__ = [
    "DEFAULT_INI",
    "GLOBAL_CONFIG_FILE",
    "LOCAL_CONFIG_FILE",
    "OUTPUT_DIR_ENV",
    "SUBCOMMANDS",
    "RunConfig",
    "build_parser",
    "default_settings",
    "load_file",
    "merge_configs",
    "parse_config",
    "parse_glue_specs",
    "resolve_settings",
]

logger = logging.getLogger(__name__)

GLOBAL_CONFIG_FILE = "hslab.ini"
LOCAL_CONFIG_FILE = "hslab.config"
OUTPUT_DIR_ENV = "HSLAB_OUTPUT_DIR"

DEFAULT_INI = """[output]
# Directory the reports are written to; HSLAB_OUTPUT_DIR overrides this default.
output_dir = hslab-out
# csv, json or both
format = both
# worker processes; auto = half the CPUs
workers = 1

[constants]
n = 5
lambda = 0.0

[integrals]
alpha = 3.0
beta = 5.0
a = 1.0
# Additional random (alpha, beta, a) triples checked against the recurrences.
samples = 0
seed = 2025
rel_tol = 1e-10

[bubble]
n = 5
lambda = 0.0
mu = 1.0
kind = singular
r_min = 1e-3
r_max = 1e3
points = 121
rel_tol = 1e-10

[expansion]
n = 5
sphere_radius = 1.0
h0 = 1.125
h2 = 0.0
delta_cap = inf
# auto = pi R / 8
delta = auto
eps_count = 7
fit_points = 4
rel_tol = 1e-10

[solve]
n = 6
sphere_radius = 1.0
h0 = 1.0
h2 = -4.0
delta_cap = 1.0
delta = auto
nodes = 4096
# auto = min(1e-6, eps_min / 100), in units of the sphere radius
first_node = auto
seeds = 5
max_iter = 2000
newton_iter = 60
# exit status 1 when the best residual or the multistart spread exceeds these
residual_tol = 1e-6
agreement_tol = 1e-6

[decompose]
n = 6
sphere_radius = 1.0
h0 = 1.0
h2 = 0.0
delta_cap = inf
# kind:cutoff_radius[:center[:scale_power]], comma separated
bubbles = singular:0.5
# none, solve (minimiser of this potential on the same grid) or a solution.csv path
background = none
scale_first = 5
scale_last = 12
nodes = 4096
first_node = auto
n_angles = 48
extract = true
# auto = n beta* / 4
gamma = auto

[sweep]
n = 3,4,5,6
lambda_points = 50
ratio_max = 0.98
measure_quotient = true
rel_tol = 1e-10
"""

SUBCOMMANDS = ("constants", "integrals", "bubble", "expansion", "solve", "decompose", "sweep")
FORMATS = ("csv", "json", "both")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


# ----- Converters -----

def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() == "auto" else float(text)


def _workers(text: str) -> int:
    return default_workers() if text.strip().lower() == "auto" else int(text)


def _int_list(text: str) -> tuple[int, ...]:
    items = tuple(int(part) for part in text.split(",") if part.strip())
    if not items:
        raise ValueError("empty list")
    return items


def _background(text: str) -> str:
    value = text.strip()
    if value.lower() in ("none", "solve"):
        return value.lower()
    if not os.path.isfile(value):
        raise ValueError(f"expected none, solve or an existing solution file, got {value!r}")
    return value


def _choice(*allowed: str) -> Callable[[str], str]:
    def convert(text: str) -> str:
        value = text.strip().lower()
        if value not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return value
    return convert


def parse_glue_specs(text: str) -> tuple[dict, ...]:
    """'singular:0.5,standard:0.2:1.5' -> glue spec keyword sets."""
    specs = []
    for entry in text.split(","):
        entry = entry.strip()
        if not entry:
            continue
        parts = entry.split(":")
        if not 2 <= len(parts) <= 4:
            raise ValueError(f"bad bubble entry {entry!r}")
        spec = {"kind": BubbleKind(parts[0].strip().lower()).value,
                "cutoff_radius": float(parts[1])}
        if len(parts) > 2:
            spec["center"] = float(parts[2])
        if len(parts) > 3:
            spec["scale_power"] = float(parts[3])
        specs.append(spec)
    return tuple(specs)


_OUTPUT = {"output_dir": str, "format": _choice(*FORMATS), "workers": _workers}
_MODEL = {"n": int, "sphere_radius": float, "h0": float, "h2": float, "delta_cap": float}

SCHEMA: dict[str, dict[str, Callable[[str], object]]] = {
    "output": _OUTPUT,
    "constants": {"n": int, "lambda": float},
    "integrals": {"alpha": float, "beta": float, "a": float, "samples": int, "seed": int,
                  "rel_tol": float},
    "bubble": {"n": int, "lambda": float, "mu": float,
               "kind": _choice(*(k.value for k in BubbleKind)),
               "r_min": float, "r_max": float, "points": int, "rel_tol": float},
    "expansion": {**_MODEL, "delta": _optional_float, "eps_count": int, "fit_points": int,
                  "rel_tol": float},
    "solve": {**_MODEL, "delta": _optional_float, "nodes": int, "first_node": _optional_float,
              "seeds": int, "max_iter": int, "newton_iter": int,
              "residual_tol": float, "agreement_tol": float},
    "decompose": {**_MODEL, "bubbles": parse_glue_specs, "background": _background,
                  "scale_first": int, "scale_last": int, "nodes": int,
                  "first_node": _optional_float, "n_angles": int, "extract": _bool,
                  "gamma": _optional_float},
    "sweep": {"n": _int_list, "lambda_points": int, "ratio_max": float,
              "measure_quotient": _bool, "rel_tol": float},
}


# ----- Layers -----

def _read_parser(parser: configparser.ConfigParser) -> dict[str, dict[str, str]]:
    return {section: dict(parser[section]) for section in parser.sections()}


def default_settings() -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string(DEFAULT_INI)
    return _read_parser(parser)


def load_file(path: str) -> dict[str, dict[str, str]]:
    """Raw settings of one INI file; every section and key must be known."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r") as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}", key=path)
    except configparser.Error as e:
        raise ConfigError(f"malformed config file {path}: {e}", key=path)
    raw = _read_parser(parser)
    for section, values in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]", key=section)
        for key in values:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]",
                                  key=f"{section}.{key}")
    return raw


def merge_configs(base: dict, override: dict) -> dict:
    """Section-wise merge; values of override win."""
    merged = {section: dict(values) for section, values in base.items()}
    for section, values in override.items():
        merged.setdefault(section, {}).update(values)
    return merged


def resolve_settings(config_file: str | None = None) -> tuple[dict, list[str]]:
    """Defaults, environment, global, local and explicit file merged; returns (raw, sources)."""
    settings = default_settings()
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        settings = merge_configs(settings, {"output": {"output_dir": env_dir}})
    sources = []
    for path in (GLOBAL_CONFIG_FILE, LOCAL_CONFIG_FILE):
        if os.path.exists(path):
            settings = merge_configs(settings, load_file(path))
            sources.append(path)
    if config_file is not None:
        settings = merge_configs(settings, load_file(config_file))
        sources.append(config_file)
    logger.debug("config sources: %s", sources or "defaults only")
    return settings, sources


def _convert(section: str, raw: dict[str, str]) -> dict[str, object]:
    out = {}
    for key, convert in SCHEMA[section].items():
        text = raw.get(key)
        if text is None or not str(text).strip():
            raise ConfigError(f"missing required parameter '{key}' in [{section}]",
                              key=f"{section}.{key}")
        try:
            out[key] = convert(str(text))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value {text!r} for '{key}' in [{section}]: {e}",
                              key=f"{section}.{key}")
    return out


# ----- Validation -----

def solver_settings(p: dict) -> SolverConfig:
    """SolverConfig from the [solve] keys; raises ParameterError on bad values."""
    return SolverConfig(max_iter=p["max_iter"], newton_iter=p["newton_iter"],
                        residual_tol=p["residual_tol"], agreement_tol=p["agreement_tol"])


def _validate_model(p: dict) -> None:
    model = SphereModel(p["n"], p["sphere_radius"])
    pot = PotentialField(p["n"], p["h0"], p["h2"], p["delta_cap"])
    ProblemParams(pot.n, pot.h0)
    delta = p.get("delta")
    if delta is not None and not 0.0 < delta < model.injectivity_radius / 4.0:
        raise ParameterError(f"delta must lie in (0, pi R / 4), got {delta!r}")
    first = p.get("first_node")
    if first is not None and not first > 0.0:
        raise ParameterError(f"first_node must be positive, got {first!r}")
    if "nodes" in p and p["nodes"] < 16:
        raise ParameterError(f"nodes must be at least 16, got {p['nodes']}")


def _validate(subcommand: str, p: dict) -> None:
    if subcommand in ("constants", "bubble"):
        params = ProblemParams(p["n"], p["lambda"])
        if subcommand == "bubble":
            BubbleProfile(params, p["mu"], p["kind"])
            if not 0.0 < p["r_min"] < p["r_max"]:
                raise ParameterError("need 0 < r_min < r_max")
            if p["points"] < 2:
                raise ParameterError("points must be at least 2")
    elif subcommand == "integrals":
        IntegralSpec(p["alpha"], p["beta"], p["a"]).check()
        if p["samples"] < 0:
            raise ParameterError("samples must be nonnegative")
    elif subcommand == "expansion":
        _validate_model(p)
        if not 2 <= p["fit_points"] <= p["eps_count"]:
            raise ParameterError("need 2 <= fit_points <= eps_count")
    elif subcommand == "solve":
        _validate_model(p)
        if p["seeds"] < 1:
            raise ParameterError("seeds must be at least 1")
        solver_settings(p)
    elif subcommand == "decompose":
        _validate_model(p)
        if not 0 <= p["scale_first"] <= p["scale_last"]:
            raise ParameterError("need 0 <= scale_first <= scale_last")
        if not p["bubbles"] and p["background"] == "none":
            raise ParameterError("decompose needs bubbles or a background")
        if p["n_angles"] < 2:
            raise ParameterError("n_angles must be at least 2")
    elif subcommand == "sweep":
        for n in p["n"]:
            ProblemParams(n, 0.0)
        if p["lambda_points"] < 2:
            raise ParameterError("lambda_points must be at least 2")
        if not 0.0 < p["ratio_max"] < 1.0:
            raise ParameterError("ratio_max must lie in (0, 1)")


# ----- Command line -----

@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    output_dir: str = "hslab-out"
    format: str = "both"
    workers: int = 1
    config_sources: tuple = ()
    log_level: int = logging.INFO

    def as_dict(self) -> dict:
        """The resolved configuration as embedded in reports (no log level)."""
        return {
            "subcommand": self.subcommand,
            "parameters": dict(self.parameters),
            "output_dir": self.output_dir,
            "format": self.format,
            "workers": self.workers,
            "config_sources": list(self.config_sources),
        }


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", dest="config_file", metavar="FILE",
                        help="INI file applied after hslab.ini and hslab.config.")
    parser.add_argument("--output-dir", dest="output_dir", help="Report directory.")
    parser.add_argument("--format", dest="format", help="csv, json or both.")
    parser.add_argument("--workers", dest="workers", help="Worker processes (1 = serial, auto = half the CPUs).")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    group.add_argument("--quiet", action="store_true", help="Log warnings and errors only.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hslab",
        description="hslab - numerical laboratory for the critical Hardy-Sobolev problem on spheres",
    )
    parser.add_argument("--version", action="version", version=f"hslab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    sub.required = True
    helps = {
        "constants": "Sharp constants and energy thresholds.",
        "integrals": "I(alpha, beta) by quadrature, closed form and recurrences.",
        "bubble": "Bubble profile, PDE residual, energies and quotient.",
        "expansion": "Small-scale expansion of the glued test-function energy.",
        "solve": "Nehari-constrained minimisation on the radial grid.",
        "decompose": "Synthetic bubble decomposition along a scale sequence.",
        "sweep": "Constants table over a lambda grid with measured quotients.",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        for key in SCHEMA[name]:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar=key.upper(),
                           help=f"[{name}] {key}")
        _add_common(p)
    init = sub.add_parser("init-config", help="Write the default configuration file.")
    init.add_argument("--path", default=GLOBAL_CONFIG_FILE, help="Target file (default hslab.ini).")
    init.add_argument("--force", action="store_true", help="Overwrite an existing file.")
    group = init.add_mutually_exclusive_group()
    group.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    group.add_argument("--quiet", action="store_true", help="Log warnings and errors only.")
    return parser


def _log_level(args: argparse.Namespace) -> int:
    if getattr(args, "verbose", False):
        return logging.DEBUG
    if getattr(args, "quiet", False):
        return logging.WARNING
    return logging.INFO


def parse_config(argv=None, config_file: str | None = None) -> RunConfig:
    """Resolve argv (and an optional config file) into a validated RunConfig.

    argparse usage errors exit with status 2; everything else raises
    ConfigError or ParameterError.
    """
    args = build_parser().parse_args(argv)
    level = _log_level(args)
    if args.subcommand == "init-config":
        return RunConfig("init-config", {"force": bool(args.force), "path": args.path},
                         log_level=level)

    config_file = args.config_file if args.config_file is not None else config_file
    raw, sources = resolve_settings(config_file)
    flags = {key: getattr(args, key) for key in SCHEMA[args.subcommand]
             if getattr(args, key, None) is not None}
    out_flags = {key: getattr(args, key) for key in _OUTPUT if getattr(args, key, None) is not None}
    raw = merge_configs(raw, {args.subcommand: flags, "output": out_flags})

    params = _convert(args.subcommand, raw.get(args.subcommand, {}))
    output = _convert("output", raw.get("output", {}))
    if output["workers"] < 1:
        raise ConfigError("workers must be at least 1", key="output.workers")
    _validate(args.subcommand, params)
    return RunConfig(
        subcommand=args.subcommand,
        parameters=dict(sorted(params.items())),
        output_dir=output["output_dir"],
        format=output["format"],
        workers=output["workers"],
        config_sources=tuple(sources),
        log_level=level,
    )
