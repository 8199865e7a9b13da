"""Command-line front end for the simulation harness.

Subcommands ci/evals/ui/betting run one experiment each; all runs the
four in a fixed order.  Flags override values from an optional flat
key=value config file, which overrides the built-in defaults.  Exit
code 0 on success, 2 on any configuration problem (the message names
the offending flag or config key).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

from .experiments import ExperimentConfig, run_experiment

_COMMANDS = {
    "ci": "gaussian_ci",
    "evals": "evalue_power",
    "ui": "ui_power",
    "betting": "betting_power",
}
_ALL_ORDER = ("ci", "evals", "ui", "betting")


class ConfigError(Exception):
    pass


def _parse_alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must be strictly between 0 and 1, got {text}")
    return value


def _parse_positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return value


def _parse_seed(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# config-file keys with their converters; validation errors are re-raised
# naming the key
_CONFIG_CONVERTERS = {
    "alpha": float,
    "reps": int,
    "b_count": int,
    "seed": int,
    "out": str,
    "paper_scale": _parse_bool,
}

_DEFAULTS = {
    "alpha": 0.05,
    "reps": None,
    "b_count": 100,
    "seed": 0,
    "out": "results",
    "paper_scale": False,
}


def _load_config_file(path: str) -> Dict[str, object]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path!r}: {exc}")
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"--config: line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_CONVERTERS:
            raise ConfigError(f"--config: unknown key {key!r} on line {lineno}")
        try:
            values[key] = _CONFIG_CONVERTERS[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"--config: key {key!r}: {exc}")
    _validate_settings(values, source="--config")
    return values


def _validate_settings(settings: Dict[str, object], source: str) -> None:
    alpha = settings.get("alpha")
    if alpha is not None and not 0.0 < alpha < 1.0:
        raise ConfigError(f"{source}: alpha must be strictly between 0 and 1, got {alpha}")
    for key in ("reps", "b_count"):
        value = settings.get(key)
        if value is not None and value < 1:
            raise ConfigError(f"{source}: {key} must be at least 1, got {value}")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=_parse_alpha, default=None,
                        help="test level in (0,1); default 0.05")
    parser.add_argument("--reps", type=_parse_positive_int, default=None,
                        help="replications per grid point; default desk scale")
    parser.add_argument("--b-count", type=_parse_positive_int, default=None,
                        dest="b_count", metavar="B",
                        help="permutations / splits per rep; default 100")
    parser.add_argument("--seed", type=_parse_seed, default=None,
                        help="base seed; default 0")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory; default results/")
    parser.add_argument("--paper-scale", action="store_true", default=None,
                        help="use the full replication counts")
    parser.add_argument("--config", default=None, metavar="PATH",
                        help="flat key=value file with defaults for the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randmark",
        description="Deterministic simulation harness for randomized "
                    "tail-bound inference; writes one CSV per experiment.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{ci,evals,ui,betting,all}")
    descriptions = {
        "ci": "Gaussian mean confidence interval experiment",
        "evals": "dependent e-value power experiment",
        "ui": "mixture model test power experiment",
        "betting": "bounded mean betting power experiment",
        "all": "run all four experiments",
    }
    for name in (*_ALL_ORDER, "all"):
        p = sub.add_parser(name, help=descriptions[name])
        _add_common_flags(p)
    return parser


def _resolve_settings(ns: argparse.Namespace) -> Dict[str, object]:
    settings = dict(_DEFAULTS)
    if ns.config is not None:
        settings.update(_load_config_file(ns.config))
    for key in _DEFAULTS:
        flag_value = getattr(ns, key)
        if flag_value is not None:
            settings[key] = flag_value
    return settings


def _config_for(experiment: str, settings: Dict[str, object]) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=experiment,
        alpha=settings["alpha"],
        reps=settings["reps"],
        B=settings["b_count"],
        base_seed=settings["seed"],
        out_dir=settings["out"],
        paper_scale=settings["paper_scale"],
    )


def _count_rows(path: Path) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        return max(sum(1 for _ in fh) - 1, 0)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    commands = _ALL_ORDER if ns.command == "all" else (ns.command,)
    try:
        settings = _resolve_settings(ns)
        for command in commands:
            experiment = _COMMANDS[command]
            cfg = _config_for(experiment, settings)
            path = run_experiment(cfg)
            print(f"{experiment}: wrote {path} "
                  f"({_count_rows(path)} rows, reps={cfg.resolved_reps()}, "
                  f"alpha={cfg.alpha:g}, seed={cfg.base_seed})")
    except ConfigError as exc:
        print(f"randmark: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"randmark: error: --out: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
