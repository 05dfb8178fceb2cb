"""``chiral-decay`` command line.

Parameters come from scenario defaults, then an optional TOML file with one
flat table per scenario, then command-line flags (flags win). Exit codes:
1 configuration error, 2 numerical failure, 3 physics precondition violated.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path
from typing import Sequence

from .errors import NumericalError, PhysicsPreconditionError
from .scenarios import SCENARIOS, Output, Param

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PHYSICS = 1, 2, 3
COMMON_KEYS = ("output_dir", "emit_svg")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _coerce(name: str, param: Param, value):
    """Validate a value from TOML or the command line against its declared kind."""
    try:
        if param.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if param.kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if param.kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if param.kind == "str":
            value = str(value)
            if param.choices and value not in param.choices:
                raise ConfigError(f"{name} must be one of {', '.join(param.choices)}; got {value!r}")
            return value
        if param.kind in ("floats", "ints"):
            if isinstance(value, str):
                value = [x for x in value.split(",") if x.strip()]
            if not isinstance(value, (list, tuple)) or not value:
                raise TypeError
            conv = float if param.kind == "floats" else int
            return [conv(x) for x in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot read {value!r} as {param.kind}") from None
    raise ConfigError(f"{name}: unsupported kind {param.kind}")


def load_config(path: str | Path, scenario: str) -> dict:
    """The table for ``scenario`` from a TOML file; unknown tables and keys are errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for key, val in doc.items():
        if key not in SCENARIOS:
            raise ConfigError(f"{path}: unknown scenario table [{key}]")
        if not isinstance(val, dict):
            raise ConfigError(f"{path}: [{key}] must be a table")
    table = dict(doc.get(scenario, {}))
    allowed = set(SCENARIOS[scenario].params) | set(COMMON_KEYS)
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) in [{scenario}]: {', '.join(unknown)}")
    return table


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chiral-decay", description="Multilevel decay into chiral continua.")
    sub = parser.add_subparsers(dest="scenario", required=True, parser_class=_Parser)
    for name, sc in SCENARIOS.items():
        sp = sub.add_parser(name, help=sc.summary, description=sc.summary)
        sp.add_argument("--config", help="TOML file with a [%s] table" % name)
        sp.add_argument("--output-dir", help=f"directory for CSV/SVG output (default: out/{name})")
        sp.add_argument(
            "--emit-svg", action=argparse.BooleanOptionalAction, default=None, help="write SVG plots (default: on)"
        )
        for key, param in sc.params.items():
            flag = "--" + key.replace("_", "-")
            kw = {"dest": key, "default": None}
            if param.kind == "bool":
                sp.add_argument(flag, action=argparse.BooleanOptionalAction, **kw, help=param.help)
            else:
                extra = f"; comma separated, e.g. {flag}=-1.5,-1.5" if param.kind in ("floats", "ints") else ""
                sp.add_argument(
                    flag,
                    **kw,
                    choices=param.choices,
                    help=f"{param.help} (default {param.default}{extra})",
                )
    return parser


def resolve(args: argparse.Namespace) -> tuple[str, dict, Path, bool]:
    """Validated parameters: config values override defaults; flags override both."""
    sc = SCENARIOS[args.scenario]
    params = {k: param.default for k, param in sc.params.items()}
    output_dir, emit_svg = Path("out") / sc.name, True
    if args.config:
        table = load_config(args.config, sc.name)
        for k, v in table.items():
            if k == "output_dir":
                output_dir = Path(str(v))
            elif k == "emit_svg":
                if not isinstance(v, bool):
                    raise ConfigError("emit_svg must be true or false")
                emit_svg = v
            else:
                params[k] = v
    for k in sc.params:
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    if args.output_dir is not None:
        output_dir = Path(args.output_dir)
    if args.emit_svg is not None:
        emit_svg = args.emit_svg
    params = {k: _coerce(k, sc.params[k], v) for k, v in params.items()}
    return sc.name, params, output_dir, emit_svg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        name, params, output_dir, emit_svg = resolve(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Output(output_dir, emit_svg)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = SCENARIOS[name].run(params, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except PhysicsPreconditionError as exc:
        print(f"error: physics precondition violated ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except NumericalError as exc:
        print(f"error: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, ConfigError) as exc:
        print(f"error: invalid parameters ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(summary)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
