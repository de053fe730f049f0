"""Command line entry point: ``ferrosim run|validate|figures|list``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import FORMATS, ConfigError, build, check, parse_override, read_toml, resolve
from .experiments import EXPERIMENTS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
ENV_OUT = "FERROSIM_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ferrosim", description="Simulated ferroelectric synaptic transistor.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override device.seed")
    common.add_argument("--out", default=None,
                        help=f"output directory (default: ${ENV_OUT} or ./ferrosim-out)")
    common.add_argument("--format", dest="formats", action="append", choices=FORMATS,
                        help="extra output format; repeatable (CSV is always written)")
    common.add_argument("--quiet", action="store_true", help="suppress the summary")

    r = sub.add_parser("run", parents=[common], help="run one experiment")
    r.add_argument("target", nargs="?", help="config file or experiment name")
    r.add_argument("--config", help="config file (alternative to the positional)")
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. device.scale=0.2")
    r.add_argument("--input", help="trace CSV for the metrics experiment")

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("target", nargs="?", help="config file or experiment name")
    v.add_argument("--config")
    v.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    f = sub.add_parser("figures", parents=[common], help="regenerate figure data")
    f.add_argument("name", help="all or one of: " + ", ".join(_figures()))

    sub.add_parser("list", help="list experiments and figures")
    return p


def _figures():
    from .runner import FIGURES
    return FIGURES


def _config_path(target: str | None, config: str | None) -> Path:
    from .runner import bundled_config

    if config and target:
        raise ConfigError("give either a positional config/experiment or --config, not both")
    given = config or target
    if not given:
        raise ConfigError("no config given")
    path = Path(given)
    if path.is_file():
        return path
    if given in EXPERIMENTS:
        return bundled_config(given)
    if path.suffix == ".toml" or os.sep in given:
        raise ConfigError(f"config file not found: {given}")
    raise ConfigError(f"unknown experiment {given!r}; choose from {sorted(EXPERIMENTS)}")


def _out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get(ENV_OUT) or "ferrosim-out")


def _resolve(args):
    path = _config_path(args.target, args.config)
    overrides = [parse_override(s) for s in args.overrides]
    if getattr(args, "input", None):
        overrides.append(("experiment.params.input", args.input))
    doc = read_toml(path)
    raw, errors = resolve(doc, overrides, getattr(args, "seed", None))
    return raw, errors


def cmd_run(args) -> int:
    from .runner import run, summary_lines

    raw, errors = _resolve(args)
    errors += check(raw)
    if errors:
        raise ConfigError("; ".join(errors))
    if args.input and raw["experiment"]["name"] != "metrics":
        raise ConfigError("--input only applies to the metrics experiment")
    if args.formats:
        raw["output"]["formats"] = list(dict.fromkeys(args.formats))
    if args.out:
        out = Path(args.out)
    elif raw["output"]["directory"]:
        out = Path(raw["output"]["directory"])
    else:
        out = _out_root(None) / raw["experiment"]["name"]
    raw["output"]["directory"] = ""  # location is not part of the reproducible config
    cfg = build(raw)
    manifest = run(cfg, out)
    if not args.quiet:
        print("\n".join(summary_lines(manifest)))
        print(f"  output: {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    raw, errors = _resolve(args)
    errors += check(raw)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print("OK")
    return EXIT_OK


def cmd_figures(args) -> int:
    from .runner import FIGURES, run_figure, write_index

    names = list(FIGURES) if args.name == "all" else [args.name]
    unknown = [n for n in names if n not in FIGURES]
    if unknown:
        raise ConfigError(f"unknown figure {unknown[0]!r}; choose all or one of {list(FIGURES)}")
    root = _out_root(args.out)
    index = {n: run_figure(n, root, args.seed, args.formats) for n in names}
    write_index(root, index)
    if not args.quiet:
        for n, entries in index.items():
            nfiles = sum(len(e["files"]) for e in entries)
            print(f"{n}: {len(entries)} experiment(s), {nfiles} file(s) in {root / n}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name, exp in EXPERIMENTS.items():
        print(f"{name:18s} {exp.description}")
    for fig, exps in _figures().items():
        print(f"{fig:18s} {', '.join(exps)}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "figures": cmd_figures, "list": cmd_list}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # no stack dumps for users
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
