"""Command line: ``crad <task> [flags]`` or ``crad --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 output
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .harness import (
    DEFAULT_PRECISION,
    EXIT_OK,
    FORMATS,
    TASKS,
    ConfigError,
    build_config,
    execute,
    exit_code_for,
    load_config,
    load_params_file,
    render_table,
    write_table,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crad", description="Collapse-noise photon emission toolkit.")
    parser.add_argument("--version", action="version", version=f"crad {__version__}")
    parser.add_argument("--config", metavar="FILE", help="run the task described by an INI file")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker processes (CRAD_JOBS overrides)")
    sub = parser.add_subparsers(dest="task", parser_class=_Parser)
    for spec in TASKS.values():
        p = sub.add_parser(spec.name, help=spec.help, description=spec.help)
        for opt in spec.options:
            if opt.kind is bool:
                p.add_argument(opt.flag, dest=opt.name, action="store_const", const="true",
                               default=None, help=opt.help)
            else:
                p.add_argument(opt.flag, dest=opt.name, default=None, metavar=opt.name.upper(),
                               help=opt.help)
        p.add_argument("--params", metavar="FILE", dest="_params",
                       help="parameter file with a [params] section")
        p.add_argument("--out", metavar="PATH", dest="_out", help="output file (default stdout)")
        p.add_argument("--format", choices=FORMATS, default="csv", dest="_format")
        p.add_argument("--precision", type=int, default=DEFAULT_PRECISION, dest="_precision",
                       metavar="DIGITS", help="significant digits for floats")
        p.add_argument("--jobs", type=int, default=None, dest="_jobs", metavar="N",
                       help="worker processes (CRAD_JOBS overrides)")
    return parser


def _config_from_args(args):
    if args.config:
        if args.task:
            raise ConfigError("give either --config or a task, not both")
        return load_config(args.config)
    if not args.task:
        raise ConfigError("no task given; see crad --help")
    spec = TASKS[args.task]
    raw = {o.name: getattr(args, o.name) for o in spec.options
           if getattr(args, o.name) is not None}
    params = load_params_file(args._params) if args._params else None
    jobs = args._jobs if args._jobs is not None else args.jobs
    return build_config(args.task, raw, params, args._out, args._format, args._precision, jobs)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        if args.config and args.jobs is not None:
            config = build_config(config.task, config.options, config.params, config.out_path,
                                  config.out_format, config.precision, args.jobs)
        table = execute(config)
        if config.out_path:
            write_table(table, config.out_path, config.out_format, config.precision)
        else:
            sys.stdout.write(render_table(table, config.out_format, config.precision))
            if config.out_format == "csv":
                sys.stderr.write(json.dumps(table.metadata, sort_keys=True) + "\n")
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = exit_code_for(exc)
        print(f"crad: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
