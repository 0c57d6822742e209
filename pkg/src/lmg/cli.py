"""Command line: ``lmg <experiment> --config <path> [--set key=value ...] --out <path>``.

The config file is flat ``key = value`` text (``#`` comments allowed); each
``--set`` override wins over the file.  Exit codes: 0 success, 2 config
error, 3 numeric failure, 4 I/O error.
"""

import configparser
import sys
import warnings
from pathlib import Path

import click

from .errors import ConfigError, LMGError
from .experiments import EXPERIMENTS, SCHEMA, make_config, render_csv, run_experiment

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_SECTION = "lmg"


def read_config_file(path: Path) -> dict:
    """Parse a flat key = value file; duplicate keys and section headers are config errors."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",), interpolation=None
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if parser.sections() != [_SECTION]:
        raise ConfigError(f"{path}: sections are not supported; use flat key = value lines")
    return dict(parser[_SECTION])


def parse_overrides(items) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def write_csv(path: Path, content: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(content)
    tmp.replace(path)


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("experiment", type=click.Choice(EXPERIMENTS))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Flat key = value file.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override one config key (repeatable).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Output CSV path.")
@click.version_option(package_name="artifact", prog_name="lmg")
def main(experiment, config_path, overrides, out_path):
    """Run EXPERIMENT and write its table as CSV.

    Configuration keys: """
    try:
        entries = read_config_file(config_path) if config_path else {}
        entries.update(parse_overrides(overrides))
        cfg = make_config(experiment, entries)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            table = run_experiment(cfg)
        for w in caught:
            click.echo(f"warning: {w.message}", err=True)
    except (LMGError, ArithmeticError, ValueError) as exc:
        click.echo(f"numeric failure in {experiment}: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)

    try:
        write_csv(out_path, render_csv(cfg, table))
    except OSError as exc:
        click.echo(f"cannot write {out_path}: {exc.strerror or exc}", err=True)
        sys.exit(EXIT_IO)
    click.echo(f"wrote {len(table.rows)} rows to {out_path}")


main.help += ", ".join(sorted(SCHEMA)) + "."


if __name__ == "__main__":
    main()
