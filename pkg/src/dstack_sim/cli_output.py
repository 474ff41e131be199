"""CLI output helpers for dstack-sim."""

import sys
from collections.abc import Mapping
from pathlib import Path

from .formatters import Table, get_formatter


def print_error(message: str) -> None:
    """Print an error message to stderr."""
    print(f"Error: {message}", file=sys.stderr)


def print_table(table: Table, json_output: bool = False) -> None:
    """Write ``table`` to stdout as CSV, or JSON records."""
    formatter = get_formatter("json" if json_output else "csv")
    sys.stdout.write(formatter.format(table))


def write_tables(out_dir: str | Path, tables: Mapping[str, Table]) -> list[Path]:
    """Write each table as ``<out_dir>/<name>.csv``."""
    formatter = get_formatter("csv")
    return [formatter.write(table, Path(out_dir) / name) for name, table in tables.items()]
