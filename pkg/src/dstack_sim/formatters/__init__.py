"""Table writers for dstack-sim results.

Every subcommand produces one or more ``Table`` values that are rendered as:
- CSV: the default, consumed by plotting scripts
- JSON: a list of row objects for programmatic consumption
"""

from collections.abc import Callable

from .base import Cell, Formatter, FormatterConfig, OutputFormat, Table, normalize_cell
from .csv import CSVFormatter, format_cell
from .json import JSONFormatter


def get_formatter(
    format_type: str | OutputFormat,
    config: FormatterConfig | None = None,
) -> Formatter:
    """Get a formatter by type.

    Args:
        format_type: Format type ('csv', 'json')
        config: Optional formatter configuration

    Returns:
        Configured formatter instance
    """
    if isinstance(format_type, str):
        try:
            format_type = OutputFormat(format_type.lower())
        except ValueError:
            raise ValueError(
                f"Unknown format: {format_type}. "
                f"Available: {', '.join(f.value for f in OutputFormat)}"
            ) from None

    formatter_factories: dict[OutputFormat, Callable[[FormatterConfig | None], Formatter]] = {
        OutputFormat.CSV: CSVFormatter,
        OutputFormat.JSON: JSONFormatter,
    }

    factory = formatter_factories.get(format_type)
    if factory is None:
        raise ValueError(
            f"Unknown format: {format_type}. Available: {', '.join(f.value for f in OutputFormat)}"
        )

    return factory(config)


__all__ = [
    "Cell",
    "Formatter",
    "FormatterConfig",
    "OutputFormat",
    "Table",
    "normalize_cell",
    "format_cell",
    "CSVFormatter",
    "JSONFormatter",
    "get_formatter",
]
