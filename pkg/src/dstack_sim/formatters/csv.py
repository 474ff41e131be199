"""CSV output formatter."""

import csv
import io

from .base import Cell, Formatter, FormatterConfig, OutputFormat, Table


def format_cell(value: Cell) -> str:
    """Render one cell; floats use repr so they parse back to the same value."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class CSVFormatter(Formatter):
    """CSV output formatter.

    Writes a header row followed by one line per row, with ``\\n`` line endings.
    """

    def __init__(self, config: FormatterConfig | None = None):
        super().__init__(config)

    @property
    def format_type(self) -> OutputFormat:
        return OutputFormat.CSV

    @property
    def file_extension(self) -> str:
        return ".csv"

    def format(self, table: Table) -> str:
        """Format a table as CSV.

        Args:
            table: Rows to format

        Returns:
            CSV text
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_cell(cell) for cell in row])
        return buffer.getvalue()
