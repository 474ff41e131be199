"""JSON output formatter."""

import json

from .base import Formatter, FormatterConfig, OutputFormat, Table


class JSONFormatter(Formatter):
    """JSON output formatter.

    Outputs a table as a list of row objects for programmatic consumption.
    """

    def __init__(self, config: FormatterConfig | None = None):
        super().__init__(config)

    @property
    def format_type(self) -> OutputFormat:
        return OutputFormat.JSON

    @property
    def file_extension(self) -> str:
        return ".json"

    def format(self, table: Table) -> str:
        """Format a table as JSON.

        Args:
            table: Rows to format

        Returns:
            JSON string
        """
        indent = 2 if self.config.pretty else None
        return json.dumps(list(table.records()), indent=indent, default=str) + "\n"
