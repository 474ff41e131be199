"""Base formatter abstraction."""

from abc import ABC, abstractmethod
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

Cell = str | int | float | bool | None


class OutputFormat(str, Enum):
    """Supported output formats."""

    CSV = "csv"
    JSON = "json"


@dataclass
class FormatterConfig:
    """Configuration for output formatters."""

    pretty: bool = True
    tool_name: str = "dstack-sim"
    tool_version: str = "0.1.0"
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class Table:
    """Named columns plus rows; every tool output passes through one of these."""

    columns: tuple[str, ...]
    rows: list[tuple[Cell, ...]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.columns = tuple(self.columns)
        for row in self.rows:
            self._check(row)

    def _check(self, row: Sequence[Cell]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(
                f"Row has {len(row)} cells but the table has {len(self.columns)} columns"
            )

    def append(self, *cells: Any) -> None:
        """Add a row, normalising numpy scalars to Python values."""
        row = tuple(normalize_cell(c) for c in cells)
        self._check(row)
        self.rows.append(row)

    def records(self) -> Iterator[dict[str, Cell]]:
        """Yield rows as column->value mappings."""
        for row in self.rows:
            yield dict(zip(self.columns, row, strict=True))

    def column(self, name: str) -> list[Cell]:
        """Values of one column."""
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


def normalize_cell(value: Any) -> Cell:
    """Convert numpy scalars to their Python equivalents."""
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value  # type: ignore[no-any-return]


class Formatter(ABC):
    """Abstract base class for output formatters."""

    def __init__(self, config: FormatterConfig | None = None):
        self.config = config or FormatterConfig()

    @property
    @abstractmethod
    def format_type(self) -> OutputFormat:
        """The output format type."""
        ...

    @property
    @abstractmethod
    def file_extension(self) -> str:
        """File extension for this format (e.g., '.csv', '.json')."""
        ...

    @abstractmethod
    def format(self, table: Table) -> str:
        """Format a table for output.

        Args:
            table: Rows to format

        Returns:
            Formatted string output
        """
        ...

    def write(self, table: Table, path: str | Path) -> Path:
        """Format ``table`` and write it to ``path``, adding the extension if missing.

        Returns:
            The path written
        """
        path = Path(path)
        if not path.suffix:
            path = path.with_suffix(self.file_extension)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.format(table), encoding="utf-8", newline="")
        return path
