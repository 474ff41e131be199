"""Tests for ``Table`` and the CSV/JSON writers."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from dstack_sim.formatters import CSVFormatter, JSONFormatter, Table, format_cell
from dstack_sim.formatters.base import FormatterConfig


@pytest.fixture
def table() -> Table:
    t = Table(("model", "gpu_pct", "latency_ms", "feasible"))
    t.append("Alexnet", 30, 8.0, True)
    t.append("VGG-19", 50, 0.1 + 0.2, False)
    return t


class TestTable:
    def test_append_checks_width(self) -> None:
        t = Table(("a", "b"))
        with pytest.raises(ValueError, match="2 columns"):
            t.append(1)

    def test_numpy_scalars_are_normalised(self) -> None:
        t = Table(("i", "f", "b"))
        t.append(np.int64(3), np.float64(1.5), np.bool_(True))
        assert t.rows == [(3, 1.5, True)]
        assert type(t.rows[0][0]) is int
        assert type(t.rows[0][2]) is bool

    def test_records_and_column(self, table: Table) -> None:
        records = list(table.records())
        assert records[0] == {
            "model": "Alexnet",
            "gpu_pct": 30,
            "latency_ms": 8.0,
            "feasible": True,
        }
        assert table.column("gpu_pct") == [30, 50]
        assert len(table) == 2


class TestCSVFormatter:
    def test_header_and_rows(self, table: Table) -> None:
        text = CSVFormatter().format(table)
        lines = text.split("\n")
        assert lines[0] == "model,gpu_pct,latency_ms,feasible"
        assert lines[1] == "Alexnet,30,8.0,true"
        assert text.endswith("\n")
        assert "\r" not in text

    def test_floats_round_trip_exactly(self, table: Table) -> None:
        rows = list(csv.DictReader(io.StringIO(CSVFormatter().format(table))))
        assert float(rows[1]["latency_ms"]) == 0.1 + 0.2

    def test_none_is_empty(self) -> None:
        assert format_cell(None) == ""

    def test_write_adds_extension(self, table: Table, temp_dir: Path) -> None:
        path = CSVFormatter().write(table, temp_dir / "sub" / "metrics")
        assert path == temp_dir / "sub" / "metrics.csv"
        assert path.read_text().startswith("model,")


class TestJSONFormatter:
    def test_records(self, table: Table) -> None:
        data = json.loads(JSONFormatter().format(table))
        assert data[1]["model"] == "VGG-19"
        assert data[1]["feasible"] is False

    def test_compact_when_not_pretty(self, table: Table) -> None:
        text = JSONFormatter(FormatterConfig(pretty=False)).format(table)
        assert text.count("\n") == 1
