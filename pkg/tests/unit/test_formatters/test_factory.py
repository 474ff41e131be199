"""Tests for the formatter factory (``get_formatter``)."""

from __future__ import annotations

import pytest

from dstack_sim.formatters import CSVFormatter, JSONFormatter, OutputFormat, get_formatter
from dstack_sim.formatters.base import FormatterConfig


@pytest.mark.parametrize(
    ("name", "expected"),
    [
        ("csv", CSVFormatter),
        ("json", JSONFormatter),
    ],
)
def test_get_formatter_by_string(name: str, expected: type) -> None:
    assert isinstance(get_formatter(name), expected)


def test_get_formatter_is_case_insensitive() -> None:
    assert isinstance(get_formatter("JSON"), JSONFormatter)
    assert isinstance(get_formatter("Csv"), CSVFormatter)


def test_get_formatter_by_enum() -> None:
    assert isinstance(get_formatter(OutputFormat.CSV), CSVFormatter)


def test_get_formatter_passes_config_through() -> None:
    config = FormatterConfig(pretty=False)
    assert get_formatter("json", config).config.pretty is False


def test_get_formatter_unknown_format_raises() -> None:
    with pytest.raises(ValueError, match="Unknown format"):
        get_formatter("yaml")
