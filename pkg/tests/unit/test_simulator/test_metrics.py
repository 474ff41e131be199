"""Tests for simulation results and their tables."""

import numpy as np
import pytest

from dstack_sim.schedulers import RunKind
from dstack_sim.simulator import (
    ExecutedRun,
    ModelMetrics,
    Outcome,
    RequestRecord,
    SessionMetrics,
    SimMetrics,
    merge_metrics,
)
from dstack_sim.simulator.metrics import (
    REQUEST_COLUMNS,
    RUN_COLUMNS,
    session_utilization,
)


def _metrics(scale: int = 1) -> SimMetrics:
    a = ModelMetrics(
        "A",
        arrived=10 * scale,
        in_slo=6 * scale,
        late=2 * scale,
        unserved=scale,
        residual=scale,
        runs=3 * scale,
        latencies_ms=[1.0, 2.0, 4.0],
    )
    return SimMetrics(
        scenario="s",
        duration_s=2.0,
        slot_ms=0.1,
        models={"A": a},
        gpu_busy=[np.array([50.0, 30.0, 10.0, 10.0])],
        sessions=[
            SessionMetrics(0, 0.0, arrived={"A": 6}, completed={"A": 5}, utilization=40.0),
            SessionMetrics(1, 0.2, arrived={"A": 4}, completed={"A": 3}, utilization=10.0),
        ],
    )


class TestModelMetrics:
    def test_derived_counts(self) -> None:
        m = _metrics().models["A"]
        assert m.completed == 8
        assert m.violations == 3
        assert m.conserved()

    def test_conservation_broken(self) -> None:
        assert not ModelMetrics("A", arrived=2, in_slo=1).conserved()

    def test_merge(self) -> None:
        m = ModelMetrics("A", arrived=1, in_slo=1, latencies_ms=[1.0])
        m.merge(ModelMetrics("A", arrived=2, late=2, latencies_ms=[3.0, 4.0]))
        assert (m.arrived, m.in_slo, m.late) == (3, 1, 2)
        assert m.latencies_ms == [1.0, 3.0, 4.0]


class TestSimMetrics:
    def test_aggregates(self) -> None:
        metrics = _metrics()
        assert metrics.throughput("A") == pytest.approx(4.0)
        assert metrics.total_throughput == pytest.approx(4.0)
        assert metrics.violations_per_s == pytest.approx(1.5)
        assert metrics.miss_fraction == pytest.approx(0.3)
        assert metrics.gpu_utilization == [pytest.approx(25.0)]
        assert metrics.mean_utilization == pytest.approx(25.0)

    def test_empty_run(self) -> None:
        metrics = SimMetrics(scenario="s", duration_s=1.0, slot_ms=0.1, models={})
        assert metrics.miss_fraction == 0.0
        assert metrics.mean_utilization == 0.0
        edges, counts = metrics.latency_histogram(bins=4)
        assert edges.size == 5
        assert counts.sum() == 0

    def test_histogram(self) -> None:
        edges, counts = _metrics().latency_histogram(bins=4)
        assert edges[0] == 0.0
        assert edges[-1] == 4.0
        assert counts.sum() == 3

    def test_metrics_table(self) -> None:
        rows = {(r["metric"], r["model"]): r["value"] for r in _metrics().metrics_table().records()}
        assert rows[("arrived", "A")] == 10
        assert rows[("throughput_rps", "A")] == pytest.approx(4.0)
        assert rows[("gpu0_utilization_pct", "all")] == pytest.approx(25.0)
        assert rows[("mean_latency_ms", "A")] == pytest.approx(7 / 3)
        assert rows[("rejected_reconfigurations", "all")] == 0

    def test_utilization_and_session_tables(self) -> None:
        metrics = _metrics()
        util = metrics.utilization_table()
        assert len(util) == 4
        assert util.column("slot_ms")[1] == pytest.approx(0.1)
        sessions = list(metrics.session_table().records())
        assert sessions[1]["completed"] == 3

    def test_runs_table_sorted(self) -> None:
        metrics = _metrics()
        metrics.runs = [
            ExecutedRun(0, "B", 2000, 3000, 40.0, 8, RunKind.FILL, 0),
            ExecutedRun(0, "A", 1000, 5000, 30.0, 16, RunKind.STATIC, 0, delayed=True),
        ]
        table = metrics.runs_table()
        assert table.columns == RUN_COLUMNS
        assert table.rows[0] == (0, "A", 1.0, 5.0, 30.0, 16, "static", 0, True)
        assert table.rows[1][6] == "fill"

    def test_requests_table(self) -> None:
        metrics = _metrics()
        metrics.requests = [
            RequestRecord(1, "A", 2000, 12000, None, None, Outcome.RESIDUAL),
            RequestRecord(0, "A", 500, 10500, 1000, 6000, Outcome.IN_SLO),
        ]
        table = metrics.requests_table()
        assert table.columns == REQUEST_COLUMNS
        assert table.rows[0] == (0, "A", 0.5, 10.5, 1.0, 6.0, "in_slo")
        assert table.rows[1][4:] == (None, None, "residual")
        assert metrics.requests[1].latency_ms == pytest.approx(5.5)


class TestMerge:
    def test_merge_metrics(self) -> None:
        merged = merge_metrics("cluster", [_metrics(), _metrics(2)])
        assert merged.scenario == "cluster"
        assert merged.models["A"].arrived == 30
        assert len(merged.gpu_busy) == 2
        assert merged.sessions[0].arrived == {"A": 12}
        assert merged.sessions[0].utilization == pytest.approx(40.0)
        assert merged.conserved()

    def test_merge_nothing(self) -> None:
        with pytest.raises(ValueError):
            merge_metrics("x", [])

    def test_session_utilization(self) -> None:
        busy = np.array([10.0, 20.0, 30.0, 40.0, 50.0])
        assert session_utilization(busy, [0, 2, 4], 2) == [15.0, 35.0, 50.0]
