"""Per-session view of runs whose request rates change between sessions."""

from dataclasses import dataclass

from ..config import Config
from ..formatters import Table
from .cluster import run
from .metrics import SessionMetrics, SimMetrics
from .scenario import Scenario

SESSION_RATE_COLUMNS = (
    "session",
    "model",
    "throughput_rps",
    "baseline_rps",
    "utilization_pct",
    "baseline_utilization_pct",
)


@dataclass
class VariableRateReport:
    """Session metrics of a variable-rate run next to its constant-rate baseline."""

    metrics: SimMetrics
    baseline: SimMetrics | None
    session_ms: float

    @property
    def sessions(self) -> list[SessionMetrics]:
        return self.metrics.sessions

    @property
    def baseline_sessions(self) -> list[SessionMetrics]:
        return self.baseline.sessions if self.baseline is not None else []

    def throughput(self, session: int, model: str, baseline: bool = False) -> float:
        """Completions of ``model`` in ``session`` per second."""
        sessions = self.baseline_sessions if baseline else self.sessions
        return sessions[session].completed.get(model, 0) / (self.session_ms / 1000.0)

    def utilization_shift(self) -> list[float]:
        """Per-session utilization minus the baseline's, in GPU points."""
        return [
            s.utilization - b.utilization
            for s, b in zip(self.sessions, self.baseline_sessions, strict=False)
        ]

    def table(self) -> Table:
        table = Table(SESSION_RATE_COLUMNS)
        baseline = self.baseline_sessions
        for s in self.sessions:
            base = baseline[s.index] if s.index < len(baseline) else None
            for model in self.metrics.models:
                table.append(
                    s.index,
                    model,
                    self.throughput(s.index, model),
                    self.throughput(s.index, model, baseline=True) if base else None,
                    s.utilization,
                    base.utilization if base else None,
                )
        return table


def constant_rate(scenario: Scenario) -> Scenario:
    """``scenario`` with every rate multiplier removed."""
    models = [m.model_copy(update={"rate_multipliers": []}) for m in scenario.models]
    return scenario.model_copy(update={"models": models, "name": f"{scenario.name}-baseline"})


def variable_rate_session(
    scenario: Scenario, config: Config | None = None, baseline: bool = True
) -> VariableRateReport:
    """Run ``scenario`` with its per-session rate multipliers.

    With ``baseline`` the same scenario is also run at constant rates, using
    the same seed, for comparison.
    """
    metrics = run(scenario, config)
    reference = run(constant_rate(scenario), config) if baseline else None
    starts = [s.start_ms for s in metrics.sessions]
    session_ms = starts[1] - starts[0] if len(starts) > 1 else scenario.duration_s * 1000
    return VariableRateReport(metrics, reference, session_ms)


__all__ = [
    "SESSION_RATE_COLUMNS",
    "VariableRateReport",
    "constant_rate",
    "variable_rate_session",
]
