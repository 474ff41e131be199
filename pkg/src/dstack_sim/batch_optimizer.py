"""Efficacy-maximising (GPU%, batch) selection under SLO constraints.

Efficacy is throughput per unit latency per unit GPU fraction:
``eta = b / (f_L^2 * gpu_fraction)``. A cell is feasible when its batch is
within the limit, latency plus batch assembly time fits the SLO, and latency
alone is at most half the SLO. The optimum is found by scanning every grid
cell.
"""

from dataclasses import dataclass, field
from enum import Enum

from .exceptions import OptimizerError
from .formatters import Table
from .logging import get_logger
from .profiles import ModelProfile, latency

logger = get_logger(__name__)

REGION_COLUMNS = (
    "gpu_pct",
    "batch",
    "latency_ms",
    "throughput",
    "efficacy",
    "feasible",
    "violations",
)


class Constraint(str, Enum):
    """Constraints an operating point must satisfy."""

    BATCH_LIMIT = "batch_limit"  # 1 <= b <= max_batch
    SLO = "slo"  # f_L + C <= SLO
    HALF_SLO = "half_slo"  # f_L <= SLO / 2


ALL_CONSTRAINTS: frozenset[Constraint] = frozenset(Constraint)


@dataclass(frozen=True)
class OptimizationProblem:
    """One model's optimisation inputs.

    Attributes:
        profile: Latency grid of the model
        slo_ms: Per-request deadline
        request_rate: Offered load in requests per second
        max_batch: Batch limit, defaults to the profile's largest batch
    """

    profile: ModelProfile
    slo_ms: float
    request_rate: float
    max_batch: int | None = None

    def __post_init__(self) -> None:
        if self.slo_ms <= 0:
            raise OptimizerError("SLO must be positive", details={"slo_ms": self.slo_ms})
        if self.request_rate <= 0:
            raise OptimizerError(
                "Request rate must be positive", details={"request_rate": self.request_rate}
            )
        if self.max_batch is not None and self.max_batch < 1:
            raise OptimizerError(
                "max_batch must be at least 1", details={"max_batch": self.max_batch}
            )

    @property
    def batch_limit(self) -> int:
        return self.max_batch if self.max_batch is not None else self.profile.max_batch

    @property
    def assembly_time_per_request_ms(self) -> float:
        return 1000.0 / self.request_rate

    def assembly_time_ms(self, batch: int) -> float:
        """Time C to gather ``batch`` requests at the offered rate."""
        return batch * self.assembly_time_per_request_ms


@dataclass(frozen=True)
class OperatingPoint:
    """Chosen operating point; ``provisioned_pct`` includes the knee margin."""

    gpu_pct: float
    batch: int
    latency_ms: float
    throughput: float
    efficacy: float
    provisioned_pct: float


@dataclass(frozen=True)
class Infeasible:
    """No grid cell satisfies the enabled constraints."""

    violations: dict[tuple[int, int], tuple[Constraint, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class FeasibilityCheck:
    """Outcome of a constraint check; truthy when feasible."""

    feasible: bool
    violations: tuple[Constraint, ...] = ()

    def __bool__(self) -> bool:
        return self.feasible


def throughput(profile: ModelProfile, gpu_pct: float, batch: int) -> float:
    """Requests per second: b / f_L."""
    return batch / (latency(profile, gpu_pct, batch) / 1000.0)


def efficacy(profile: ModelProfile, gpu_pct: float, batch: int) -> float:
    """b / (f_L^2 * gpu_fraction) with f_L in seconds."""
    f = latency(profile, gpu_pct, batch) / 1000.0
    return batch / (f * f * (gpu_pct / 100.0))


def feasible(
    problem: OptimizationProblem,
    gpu_pct: float,
    batch: int,
    constraints: frozenset[Constraint] = ALL_CONSTRAINTS,
) -> FeasibilityCheck:
    """Check the enabled constraints at (gpu_pct, batch).

    An invalid batch is reported as a batch-limit violation only.
    """
    if batch < 1 or batch > problem.batch_limit:
        if Constraint.BATCH_LIMIT in constraints:
            return FeasibilityCheck(False, (Constraint.BATCH_LIMIT,))
        if batch < 1 or batch > problem.profile.max_batch:
            # Latency is undefined here even with the limit relaxed
            return FeasibilityCheck(False, (Constraint.BATCH_LIMIT,))

    f = latency(problem.profile, gpu_pct, batch)
    violations = []
    if Constraint.SLO in constraints and f + problem.assembly_time_ms(batch) > problem.slo_ms:
        violations.append(Constraint.SLO)
    if Constraint.HALF_SLO in constraints and f > problem.slo_ms / 2:
        violations.append(Constraint.HALF_SLO)
    return FeasibilityCheck(not violations, tuple(violations))


def optimize(
    problem: OptimizationProblem,
    margin_pct: float = 5.0,
    constraints: frozenset[Constraint] = ALL_CONSTRAINTS,
) -> OperatingPoint | Infeasible:
    """Exhaustive grid scan for the feasible cell with the highest efficacy.

    Ties go to the smaller GPU%, then the smaller batch. The returned
    ``provisioned_pct`` adds ``margin_pct`` to the chosen GPU%, capped at 100.
    """
    profile = problem.profile
    best: OperatingPoint | None = None
    violations: dict[tuple[int, int], tuple[Constraint, ...]] = {}

    for pct in profile.gpu_pcts:
        for batch in profile.batches:
            check = feasible(problem, pct, batch, constraints)
            if not check:
                violations[(pct, batch)] = check.violations
                continue
            eta = efficacy(profile, pct, batch)
            if best is None or eta > best.efficacy:
                best = OperatingPoint(
                    gpu_pct=pct,
                    batch=batch,
                    latency_ms=latency(profile, pct, batch),
                    throughput=throughput(profile, pct, batch),
                    efficacy=eta,
                    provisioned_pct=min(100.0, pct + margin_pct),
                )

    if best is None:
        logger.debug("No feasible cell for '%s' at SLO %s ms", profile.name, problem.slo_ms)
        return Infeasible(violations)

    logger.debug(
        "Optimum for '%s': %s%% b=%d (provisioned %s%%)",
        profile.name,
        best.gpu_pct,
        best.batch,
        best.provisioned_pct,
    )
    return best


def feasibility_region(
    problem: OptimizationProblem,
    constraints: frozenset[Constraint] = ALL_CONSTRAINTS,
) -> Table:
    """Every grid cell annotated with its metrics and feasibility."""
    profile = problem.profile
    table = Table(REGION_COLUMNS)
    for pct in profile.gpu_pcts:
        for batch in profile.batches:
            check = feasible(problem, pct, batch, constraints)
            table.append(
                pct,
                batch,
                profile.cell(pct, batch),
                throughput(profile, pct, batch),
                efficacy(profile, pct, batch),
                check.feasible,
                ";".join(c.value for c in check.violations),
            )
    return table


__all__ = [
    "REGION_COLUMNS",
    "Constraint",
    "ALL_CONSTRAINTS",
    "OptimizationProblem",
    "OperatingPoint",
    "Infeasible",
    "FeasibilityCheck",
    "throughput",
    "efficacy",
    "feasible",
    "optimize",
    "feasibility_region",
]
