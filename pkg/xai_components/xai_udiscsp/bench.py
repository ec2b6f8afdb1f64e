"""Density sweeps over generated meeting-scheduling instances.

All algorithms see the same instance stream: the instance seed of run ``k``
at density index ``i`` is ``derive_seed(base_seed, i, k)`` and the scheduler
seed is derived from that instance seed. Work items can be spread over a
spawn-context process pool; results are always reduced in submission order
so the CSV does not depend on the worker count.
"""
import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import dill
import numpy as np

from .generator import GenParams, derive_seed, generate
from .runtime import RANDOM, STEP_LIMIT, Outcome
from .solve import ABT, ABTU, ALGORITHMS, BASE_OF, SYNCBT, SYNCBTU, SolveConfig, is_utility, solve_instance
from .utility import DEFAULT_RISK, OFFLINE, FutilityStats, StatsBook

DEFAULT_DENSITIES = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_INSTANCES = 50

CSV_COLUMNS = ("algo", "density", "dist", "instances", "privacy_loss_mean", "messages_mean",
               "solved_rate", "interrupted_rate", "step_limit_rate", "walltime_ms_mean")


@dataclass(frozen=True)
class RunMetrics:
    algorithm: str
    seed: int
    density: float
    distribution: str
    privacy_loss: float
    messages: int
    solved: bool
    interrupted: bool
    step_limited: bool
    wall_time_ms: float = 0.0


@dataclass(frozen=True)
class SweepSpec:
    densities: Tuple[float, ...] = DEFAULT_DENSITIES
    instances_per_point: int = DEFAULT_INSTANCES
    algorithms: Tuple[str, ...] = ALGORITHMS
    template: GenParams = field(default_factory=GenParams)
    base_seed: int = 0
    scheduler: str = RANDOM
    risk_mode: str = OFFLINE
    risk_default: float = DEFAULT_RISK
    learn: bool = False
    walltime: bool = False
    workers: int = 1

    def validate(self) -> "SweepSpec":
        if self.instances_per_point < 1:
            raise ValueError(f"instances per point must be at least 1, got {self.instances_per_point}")
        if not self.densities:
            raise ValueError("at least one density is required")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithm '{unknown[0]}', expected one of {ALGORITHMS}")
        for density in self.densities:
            self.template.with_density(density).validate()
        return self


@dataclass(frozen=True)
class WorkItem:
    algorithm: str
    params: GenParams
    config: SolveConfig
    stats: Optional[FutilityStats] = None
    walltime: bool = False


@dataclass(frozen=True)
class AggregateRow:
    algorithm: str
    density: Optional[float]
    distribution: str
    instances: int
    privacy_loss_mean: float
    messages_mean: float
    solved_rate: float
    interrupted_rate: float
    step_limit_rate: float
    walltime_ms_mean: float

    def to_csv_row(self) -> List[str]:
        density = "all" if self.density is None else f"{self.density:.6f}"
        return [self.algorithm, density, self.distribution, str(self.instances),
                f"{self.privacy_loss_mean:.6f}", f"{self.messages_mean:.6f}", f"{self.solved_rate:.6f}",
                f"{self.interrupted_rate:.6f}", f"{self.step_limit_rate:.6f}", f"{self.walltime_ms_mean:.3f}"]


@dataclass
class BatchResult:
    rows: List[AggregateRow]
    runs: List[RunMetrics]
    book: StatsBook


def parse_densities(text: str) -> Tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(part) for part in text.split(":"))
        if step <= 0:
            raise ValueError(f"density step must be positive in '{text}'")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(part) for part in text.split(","))


def run_item(item: WorkItem) -> Tuple[RunMetrics, Outcome]:
    instance = generate(item.params)
    started = time.perf_counter() if item.walltime else None
    outcome, _ = solve_instance(instance, item.config, item.stats)
    wall_time = (time.perf_counter() - started) * 1000 if started is not None else 0.0
    return RunMetrics(
        algorithm=item.algorithm,
        seed=item.params.seed,
        density=item.params.density,
        distribution=item.params.distribution,
        privacy_loss=outcome.ledger.mean(),
        messages=outcome.messages,
        solved=outcome.solved,
        interrupted=outcome.interrupted,
        step_limited=outcome.status == STEP_LIMIT,
        wall_time_ms=wall_time,
    ), outcome


def run_serialized(payload: bytes):
    """Unpickles a work item and runs it in a worker process."""
    return run_item(dill.loads(payload))


def run_items(items: Sequence[WorkItem], workers: int = 1) -> list:
    if workers <= 1:
        return [run_item(item) for item in items]
    ctx_mp = get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx_mp) as executor:
        futures = [executor.submit(run_serialized, dill.dumps(item)) for item in items]
        return [future.result() for future in futures]


def _work_items(spec: SweepSpec, algorithms: Sequence[str], book: StatsBook, bucketed: bool) -> List[WorkItem]:
    items = []
    for i, density in enumerate(spec.densities):
        for algorithm in algorithms:
            stats = None
            if is_utility(algorithm):
                stats = book.lookup(density if bucketed else None, source=BASE_OF[algorithm])
            for k in range(spec.instances_per_point):
                seed = derive_seed(spec.base_seed, i, k)
                config = SolveConfig(algorithm=algorithm, scheduler=spec.scheduler,
                                     sched_seed=derive_seed(seed, 0), risk_mode=spec.risk_mode,
                                     risk_default=spec.risk_default)
                params = spec.template.with_density(density).with_seed(seed)
                items.append(WorkItem(algorithm, params, config, stats, spec.walltime))
    return items


def run_batch(spec: SweepSpec, book: Optional[StatsBook] = None) -> BatchResult:
    """Run the sweep; with ``learn`` each base algorithm first fills its own stats section."""
    spec.validate()
    book = book if book is not None else StatsBook()
    if spec.learn:
        learners = [SYNCBT, ABT]
        appliers = [a for a in spec.algorithms if is_utility(a)]
        learned = run_items(_work_items(spec, learners, book, bucketed=True), spec.workers)
        for metrics, outcome in learned:
            book.record(outcome, metrics.density, source=metrics.algorithm)
        applied = run_items(_work_items(spec, appliers, book, bucketed=True), spec.workers)
        by_algorithm: Dict[str, list] = {}
        for metrics, _ in learned + applied:
            by_algorithm.setdefault(metrics.algorithm, []).append(metrics)
        runs = [m for a in spec.algorithms for m in by_algorithm.get(a, [])]
    else:
        runs = [metrics for metrics, _ in run_items(_work_items(spec, spec.algorithms, book, False), spec.workers)]
    return BatchResult(aggregate(runs, spec), runs, book)


def _aggregate_group(algorithm: str, density: Optional[float], distribution: str,
                     group: Sequence[RunMetrics]) -> AggregateRow:
    return AggregateRow(
        algorithm=algorithm,
        density=density,
        distribution=distribution,
        instances=len(group),
        privacy_loss_mean=float(np.mean([m.privacy_loss for m in group])),
        messages_mean=float(np.mean([m.messages for m in group])),
        solved_rate=float(np.mean([m.solved for m in group])),
        interrupted_rate=float(np.mean([m.interrupted for m in group])),
        step_limit_rate=float(np.mean([m.step_limited for m in group])),
        walltime_ms_mean=float(np.mean([m.wall_time_ms for m in group])),
    )


def aggregate(runs: Sequence[RunMetrics], spec: SweepSpec) -> List[AggregateRow]:
    rows = []
    for density in spec.densities:
        for algorithm in spec.algorithms:
            group = [m for m in runs if m.algorithm == algorithm and m.density == density]
            if group:
                rows.append(_aggregate_group(algorithm, density, spec.template.distribution, group))
    return rows


def summarize(runs: Sequence[RunMetrics]) -> Dict[str, AggregateRow]:
    """Per-algorithm aggregates across every density."""
    summary = {}
    for algorithm in dict.fromkeys(m.algorithm for m in runs):
        group = [m for m in runs if m.algorithm == algorithm]
        summary[algorithm] = _aggregate_group(algorithm, None, group[0].distribution, group)
    return summary


def csv_text(rows: Sequence[AggregateRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.to_csv_row())
    return buffer.getvalue()


def write_csv(rows: Sequence[AggregateRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows), encoding="utf-8")
    return path


MESSAGE_RATIO_MIN = 20.0
ABTU_MESSAGE_SHARE_MAX = 0.5
INTERRUPTING_DENSITY = 0.3
SOLVED_RATE_RANGE = (0.05, 0.5)


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    holds: bool
    required: bool = True


@dataclass(frozen=True)
class OrderingReport:
    """Required checks decide ``holds``; the others are reported figures."""
    checks: Tuple[Check, ...]

    @property
    def holds(self) -> bool:
        return all(check.holds for check in self.checks if check.required)

    @property
    def violations(self) -> List[Check]:
        return [check for check in self.checks if check.required and not check.holds]

    @property
    def figures(self) -> Dict[str, float]:
        return {check.name: check.lhs for check in self.checks if not check.required}

    def format(self) -> str:
        def tag(c):
            if not c.required:
                return "info"
            return "ok  " if c.holds else "FAIL"
        return "\n".join(f"{tag(c)} {c.name}: {c.lhs:.6f} vs {c.rhs:.6f}" for c in self.checks)


def _reduction(utility: float, base: float) -> float:
    return 1 - utility / base if base else 0.0


def compare_algorithms(runs: Sequence[RunMetrics]) -> OrderingReport:
    """Paired orderings between the four algorithms over the same instance seeds.

    Required checks cover the privacy and message orderings, the interruption
    rates and the solved-rate band. Relative reductions of the utility
    variants against their base algorithms are reported without a threshold.
    """
    seeds = {}
    for m in runs:
        seeds.setdefault(m.algorithm, set()).add((m.density, m.seed))
    missing = [a for a in ALGORITHMS if a not in seeds]
    if missing:
        raise ValueError(f"no results for algorithm '{missing[0]}'")
    reference = seeds[SYNCBT]
    for algorithm, seen in seeds.items():
        if seen != reference:
            raise ValueError(f"seed set of '{algorithm}' differs from '{SYNCBT}'")
    s = summarize(runs)

    def check(name, lhs, rhs, holds, required=True):
        return Check(name, float(lhs), float(rhs), bool(holds), required)

    loss = {a: s[a].privacy_loss_mean for a in ALGORITHMS}
    messages = {a: s[a].messages_mean for a in ALGORITHMS}
    ratio = messages[ABT] / messages[SYNCBT] if messages[SYNCBT] else float("inf")
    checks = [
        check("privacy syncbtu < syncbt", loss[SYNCBTU], loss[SYNCBT], loss[SYNCBTU] < loss[SYNCBT]),
        check("privacy abtu < abt", loss[ABTU], loss[ABT], loss[ABTU] < loss[ABT]),
        check("privacy syncbt < abt", loss[SYNCBT], loss[ABT], loss[SYNCBT] < loss[ABT]),
        check("messages syncbt < abt", messages[SYNCBT], messages[ABT], messages[SYNCBT] < messages[ABT]),
        check("messages abt / syncbt > 20", ratio, MESSAGE_RATIO_MIN, ratio > MESSAGE_RATIO_MIN),
        check("messages abtu < 0.5 abt", messages[ABTU], ABTU_MESSAGE_SHARE_MAX * messages[ABT],
              messages[ABTU] < ABTU_MESSAGE_SHARE_MAX * messages[ABT]),
        check("interruptions syncbt == 0", s[SYNCBT].interrupted_rate, 0, s[SYNCBT].interrupted_rate == 0),
        check("interruptions abt == 0", s[ABT].interrupted_rate, 0, s[ABT].interrupted_rate == 0),
    ]
    dense = [m.interrupted for m in runs if m.algorithm == ABTU and m.density >= INTERRUPTING_DENSITY]
    if dense:
        rate = float(np.mean(dense))
        checks.append(check("interruptions abtu > 0 at density >= 0.3", rate, 0, rate > 0))
    low, high = SOLVED_RATE_RANGE
    for algorithm in ALGORITHMS:
        rate = s[algorithm].solved_rate
        checks.append(check(f"solved {algorithm} in [0.05, 0.5]", rate, low, low <= rate <= high))
    for utility, base in ((SYNCBTU, SYNCBT), (ABTU, ABT)):
        checks += [
            check(f"privacy reduction {utility}", _reduction(loss[utility], loss[base]), 0, True, False),
            check(f"message reduction {utility}", _reduction(messages[utility], messages[base]), 0, True, False),
            check(f"walltime reduction {utility}", _reduction(s[utility].walltime_ms_mean,
                                                              s[base].walltime_ms_mean), 0, True, False),
        ]
    solved_base = sum(m.solved for m in runs if m.algorithm in (SYNCBT, ABT))
    solved_utility = sum(m.solved for m in runs if m.algorithm in (SYNCBTU, ABTU))
    retention = solved_utility / solved_base if solved_base else 1.0
    checks.append(check("solved retention utility / base", retention, 1, True, False))
    return OrderingReport(tuple(checks))
