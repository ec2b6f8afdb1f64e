"""Futility-risk learning, expected privacy cost and the interruption decision.

The utility agents (SyncBTU, ABTU) rank candidate values by expected utility
``reward - estimatedCost`` and halt the run as soon as continuing is expected
to cost at least the agreement reward.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

from .generator import make_rng
from .model import Instance, PrivacyLedger, marginal_cost
from .runtime import INTERRUPTED, Outcome
from .solvers import ABTAgent, SyncBTAgent

DEFAULT_RISK = 0.5

OFFLINE = "offline"
ONLINE = "online"
RISK_MODES = (OFFLINE, ONLINE)

CONTINUE = "continue"
INTERRUPT = "interrupt"

LOWEST = "lowest"
RANDOM_TIE = "random"
TIE_BREAKS = (LOWEST, RANDOM_TIE)


@dataclass(frozen=True)
class FutilityStats:
    count: int = 0
    termination_count: int = 0

    def __post_init__(self):
        if not 0 <= self.termination_count <= self.count:
            raise ValueError(f"need 0 <= terminationCount <= count, got "
                             f"{self.termination_count} / {self.count}")

    def to_document(self) -> dict:
        return {"count": self.count, "terminationCount": self.termination_count}

    @classmethod
    def from_document(cls, document: dict) -> "FutilityStats":
        return cls(int(document.get("count", 0)), int(document.get("terminationCount", 0)))


def futility_risk(stats: FutilityStats, default: float = DEFAULT_RISK) -> float:
    if stats.count == 0:
        return default
    return 1 - stats.termination_count / stats.count


def record_send(stats: FutilityStats, sends: int = 1) -> FutilityStats:
    return FutilityStats(stats.count + sends, stats.termination_count)


def record_termination(stats: FutilityStats, messages_in_run: int, terminated: bool = True) -> FutilityStats:
    if messages_in_run == 0 or not terminated:
        return stats
    return FutilityStats(stats.count, stats.termination_count + 1)


def learn(stats: FutilityStats, outcome: Outcome) -> FutilityStats:
    sends = outcome.decision_messages
    stats = record_send(stats, sends)
    return record_termination(stats, sends, outcome.terminated)


def calculate_cost(risk: float, costs: Sequence[float], prob_d: float = 1.0) -> float:
    """Expected privacy cost of revealing ``costs`` in order.

    Each further value is revealed only if the previous proposal was futile,
    so the k-th cost is weighted by ``prob_d * risk**(k-1)``.
    """
    if len(costs) == 0:
        raise ValueError("calculate_cost needs at least one value")
    if len(costs) == 1:
        return costs[0] * prob_d
    return costs[0] * prob_d + calculate_cost(risk, costs[1:], risk * prob_d)


def unrevealed_costs(instance: Instance, ledger: PrivacyLedger, agent: int, first: Sequence[int]) -> list:
    """Marginal costs of ``first`` followed by every other unrevealed value in ascending order."""
    rest = [v for v in instance.values if v not in first and not ledger.is_revealed(agent, v)]
    return [marginal_cost(instance, ledger, agent, v) for v in list(first) + rest]


def estimated_cost(ledger: PrivacyLedger, risk: float, unrevealed: Sequence[float], agent: int) -> float:
    return ledger.loss(agent) + calculate_cost(risk, unrevealed, 1.0)


def decide_continue(ledger: PrivacyLedger, risk: float, unrevealed: Sequence[float], reward: float,
                    agent: int) -> str:
    if estimated_cost(ledger, risk, unrevealed, agent) >= reward:
        return INTERRUPT
    return CONTINUE


class RiskModel:
    """Risk snapshot handed to one run; online mode keeps counting the run's own sends.

    A run's own termination is only known once it is over, so online mode
    never adds a termination and the in-run risk can only rise. Terminations
    reach later runs through ``StatsBook.record``.
    """

    def __init__(self, stats: Optional[FutilityStats] = None, mode: str = OFFLINE, default: float = DEFAULT_RISK):
        if mode not in RISK_MODES:
            raise ValueError(f"unknown risk mode '{mode}', expected one of {RISK_MODES}")
        self.stats = stats if stats is not None else FutilityStats()
        self.mode = mode
        self.default = default

    @property
    def futility_risk(self) -> float:
        return futility_risk(self.stats, self.default)

    def observe_send(self, kind: str) -> None:
        if self.mode == ONLINE:
            self.stats = record_send(self.stats)


def density_key(density: float) -> str:
    return f"{density:.6f}"


@dataclass
class StatsBook:
    """Futility stats with optional per-density buckets and per-algorithm sections.

    A section holds what one base algorithm learned. Lookups naming a source
    read that section and fall back to the top-level stats when it is absent.
    """
    total: FutilityStats = field(default_factory=FutilityStats)
    buckets: Dict[str, FutilityStats] = field(default_factory=dict)
    sections: Dict[str, "StatsBook"] = field(default_factory=dict)

    def section(self, source: str) -> "StatsBook":
        return self.sections.setdefault(source, StatsBook())

    def lookup(self, density: Optional[float] = None, source: Optional[str] = None) -> FutilityStats:
        if source is not None and source in self.sections:
            return self.sections[source].lookup(density)
        if density is None:
            return self.total
        return self.buckets.get(density_key(density), self.total)

    def record(self, outcome: Outcome, density: Optional[float] = None, source: Optional[str] = None) -> None:
        if source is not None:
            return self.section(source).record(outcome, density)
        self.total = learn(self.total, outcome)
        if density is not None:
            key = density_key(density)
            self.buckets[key] = learn(self.buckets.get(key, FutilityStats()), outcome)

    def to_document(self) -> dict:
        document = self.total.to_document()
        document["buckets"] = {key: stats.to_document() for key, stats in sorted(self.buckets.items())}
        if self.sections:
            document["algorithms"] = {name: book.to_document() for name, book in sorted(self.sections.items())}
        return document

    @classmethod
    def from_document(cls, document: dict) -> "StatsBook":
        buckets = {key: FutilityStats.from_document(value) for key, value in document.get("buckets", {}).items()}
        sections = {name: cls.from_document(value) for name, value in document.get("algorithms", {}).items()}
        return cls(FutilityStats.from_document(document), buckets, sections)


def load_stats(path) -> StatsBook:
    """Read a stats file; a missing file is an empty book, anything unreadable is a ValueError."""
    path = Path(path)
    if not path.exists():
        return StatsBook()
    try:
        return StatsBook.from_document(json.loads(path.read_text(encoding="utf-8")))
    except (ValueError, TypeError, AttributeError) as e:
        raise ValueError(f"{path}: invalid futility stats ({e})") from e


def save_stats(book: StatsBook, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(book.to_document(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class UtilityHooks:
    """Expected-utility value choice and the interruption guard."""

    def __init__(self, index: int, tie_break: str = LOWEST, seed: int = 0):
        super().__init__(index)
        if tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie break '{tie_break}', expected one of {TIE_BREAKS}")
        self.tie_break = tie_break
        self.rng = make_rng(seed)

    @staticmethod
    def current_risk(ctx) -> float:
        return ctx.risk.futility_risk if ctx.risk is not None else DEFAULT_RISK

    def estimate(self, ctx, first: Sequence[int]) -> float:
        costs = unrevealed_costs(ctx.instance, ctx.ledger, self.index, first)
        return estimated_cost(ctx.ledger, self.current_risk(ctx), costs, self.index)

    def choose(self, ctx, candidates):
        reward = ctx.instance.reward(self.index)
        utilities = [reward - self.estimate(ctx, [v]) for v in candidates]
        best = max(utilities)
        tied = [v for v, u in zip(candidates, utilities) if u == best]
        if self.tie_break == RANDOM_TIE and len(tied) > 1:
            return tied[int(self.rng.integers(len(tied)))]
        return tied[0]

    def guard(self, ctx, revealing):
        fresh = [v for v in revealing if not ctx.ledger.is_revealed(self.index, v)]
        if not fresh:
            return True
        costs = unrevealed_costs(ctx.instance, ctx.ledger, self.index, fresh)
        decision = decide_continue(ctx.ledger, self.current_risk(ctx), costs,
                                   ctx.instance.reward(self.index), self.index)
        if decision == INTERRUPT:
            ctx.stop(INTERRUPTED)
            return False
        return True


class SyncBTUAgent(UtilityHooks, SyncBTAgent):
    pass


class ABTUAgent(UtilityHooks, ABTAgent):
    pass
