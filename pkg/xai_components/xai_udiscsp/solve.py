"""Algorithm registry and the one-call solve entry point."""
from dataclasses import dataclass
from typing import Optional, Tuple

from .model import Instance
from .runtime import PRIORITY, Outcome, World, emit_trace
from .solvers import ABTAgent, SyncBTAgent
from .utility import DEFAULT_RISK, LOWEST, OFFLINE, ABTUAgent, FutilityStats, RiskModel, SyncBTUAgent

SYNCBT = "syncbt"
ABT = "abt"
SYNCBTU = "syncbtu"
ABTU = "abtu"
ALGORITHMS = (SYNCBT, ABT, SYNCBTU, ABTU)

BASE_OF = {SYNCBTU: SYNCBT, ABTU: ABT}


@dataclass(frozen=True)
class SolveConfig:
    algorithm: str = ABT
    scheduler: str = PRIORITY
    sched_seed: int = 0
    step_limit: Optional[int] = None
    risk_mode: str = OFFLINE
    risk_default: float = DEFAULT_RISK
    tie_break: str = LOWEST


def is_utility(algorithm: str) -> bool:
    return algorithm in BASE_OF


def make_agents(algorithm: str, instance: Instance, tie_break: str = LOWEST, seed: int = 0) -> list:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm '{algorithm}', expected one of {ALGORITHMS}")
    if algorithm == SYNCBT:
        return [SyncBTAgent(i) for i in instance.agents]
    if algorithm == ABT:
        return [ABTAgent(i) for i in instance.agents]
    factory = SyncBTUAgent if algorithm == SYNCBTU else ABTUAgent
    return [factory(i, tie_break=tie_break, seed=seed + i) for i in instance.agents]


def build_world(instance: Instance, config: SolveConfig, stats: Optional[FutilityStats] = None) -> World:
    risk = None
    if is_utility(config.algorithm):
        risk = RiskModel(stats, mode=config.risk_mode, default=config.risk_default)
    agents = make_agents(config.algorithm, instance, config.tie_break, config.sched_seed)
    return World(instance, agents, scheduler=config.scheduler, seed=config.sched_seed, risk=risk)


def solve_instance(instance: Instance, config: SolveConfig = SolveConfig(),
                   stats: Optional[FutilityStats] = None) -> Tuple[Outcome, str]:
    """Run one algorithm to completion and return its outcome with the rendered trace."""
    world = build_world(instance, config, stats)
    outcome = world.run_to_completion(config.step_limit)
    return outcome, emit_trace(world)


def format_outcome(outcome: Outcome, algorithm: str) -> str:
    lines = [
        f"algorithm: {algorithm}",
        f"status: {outcome.status}",
        f"messages: {outcome.messages}",
        "privacy loss: " + " ".join(f"A{i}={loss:g}" for i, loss in enumerate(outcome.ledger.loss_per_agent, start=1)),
        f"privacy loss mean: {outcome.ledger.mean():.6f}",
    ]
    if outcome.assignment is not None:
        lines.append(f"agreement: x={outcome.assignment[1]}")
    if outcome.stopped_by is not None:
        lines.append(f"stopped by: A{outcome.stopped_by}")
    return "\n".join(lines)
