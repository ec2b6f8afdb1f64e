"""UDisCSP instances, assignments and privacy accounting.

Agents and values are 1-based everywhere in this package: agent 1 has the
highest priority and values range over ``1..d``.
"""
import json
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

DOCUMENT_FIELDS = ("n", "d", "availability", "costs", "rewards")


class InstanceError(ValueError):
    """Raised for instance documents that cannot be turned into a valid Instance."""


def _freeze(matrix) -> Tuple[tuple, ...]:
    return tuple(tuple(row) for row in matrix)


def _plain(number):
    number = number.item() if isinstance(number, np.generic) else number
    if isinstance(number, float) and number.is_integer():
        return int(number)
    return number


@dataclass(frozen=True)
class Instance:
    """The tuple <A, V, D, C, U, R> with the all-equal constraint implicit.

    ``availability[i][j]`` tells whether value ``j+1`` is in the private
    domain of agent ``i+1``; ``costs[i][j]`` is the cost of revealing it.
    """
    n: int
    d: int
    availability: Tuple[Tuple[bool, ...], ...]
    costs: Tuple[Tuple[float, ...], ...]
    rewards: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "availability", _freeze(self.availability))
        object.__setattr__(self, "costs", _freeze(self.costs))
        object.__setattr__(self, "rewards", tuple(self.rewards))

    @property
    def agents(self) -> range:
        return range(1, self.n + 1)

    @property
    def values(self) -> range:
        return range(1, self.d + 1)

    def check_indices(self, agent: int, value: int) -> None:
        if not 1 <= agent <= self.n:
            raise IndexError(f"agent {agent} outside 1..{self.n}")
        if not 1 <= value <= self.d:
            raise IndexError(f"value {value} outside 1..{self.d}")

    def available(self, agent: int, value: int) -> bool:
        self.check_indices(agent, value)
        return bool(self.availability[agent - 1][value - 1])

    def cost(self, agent: int, value: int) -> float:
        self.check_indices(agent, value)
        return self.costs[agent - 1][value - 1]

    def reward(self, agent: int) -> float:
        return self.rewards[agent - 1]

    def domain(self, agent: int) -> Tuple[int, ...]:
        return tuple(v for v in self.values if self.available(agent, v))

    def with_costs(self, value: float) -> "Instance":
        return replace(self, costs=[[value] * self.d for _ in range(self.n)])

    def with_rewards(self, value: float) -> "Instance":
        return replace(self, rewards=[value] * self.n)

    @classmethod
    def from_domains(cls, d: int, domains: Sequence[Sequence[int]], costs=None, rewards=None) -> "Instance":
        n = len(domains)
        availability = [[v in dom for v in range(1, d + 1)] for dom in domains]
        costs = costs if costs is not None else [[0] * d for _ in range(n)]
        rewards = rewards if rewards is not None else [0] * n
        return cls(n=n, d=d, availability=availability, costs=costs, rewards=rewards)

    @classmethod
    def example(cls) -> "Instance":
        """The professor/two students meeting: 8am, 10am and 2pm are values 1, 2, 3."""
        return cls.from_domains(
            3, [(1, 2), (1, 3), (2, 3)],
            costs=[(1, 2, 4)] * 3,
            rewards=(5, 5, 5),
        )

    def to_document(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "availability": [[bool(a) for a in row] for row in self.availability],
            "costs": [[_plain(c) for c in row] for row in self.costs],
            "rewards": [_plain(r) for r in self.rewards],
        }

    @classmethod
    def from_document(cls, document) -> "Instance":
        if not isinstance(document, dict):
            raise InstanceError("instance document must be an object")
        unknown = sorted(set(document) - set(DOCUMENT_FIELDS))
        if unknown:
            raise InstanceError(f"unknown field '{unknown[0]}'")
        for key in DOCUMENT_FIELDS:
            if key not in document:
                raise InstanceError(f"missing field '{key}'")
        for key in ("n", "d"):
            if isinstance(document[key], bool) or not isinstance(document[key], int):
                raise InstanceError(f"field '{key}' must be an integer")
        try:
            instance = cls(
                n=document["n"],
                d=document["d"],
                availability=document["availability"],
                costs=document["costs"],
                rewards=document["rewards"],
            )
        except TypeError as e:
            raise InstanceError(f"malformed matrix: {e}") from e
        violations = validate(instance)
        if violations:
            raise InstanceError("; ".join(violations))
        return instance


def _matrix_violations(name, matrix, n, d, check_cell):
    violations = []
    if len(matrix) != n:
        return [f"{name}: expected {n} rows, got {len(matrix)}"]
    for i, row in enumerate(matrix, start=1):
        if len(row) != d:
            violations.append(f"{name}: row {i} has {len(row)} columns, expected {d}")
            continue
        for j, cell in enumerate(row, start=1):
            problem = check_cell(cell)
            if problem:
                violations.append(f"{name}: entry ({i},{j}) {problem}")
    return violations


def _check_flag(cell):
    return None if isinstance(cell, (bool, np.bool_)) else "is not a boolean"


def _check_amount(cell):
    if isinstance(cell, bool) or not isinstance(cell, (int, float, np.integer, np.floating)):
        return "is not a number"
    if not np.isfinite(cell):
        return "is not finite"
    if cell < 0:
        return "is negative"
    return None


def validate(instance: Instance) -> list:
    """Return the list of violated Instance invariants; empty means valid."""
    violations = []
    if instance.n < 1:
        violations.append(f"n: must be positive, got {instance.n}")
    if instance.d < 1:
        violations.append(f"d: must be positive, got {instance.d}")
    if violations:
        return violations
    violations += _matrix_violations("availability", instance.availability, instance.n, instance.d, _check_flag)
    violations += _matrix_violations("costs", instance.costs, instance.n, instance.d, _check_amount)
    if len(instance.rewards) != instance.n:
        violations.append(f"rewards: expected {instance.n} entries, got {len(instance.rewards)}")
    else:
        for i, reward in enumerate(instance.rewards, start=1):
            problem = _check_amount(reward)
            if problem:
                violations.append(f"rewards: entry {i} {problem}")
    return violations


@dataclass(frozen=True)
class Assignment:
    """One value per agent in priority order; ``None`` marks an unassigned agent."""
    values: Tuple[Optional[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    @classmethod
    def unassigned(cls, n: int) -> "Assignment":
        return cls((None,) * n)

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.values)

    def __getitem__(self, agent: int) -> Optional[int]:
        return self.values[agent - 1]

    def __len__(self):
        return len(self.values)


def is_agreement(instance: Instance, assignment: Assignment) -> bool:
    if len(assignment) != instance.n:
        raise ValueError(f"assignment has {len(assignment)} entries for {instance.n} agents")
    if not assignment.complete:
        raise ValueError("assignment is only partially assigned")
    first = assignment.values[0]
    if any(v != first for v in assignment.values):
        return False
    if not 1 <= first <= instance.d:
        return False
    return all(instance.available(agent, first) for agent in instance.agents)


def full_assignments(instance: Instance):
    for values in product(instance.values, repeat=instance.n):
        yield Assignment(values)


@dataclass(frozen=True)
class PrivacyLedger:
    """Revealed (agent, value) facts and the cost each agent paid for them.

    Losses are nonnegative magnitudes; a fact is charged at most once.
    """
    revealed: frozenset = field(default_factory=frozenset)
    loss_per_agent: Tuple[float, ...] = ()

    @classmethod
    def empty(cls, n: int) -> "PrivacyLedger":
        return cls(frozenset(), (0,) * n)

    def is_revealed(self, agent: int, value: int) -> bool:
        return (agent, value) in self.revealed

    def loss(self, agent: int) -> float:
        return self.loss_per_agent[agent - 1]

    def total(self) -> float:
        return sum(self.loss_per_agent)

    def mean(self) -> float:
        return self.total() / len(self.loss_per_agent) if self.loss_per_agent else 0.0

    def utility(self, instance: Instance, agreed: bool) -> Tuple[float, ...]:
        return tuple(
            (instance.reward(agent) if agreed else 0) - self.loss(agent)
            for agent in instance.agents
        )


def marginal_cost(instance: Instance, ledger: PrivacyLedger, agent: int, value: int) -> float:
    instance.check_indices(agent, value)
    if ledger.is_revealed(agent, value):
        return 0
    return instance.cost(agent, value)


def charge_revelation(ledger: PrivacyLedger, instance: Instance, agent: int, value: int) -> PrivacyLedger:
    charge = marginal_cost(instance, ledger, agent, value)
    if ledger.is_revealed(agent, value):
        return ledger
    loss = list(ledger.loss_per_agent)
    loss[agent - 1] += charge
    return PrivacyLedger(ledger.revealed | {(agent, value)}, tuple(loss))


def load_instance(path) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from e
    except UnicodeDecodeError as e:
        raise InstanceError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})") from e
    return Instance.from_document(document)


def dump_instance(instance: Instance, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_instance(instance), encoding="utf-8")
    return path


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance.to_document(), indent=2, sort_keys=True) + "\n"
