"""Deterministic simulated message passing for UDisCSP agents.

Every agent owns a FIFO mailbox. A scheduler picks which mailbox delivers
next. Under the priority scheduler an agent "settles" (acts on what it has
received) once a delivery leaves its mailbox empty; under the random
scheduler it settles after every delivery. Sends made while handling step
``k`` carry the stamp ``k`` (initialization sends carry 0).
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from xai_components.base import StructuredDebugLogger

from .generator import make_rng
from .model import Assignment, Instance, PrivacyLedger, charge_revelation, is_agreement

OK = "ok"
NOGOOD = "nogood"
ADDLINK = "addlink"
KINDS = (OK, NOGOOD, ADDLINK)

EXHAUSTED = "exhausted"
INTERRUPTED = "interrupted"

AGREEMENT = "agreement"
NO_SOLUTION = "no-solution"
STEP_LIMIT = "step-limit"
STATUSES = (AGREEMENT, NO_SOLUTION, INTERRUPTED, STEP_LIMIT)

PRIORITY = "priority"
RANDOM = "random"
SCHEDULERS = (PRIORITY, RANDOM)

STEP_LIMIT_PER_AGENT = 10_000

Pair = Tuple[int, int]


@dataclass(frozen=True)
class Message:
    kind: str
    sender: int
    recipient: int
    pair: Optional[Pair] = None
    nogood: FrozenSet[Pair] = frozenset()
    cpa: Tuple[Optional[int], ...] = ()
    stamp: int = 0
    seq: int = 0

    def __post_init__(self):
        if self.sender == self.recipient:
            raise ValueError(f"agent {self.sender} cannot message itself")
        if self.kind not in KINDS:
            raise ValueError(f"unknown message kind '{self.kind}'")

    def label(self) -> str:
        if self.kind == ADDLINK:
            return f"ADDLINK(x{self.sender})"
        if self.kind == OK:
            agent, value = self.pair
            return f"OK?(x{agent}={value})"
        shown = dict(self.nogood)
        agent = self.recipient if self.recipient in shown else max(shown, default=self.recipient)
        return f"BT(x{agent}={shown.get(agent, '')})"


@dataclass(frozen=True)
class Outcome:
    status: str
    assignment: Optional[Assignment]
    ledger: PrivacyLedger
    messages: int
    steps: int
    sent: int = 0
    sent_by_kind: Dict[str, int] = field(default_factory=dict)
    stopped_by: Optional[int] = None

    @property
    def solved(self) -> bool:
        return self.status == AGREEMENT

    @property
    def interrupted(self) -> bool:
        return self.status == INTERRUPTED

    @property
    def terminated(self) -> bool:
        """Runs that ended by the algorithm's own termination: agreement or proven infeasibility."""
        return self.status in (AGREEMENT, NO_SOLUTION)

    @property
    def decision_messages(self) -> int:
        return self.sent_by_kind.get(OK, 0) + self.sent_by_kind.get(NOGOOD, 0)


class Agent:
    """Base class for solver agents; the runtime only calls these hooks."""

    def __init__(self, index: int):
        self.index = index
        self.value: Optional[int] = None

    def start(self, ctx: "AgentContext") -> None:
        pass

    def receive(self, message: Message, ctx: "AgentContext") -> None:
        pass

    def settle(self, ctx: "AgentContext") -> None:
        pass

    def is_settled(self, ctx: "AgentContext") -> bool:
        """Consistent with a complete view of every higher-priority agent."""
        return False

    def on_quiescence(self, ctx: "AgentContext") -> None:
        pass


class AgentContext:
    """What an agent may see and do during one of its hooks."""

    def __init__(self, world: "World", agent: Agent):
        self._world = world
        self.agent = agent

    @property
    def instance(self) -> Instance:
        return self._world.instance

    @property
    def ledger(self) -> PrivacyLedger:
        return self._world.ledger

    @property
    def risk(self):
        return self._world.risk

    @property
    def halted(self) -> bool:
        return self._world.halt_reason is not None

    def send(self, kind: str, recipient: int, **payload) -> None:
        self._world.enqueue(kind, self.agent.index, recipient, **payload)

    def charge(self, value: int) -> None:
        self._world.ledger = charge_revelation(self._world.ledger, self.instance, self.agent.index, value)

    def stop(self, reason: str) -> None:
        self._world.halt(self.agent.index, reason)


class World:

    def __init__(self, instance: Instance, agents: Sequence[Agent], scheduler: str = PRIORITY,
                 seed: int = 0, risk=None):
        if scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler '{scheduler}', expected one of {SCHEDULERS}")
        if [a.index for a in agents] != list(instance.agents):
            raise ValueError("agents must be given in priority order 1..n")
        self.instance = instance
        self.agents = list(agents)
        self.scheduler = scheduler
        self.settle_each = scheduler == RANDOM
        self.seed = seed
        self.risk = risk
        self.rng = make_rng(seed)
        self.mailboxes: Dict[int, deque] = {a.index: deque() for a in self.agents}
        self.contexts = {a.index: AgentContext(self, a) for a in self.agents}
        self.ledger = PrivacyLedger.empty(instance.n)
        self.step_count = 0
        self.sent = 0
        self.sent_by_kind = {kind: 0 for kind in KINDS}
        self.trace: List[Message] = []
        self.halt_reason: Optional[str] = None
        self.halted_by: Optional[int] = None
        self.initialized = False
        self.logger = StructuredDebugLogger.get_logger()

    def initialize(self) -> "World":
        if not self.initialized:
            self.initialized = True
            self.logger.log_event('run_start', n=self.instance.n, d=self.instance.d,
                                  agents=type(self.agents[0]).__name__, scheduler=self.scheduler, seed=self.seed)
            for agent in reversed(self.agents):
                if self.halt_reason is not None:
                    break
                agent.start(self.contexts[agent.index])
        return self

    def enqueue(self, kind: str, sender: int, recipient: int, **payload) -> None:
        if self.halt_reason is not None:
            return
        message = Message(kind, sender, recipient, stamp=self.step_count, seq=self.sent, **payload)
        self.mailboxes[recipient].append(message)
        self.sent += 1
        self.sent_by_kind[kind] += 1
        if self.risk is not None and kind in (OK, NOGOOD):
            self.risk.observe_send(kind)

    def halt(self, agent: int, reason: str) -> None:
        if self.halt_reason is None:
            self.halt_reason = reason
            self.halted_by = agent
            dropped = sum(len(box) for box in self.mailboxes.values())
            level = 'INFO' if reason == EXHAUSTED else 'WARNING'
            self.logger.log_event('stop', level=level, agent=agent, reason=reason,
                                  step=self.step_count, dropped=dropped)
            for box in self.mailboxes.values():
                box.clear()

    @property
    def pending(self) -> bool:
        return any(self.mailboxes.values())

    def _next_recipient(self) -> int:
        busy = [index for index, box in self.mailboxes.items() if box]
        if self.scheduler == RANDOM:
            return busy[int(self.rng.integers(len(busy)))]
        return min(busy, key=lambda index: (self.mailboxes[index][0].stamp, index, self.mailboxes[index][0].seq))

    def step(self) -> "World":
        if self.halt_reason is not None:
            raise RuntimeError(f"run already halted ({self.halt_reason})")
        if not self.pending:
            raise RuntimeError("no pending messages: the world is quiescent")
        recipient = self._next_recipient()
        message = self.mailboxes[recipient].popleft()
        self.step_count += 1
        self.trace.append(message)
        self.logger.log_event('deliver', step=self.step_count, message=format_message(len(self.trace), message))
        agent = self.agents[recipient - 1]
        ctx = self.contexts[recipient]
        agent.receive(message, ctx)
        if self.halt_reason is None and (self.settle_each or not self.mailboxes[recipient]):
            agent.settle(ctx)
        return self

    def current_assignment(self) -> Assignment:
        return Assignment(a.value for a in self.agents)

    def _quiescent_status(self) -> Optional[str]:
        if all(agent.is_settled(self.contexts[agent.index]) for agent in self.agents):
            assignment = self.current_assignment()
            if not is_agreement(self.instance, assignment):
                raise RuntimeError(f"agents settled on a non-agreement {assignment.values}")
            return AGREEMENT
        self.logger.log_event('quiescence', step=self.step_count,
                              unsettled=[a.index for a in self.agents if not a.is_settled(self.contexts[a.index])])
        for agent in self.agents:
            agent.on_quiescence(self.contexts[agent.index])
        if self.halt_reason is None and not self.pending:
            self.logger.log_event('stalled', level='WARNING', step=self.step_count)
            return STEP_LIMIT
        return None

    def run_to_completion(self, step_limit: Optional[int] = None) -> Outcome:
        if step_limit is None:
            step_limit = STEP_LIMIT_PER_AGENT * self.instance.n
        self.initialize()
        while True:
            if self.halt_reason is not None:
                status = NO_SOLUTION if self.halt_reason == EXHAUSTED else INTERRUPTED
                break
            if not self.pending:
                status = self._quiescent_status()
                if status is not None:
                    break
                continue
            if self.step_count >= step_limit:
                self.logger.log_event('step_limit', level='WARNING', step=self.step_count, limit=step_limit)
                status = STEP_LIMIT
                break
            self.step()
        outcome = Outcome(
            status=status,
            assignment=self.current_assignment() if status == AGREEMENT else None,
            ledger=self.ledger,
            messages=len(self.trace),
            steps=self.step_count,
            sent=self.sent,
            sent_by_kind=dict(self.sent_by_kind),
            stopped_by=self.halted_by,
        )
        self.logger.log_event('run_end', status=status, messages=outcome.messages, sent=outcome.sent,
                              privacy_loss=list(self.ledger.loss_per_agent))
        return outcome


def format_message(k: int, message: Message) -> str:
    return f"M{k} ({message.label()}) {message.sender}→{message.recipient}"


def emit_trace(world: World) -> str:
    return "\n".join(format_message(k, m) for k, m in enumerate(world.trace, start=1))
