"""SyncBT and ABT agents over the simulated runtime.

Both agents expose two hooks that the utility-based variants override:
``choose`` picks among consistent candidate values and ``guard`` is asked
before every send that would reveal new (agent, value) facts.
"""
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .runtime import ADDLINK, EXHAUSTED, NOGOOD, OK, Agent, AgentContext, Message

Nogood = FrozenSet[Tuple[int, int]]


class DecisionHooks:

    def choose(self, ctx: AgentContext, candidates: Sequence[int]) -> int:
        return candidates[0]

    def guard(self, ctx: AgentContext, revealing: Sequence[int]) -> bool:
        """Return False after halting the run instead of performing the send."""
        return True


class SyncBTAgent(DecisionHooks, Agent):
    """Synchronous backtracking: one current partial assignment (CPA) travels down the priority order."""

    def __init__(self, index: int):
        super().__init__(index)
        self.cpa: Optional[Tuple[Optional[int], ...]] = None
        self.tried: Set[int] = set()
        self.pending = False

    def start(self, ctx):
        if self.index == 1:
            self.cpa = (None,) * ctx.instance.n
            self.assign(ctx)

    def receive(self, message: Message, ctx):
        if message.kind == OK:
            self.cpa = message.cpa
            self.tried = set()
        elif message.kind == NOGOOD and self.value is not None:
            self.tried.add(self.value)
        self.value = None
        self.pending = True

    def settle(self, ctx):
        if self.pending:
            self.pending = False
            self.assign(ctx)

    def required(self) -> Optional[int]:
        """The value the higher agents agreed on, if any."""
        return self.cpa[0] if self.index > 1 else None

    def candidates(self, ctx) -> List[int]:
        required = self.required()
        return [v for v in ctx.instance.domain(self.index)
                if v not in self.tried and (required is None or v == required)]

    def assign(self, ctx):
        candidates = self.candidates(ctx)
        if not candidates:
            return self.backtrack(ctx)
        value = self.choose(ctx, candidates)
        if self.index == ctx.instance.n:
            self.value = value
            return
        if not self.guard(ctx, [value]):
            return
        ctx.charge(value)
        self.value = value
        cpa = list(self.cpa)
        cpa[self.index - 1] = value
        ctx.send(OK, self.index + 1, pair=(self.index, value), cpa=tuple(cpa))

    def backtrack(self, ctx):
        instance = ctx.instance
        if self.index == 1:
            for v in instance.values:
                if not instance.available(1, v):
                    ctx.charge(v)
            return ctx.stop(EXHAUSTED)
        required = self.required()
        revealing = [required] if not instance.available(self.index, required) else []
        if not self.guard(ctx, revealing):
            return
        for v in revealing:
            ctx.charge(v)
        nogood = frozenset((j, self.cpa[j - 1]) for j in range(1, self.index))
        ctx.send(NOGOOD, self.index - 1, nogood=nogood)

    def is_settled(self, ctx) -> bool:
        if self.value is None or self.cpa is None:
            return False
        return all(self.cpa[j - 1] == self.value for j in range(1, self.index))


class ABTAgent(DecisionHooks, Agent):
    """Asynchronous backtracking with agent-view nogoods.

    ``view`` holds the active values of higher agents; ``known`` keeps the last
    value received from each of them, including agents retracted from the
    view by a backtrack, and is what stored nogoods are matched against.
    """

    def __init__(self, index: int):
        super().__init__(index)
        self.view: Dict[int, int] = {}
        self.known: Dict[int, int] = {}
        self.nogoods: Set[Nogood] = set()
        self.links: Set[int] = set()
        self.linked: Set[int] = set()
        self.pending = False

    def start(self, ctx):
        self.links = set(range(self.index + 1, ctx.instance.n + 1))
        self.linked = set(range(1, self.index))
        self.check(ctx)

    def applies(self, nogood: Nogood, value: int) -> bool:
        if (self.index, value) not in nogood:
            return False
        return all(self.known.get(j) == w for j, w in nogood if j != self.index)

    def consistent(self, ctx, value: int) -> bool:
        if not ctx.instance.available(self.index, value):
            return False
        if any(w != value for w in self.view.values()):
            return False
        return not any(self.applies(nogood, value) for nogood in self.nogoods)

    def consistent_values(self, ctx) -> List[int]:
        return [v for v in ctx.instance.values if self.consistent(ctx, v)]

    def receive(self, message: Message, ctx):
        if message.kind == OK:
            agent, value = message.pair
            self.view[agent] = self.known[agent] = value
            self.nogoods = {ng for ng in self.nogoods if all(w == value for j, w in ng if j == agent)}
            self.pending = True
        elif message.kind == NOGOOD:
            self.receive_nogood(message, ctx)
        elif message.kind == ADDLINK:
            self.links.add(message.sender)
            if self.value is not None:
                self.reply(ctx, message.sender)

    def receive_nogood(self, message: Message, ctx):
        own = dict(message.nogood).get(self.index)
        if own is None or own != self.value:
            return
        coherent = all(self.known.get(j, w) == w for j, w in message.nogood if j != self.index)
        if not coherent:
            self.reply(ctx, message.sender)
            return
        for j, w in sorted(message.nogood):
            if j != self.index and j not in self.view:
                self.view[j] = self.known[j] = w
                if j not in self.linked:
                    self.linked.add(j)
                    ctx.send(ADDLINK, j)
        self.nogoods.add(message.nogood)
        self.pending = True

    def reply(self, ctx, recipient: int):
        if not ctx.ledger.is_revealed(self.index, self.value):
            if not self.guard(ctx, [self.value]):
                return
            ctx.charge(self.value)
        ctx.send(OK, recipient, pair=(self.index, self.value))

    def settle(self, ctx):
        if self.pending:
            self.pending = False
            self.check(ctx)

    def check(self, ctx):
        if self.value is not None and self.consistent(ctx, self.value):
            return
        candidates = self.consistent_values(ctx)
        if candidates:
            return self.announce(ctx, self.choose(ctx, candidates))
        self.backtrack(ctx)

    def announce(self, ctx, value: int):
        recipients = sorted(self.links)
        if recipients:
            if not self.guard(ctx, [value]):
                return
            ctx.charge(value)
        self.value = value
        for recipient in recipients:
            ctx.send(OK, recipient, pair=(self.index, value))

    def conflict_set(self, ctx) -> Set[int]:
        available = ctx.instance.domain(self.index)
        conflict = {j for j, w in self.view.items() if any(v != w for v in available)}
        for nogood in self.nogoods:
            if any(self.applies(nogood, v) for v in available):
                conflict |= {j for j, _ in nogood if j != self.index}
        return conflict

    def backtrack(self, ctx):
        instance = ctx.instance
        leaked = [v for v in instance.values
                  if not instance.available(self.index, v) and all(w == v for w in self.view.values())]
        conflict = self.conflict_set(ctx)
        if not conflict:
            for v in leaked:
                ctx.charge(v)
            return ctx.stop(EXHAUSTED)
        if not self.guard(ctx, [v for v in leaked if not ctx.ledger.is_revealed(self.index, v)]):
            return
        for v in leaked:
            ctx.charge(v)
        target = max(conflict)
        nogood = frozenset((j, self.view.get(j, self.known.get(j))) for j in conflict)
        ctx.send(NOGOOD, target, nogood=nogood)
        self.view.pop(target, None)
        candidates = self.consistent_values(ctx)
        if candidates:
            self.announce(ctx, self.choose(ctx, candidates))

    def is_settled(self, ctx) -> bool:
        if self.value is None or set(self.view) != set(range(1, self.index)):
            return False
        return self.consistent(ctx, self.value)

    def on_quiescence(self, ctx):
        if self.is_settled(ctx):
            return
        missing = [j for j in range(1, self.index) if j not in self.view]
        for j in missing:
            ctx.send(ADDLINK, j)
        if not missing:
            self.check(ctx)
