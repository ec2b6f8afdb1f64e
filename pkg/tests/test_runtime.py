import json

import pytest

from xai_components.xai_udiscsp.generator import GenParams, generate
from xai_components.xai_udiscsp.model import Instance
from xai_components.xai_udiscsp.runtime import (
    AGREEMENT, NO_SOLUTION, NOGOOD, OK, PRIORITY, RANDOM, STEP_LIMIT, Agent, Message, World, emit_trace,
)
from xai_components.xai_udiscsp.solve import ABT, SYNCBT, SolveConfig, build_world, solve_instance
from xai_components.xai_udiscsp.solvers import ABTAgent, SyncBTAgent

SYNCBT_TRACE = [
    "M1 (OK?(x1=1)) 1→2",
    "M2 (OK?(x2=1)) 2→3",
    "M3 (BT(x2=1)) 3→2",
    "M4 (BT(x1=1)) 2→1",
    "M5 (OK?(x1=2)) 1→2",
    "M6 (BT(x1=2)) 2→1",
]

ABT_TRACE = [
    "M1 (OK?(x1=1)) 1→2",
    "M2 (OK?(x2=1)) 2→3",
    "M3 (OK?(x1=1)) 1→3",
    "M4 (BT(x2=1)) 3→2",
    "M5 (BT(x1=1)) 2→1",
    "M6 (OK?(x2=3)) 2→3",
    "M7 (OK?(x1=2)) 1→2",
    "M8 (OK?(x1=2)) 1→3",
    "M9 (BT(x1=2)) 2→1",
]


def unconstrained(n=3, d=3):
    return Instance.from_domains(d, [tuple(range(1, d + 1))] * n)


def test_syncbt_reproduces_synchronous_trace(example):
    outcome, trace = solve_instance(example, SolveConfig(algorithm=SYNCBT, scheduler=PRIORITY))
    assert trace.splitlines() == SYNCBT_TRACE
    assert outcome.status == NO_SOLUTION
    assert outcome.messages == 6
    assert outcome.stopped_by == 1
    assert outcome.ledger.loss_per_agent == (7, 3, 1)


def test_abt_reproduces_asynchronous_trace(example):
    outcome, trace = solve_instance(example, SolveConfig(algorithm=ABT, scheduler=PRIORITY))
    assert trace.splitlines() == ABT_TRACE
    assert outcome.status == NO_SOLUTION
    assert outcome.messages == 9
    assert outcome.ledger.loss_per_agent == (7, 7, 1)
    assert outcome.assignment is None


def test_pending_messages_are_dropped_on_stop(example):
    outcome, _ = solve_instance(example, SolveConfig(algorithm=ABT))
    assert outcome.sent > outcome.messages


def test_syncbt_on_unconstrained_instance():
    outcome, trace = solve_instance(unconstrained(), SolveConfig(algorithm=SYNCBT))
    assert outcome.status == AGREEMENT
    assert outcome.assignment.values == (1, 1, 1)
    assert outcome.messages == 2
    assert outcome.sent_by_kind[OK] == 2
    assert all("OK?" in line for line in trace.splitlines())


def test_zero_step_limit():
    outcome, trace = solve_instance(unconstrained(), SolveConfig(algorithm=SYNCBT, step_limit=0))
    assert outcome.status == STEP_LIMIT
    assert outcome.messages == 0
    assert trace == ""


def test_single_step_consumes_one_message():
    world = World(unconstrained(), [SyncBTAgent(i) for i in (1, 2, 3)]).initialize()
    assert sum(len(box) for box in world.mailboxes.values()) == 1
    world.step()
    assert len(world.trace) == 1
    assert world.trace[0].kind == OK
    assert emit_trace(world) == "M1 (OK?(x1=1)) 1→2"


def test_priority_scheduler_prefers_higher_priority_recipient():
    world = World(unconstrained(), [ABTAgent(i) for i in (1, 2, 3)], scheduler=PRIORITY).initialize()
    first_sent = min((m for box in world.mailboxes.values() for m in box), key=lambda m: m.seq)
    assert first_sent.recipient == 3
    world.step()
    world.step()
    assert [m.recipient for m in world.trace] == [2, 3]


def test_step_on_quiescent_world_raises():
    world = World(unconstrained(), [SyncBTAgent(i) for i in (1, 2, 3)])
    world.run_to_completion()
    with pytest.raises(RuntimeError):
        world.step()


def test_step_on_halted_world_raises(example):
    world = build_world(example, SolveConfig(algorithm=ABT))
    assert world.run_to_completion().status == NO_SOLUTION
    with pytest.raises(RuntimeError, match="halted"):
        world.step()


def test_random_scheduler_is_replayable():
    instance = generate(GenParams(n=6, d=5, density=0.3, seed=21))
    config = SolveConfig(algorithm=ABT, scheduler=RANDOM, sched_seed=99)
    first = solve_instance(instance, config)
    second = solve_instance(instance, config)
    assert first == second


def test_trace_length_matches_messages():
    for seed in range(10):
        instance = generate(GenParams(n=5, d=4, density=0.3, seed=seed))
        for algorithm in (SYNCBT, ABT):
            outcome, trace = solve_instance(instance, SolveConfig(algorithm=algorithm, scheduler=RANDOM, sched_seed=seed))
            assert len(trace.splitlines()) == outcome.messages


def test_channels_are_fifo():
    instance = generate(GenParams(n=6, d=5, density=0.35, seed=4))
    world = build_world(instance, SolveConfig(algorithm=ABT, scheduler=RANDOM, sched_seed=17))
    world.run_to_completion()
    last = {}
    for message in world.trace:
        channel = (message.sender, message.recipient)
        assert message.seq > last.get(channel, -1)
        last[channel] = message.seq


class Burst(Agent):
    """Agent 1 sends three Ok? messages at start; everyone counts settles."""

    def __init__(self, index):
        super().__init__(index)
        self.settles = 0

    def start(self, ctx):
        if self.index == 1:
            for value in (1, 2, 3):
                ctx.send(OK, 2, pair=(1, value))

    def settle(self, ctx):
        self.settles += 1


@pytest.mark.parametrize("scheduler, settles", [(PRIORITY, 1), (RANDOM, 3)])
def test_settle_policy_follows_scheduler(scheduler, settles):
    agents = [Burst(i) for i in (1, 2, 3)]
    world = World(unconstrained(), agents, scheduler=scheduler).initialize()
    while world.pending:
        world.step()
    assert world.step_count == 3
    assert agents[1].settles == settles


def test_random_scheduler_checks_abt_after_every_delivery():
    instance = generate(GenParams(n=6, d=6, density=0.3, seed=5))
    world = build_world(instance, SolveConfig(algorithm=ABT, scheduler=RANDOM, sched_seed=3)).initialize()
    while world.pending and world.halt_reason is None:
        world.step()
        assert not any(agent.pending for agent in world.agents)


def test_message_to_self_is_rejected():
    with pytest.raises(ValueError):
        Message(OK, 2, 2, pair=(2, 1))


def test_nogood_label_falls_back_to_lowest_pair():
    message = Message(NOGOOD, 3, 1, nogood=frozenset({(1, 2), (2, 2)}))
    assert message.label() == "BT(x1=2)"
    stray = Message(NOGOOD, 4, 3, nogood=frozenset({(1, 2), (2, 2)}))
    assert stray.label() == "BT(x2=2)"


def test_agents_must_be_in_priority_order():
    with pytest.raises(ValueError):
        World(unconstrained(), [SyncBTAgent(i) for i in (2, 1, 3)])
    with pytest.raises(ValueError):
        World(unconstrained(), [SyncBTAgent(i) for i in (1, 2, 3)], scheduler="round-robin")


def test_structured_events_are_logged(example, debug_log):
    solve_instance(example, SolveConfig(algorithm=SYNCBT))
    events = [json.loads(line) for line in debug_log.read_text().splitlines()]
    types = [e["type"] for e in events]
    assert types[0] == "run_start"
    assert types.count("deliver") == 6
    assert "stop" in types
    assert events[-1]["type"] == "run_end"
    assert events[-1]["status"] == NO_SOLUTION
