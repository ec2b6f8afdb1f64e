import json

import numpy as np
import pytest

from xai_components.xai_udiscsp.generator import GenParams, generate
from xai_components.xai_udiscsp.model import PrivacyLedger, charge_revelation
from xai_components.xai_udiscsp.runtime import AGREEMENT, NO_SOLUTION, STEP_LIMIT, Outcome
from xai_components.xai_udiscsp.solve import ABT, ABTU, SYNCBT, SYNCBTU, SolveConfig, build_world, solve_instance
from xai_components.xai_udiscsp.utility import (
    CONTINUE, INTERRUPT, ONLINE, RANDOM_TIE, FutilityStats, RiskModel, StatsBook, calculate_cost,
    decide_continue, futility_risk, learn, load_stats, record_send, record_termination, save_stats,
    unrevealed_costs,
)


def outcome(status, decisions):
    return Outcome(status=status, assignment=None, ledger=PrivacyLedger.empty(1), messages=decisions,
                   steps=decisions, sent=decisions, sent_by_kind={"ok": decisions}, stopped_by=None)


@pytest.mark.parametrize("risk, costs, expected", [
    (0.5, (1, 2, 4), 3.0),
    (1.0, (1, 2, 4), 7.0),
    (0.0, (1, 2, 4), 1.0),
    (0.5, (4, 2), 5.0),
    (0.3, (6,), 6.0),
])
def test_calculate_cost_examples(risk, costs, expected):
    assert calculate_cost(risk, costs) == pytest.approx(expected)


def test_calculate_cost_needs_values():
    with pytest.raises(ValueError):
        calculate_cost(0.5, [])


def test_calculate_cost_properties():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        k = int(rng.integers(1, 8))
        costs = rng.integers(0, 10, k).astype(float)
        risk = float(rng.random())
        prob_d = float(rng.random())
        value = calculate_cost(risk, costs, prob_d)
        closed = prob_d * sum(c * risk ** i for i, c in enumerate(costs))
        assert abs(value - closed) <= 1e-12
        assert prob_d * costs[0] - 1e-12 <= value <= prob_d * costs.sum() + 1e-12
        assert calculate_cost(min(1.0, risk + 0.1), costs, prob_d) >= value - 1e-12
        assert calculate_cost(risk, costs, min(1.0, prob_d + 0.1)) >= value - 1e-12
        bumped = costs.copy()
        bumped[int(rng.integers(k))] += 1
        assert calculate_cost(risk, bumped, prob_d) >= value - 1e-12


def test_decide_continue_threshold(example):
    ledger = charge_revelation(PrivacyLedger.empty(3), example, 1, 1)
    assert decide_continue(ledger, 0.5, [4, 2], 6, 1) == INTERRUPT
    assert decide_continue(ledger, 0.5, [4, 2], 6.5, 1) == CONTINUE
    assert decide_continue(PrivacyLedger.empty(3), 0.5, [4, 2], 5, 1) == INTERRUPT


def test_unrevealed_costs_order(example):
    ledger = charge_revelation(PrivacyLedger.empty(3), example, 3, 2)
    assert unrevealed_costs(example, ledger, 3, [3]) == [4, 1]
    assert unrevealed_costs(example, PrivacyLedger.empty(3), 3, [3]) == [4, 1, 2]


def test_futility_risk_from_stats():
    assert futility_risk(FutilityStats()) == 0.5
    assert futility_risk(FutilityStats(), default=0.25) == 0.25
    assert futility_risk(FutilityStats(20, 2)) == pytest.approx(0.9)
    assert futility_risk(FutilityStats(4, 4)) == 0.0


def test_stats_invariant():
    with pytest.raises(ValueError):
        FutilityStats(2, 3)
    with pytest.raises(ValueError):
        FutilityStats(1, -1)


def test_record_functions():
    stats = record_send(FutilityStats(), 3)
    assert stats == FutilityStats(3, 0)
    assert record_termination(stats, 3) == FutilityStats(3, 1)
    assert record_termination(stats, 0) == stats
    assert record_termination(stats, 3, terminated=False) == stats


def test_learn_from_batch():
    stats = FutilityStats()
    for status, decisions in [(NO_SOLUTION, 5), (AGREEMENT, 7), (STEP_LIMIT, 8)]:
        stats = learn(stats, outcome(status, decisions))
    assert stats == FutilityStats(20, 2)
    assert futility_risk(stats) == pytest.approx(0.9)


def test_risk_model_modes():
    offline = RiskModel(FutilityStats(10, 5))
    for _ in range(10):
        offline.observe_send("ok")
    assert offline.futility_risk == pytest.approx(0.5)
    online = RiskModel(FutilityStats(10, 5), mode=ONLINE)
    for _ in range(10):
        online.observe_send("ok")
    assert online.futility_risk == pytest.approx(0.75)
    with pytest.raises(ValueError):
        RiskModel(mode="hindsight")


def test_online_risk_only_rises_within_a_run():
    model = RiskModel(FutilityStats(4, 3), mode=ONLINE)
    seen = [model.futility_risk]
    for kind in ("ok", "nogood") * 5:
        model.observe_send(kind)
        seen.append(model.futility_risk)
    assert seen == sorted(seen)
    assert model.stats.termination_count == 3


def test_online_run_counts_its_decision_sends(example):
    world = build_world(example, SolveConfig(algorithm=ABTU, risk_mode=ONLINE, risk_default=0.0),
                        FutilityStats(100, 100))
    outcome = world.run_to_completion()
    assert world.risk.stats == FutilityStats(100 + outcome.decision_messages, 100)


def test_stats_book_sections(tmp_path):
    book = StatsBook()
    book.record(outcome(NO_SOLUTION, 5), density=0.3, source=SYNCBT)
    book.record(outcome(AGREEMENT, 40), density=0.3, source=ABT)
    book.record(outcome(STEP_LIMIT, 8))
    assert book.total == FutilityStats(8, 0)
    assert book.lookup(0.3, source=SYNCBT) == FutilityStats(5, 1)
    assert book.lookup(0.3, source=ABT) == FutilityStats(40, 1)
    assert book.lookup(source=ABT) == FutilityStats(40, 1)
    assert book.lookup(0.3, source="dpop") == book.total
    path = save_stats(book, tmp_path / "futility.json")
    document = json.loads(path.read_text())
    assert document["algorithms"]["syncbt"]["buckets"]["0.300000"] == {"count": 5, "terminationCount": 1}
    assert load_stats(path) == book


@pytest.mark.parametrize("content", [
    json.dumps({"count": 1, "terminationCount": 5}),
    json.dumps({"count": "lots"}),
    json.dumps(["count"]),
    "{",
])
def test_unreadable_stats_raise_value_error(tmp_path, content):
    path = tmp_path / "futility.json"
    path.write_text(content)
    with pytest.raises(ValueError, match="futility.json"):
        load_stats(path)


def test_binary_stats_raise_value_error(tmp_path):
    path = tmp_path / "futility.json"
    path.write_bytes(b"\xff\xfe{")
    with pytest.raises(ValueError, match="invalid futility stats"):
        load_stats(path)


def test_stats_book_round_trip(tmp_path):
    book = StatsBook()
    book.record(outcome(NO_SOLUTION, 5), density=0.3)
    book.record(outcome(AGREEMENT, 3))
    assert book.total == FutilityStats(8, 2)
    assert book.lookup(0.3) == FutilityStats(5, 1)
    assert book.lookup(0.4) == book.total
    path = save_stats(book, tmp_path / "stats" / "futility.json")
    document = json.loads(path.read_text())
    assert document["count"] == 8
    assert document["terminationCount"] == 2
    assert load_stats(path) == book


def test_missing_stats_file_is_empty(tmp_path):
    assert load_stats(tmp_path / "absent.json") == StatsBook()


def test_abtu_interrupts_on_example(example):
    result, trace = solve_instance(example, SolveConfig(algorithm=ABTU))
    _, abt_trace = solve_instance(example, SolveConfig(algorithm=ABT))
    assert result.interrupted
    assert result.stopped_by == 2
    assert result.messages == 4
    assert result.ledger.loss_per_agent == (1, 1, 1)
    assert trace.splitlines() == abt_trace.splitlines()[:4]


def test_syncbtu_interrupts_on_example(example):
    result, _ = solve_instance(example, SolveConfig(algorithm=SYNCBTU))
    base, _ = solve_instance(example, SolveConfig(algorithm=SYNCBT))
    assert result.interrupted
    assert result.stopped_by == 1
    assert result.messages == 4
    assert result.ledger.total() < base.ledger.total()


def test_generous_reward_follows_base_trace(example):
    rich = example.with_rewards(1000)
    assert solve_instance(rich, SolveConfig(algorithm=SYNCBTU))[1] == solve_instance(rich, SolveConfig(algorithm=SYNCBT))[1]
    assert not solve_instance(rich, SolveConfig(algorithm=ABTU))[0].interrupted


def test_tiny_reward_interrupts_before_any_message(example):
    result, trace = solve_instance(example.with_rewards(1), SolveConfig(algorithm=ABTU))
    assert result.interrupted
    assert result.messages == 0
    assert trace == ""


def test_uninterrupted_runs_match_base_status():
    for seed in range(30):
        instance = generate(GenParams(n=6, d=6, density=0.3, seed=seed))
        for base, variant in ((SYNCBT, SYNCBTU), (ABT, ABTU)):
            plain, _ = solve_instance(instance, SolveConfig(algorithm=base))
            guarded, _ = solve_instance(instance, SolveConfig(algorithm=variant))
            if guarded.status == AGREEMENT:
                assert plain.status == AGREEMENT
            if not guarded.interrupted:
                assert guarded.status == plain.status


@pytest.mark.parametrize("algorithm", [SYNCBTU, ABTU])
def test_interruption_is_monotone_in_reward(algorithm):
    for seed in range(20):
        instance = generate(GenParams(n=5, d=5, density=0.4, seed=seed))
        interrupted = [solve_instance(instance.with_rewards(r), SolveConfig(algorithm=algorithm))[0].interrupted
                       for r in (1, 10, 100, 10_000)]
        assert interrupted == sorted(interrupted, reverse=True)


def test_random_tie_break_is_seeded():
    instance = generate(GenParams(n=5, d=5, density=0.2, cost_range=(0, 1), seed=8))
    config = SolveConfig(algorithm=ABTU, tie_break=RANDOM_TIE)
    assert solve_instance(instance, config) == solve_instance(instance, config)
    with pytest.raises(ValueError):
        solve_instance(instance, SolveConfig(algorithm=ABTU, tie_break="first"))
