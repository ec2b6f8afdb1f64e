import json
from argparse import Namespace

from xai_components.base import (
    Component, InArg, InCompArg, OutArg, StructuredDebugLogger, execute_graph, parse_bool, xai_component,
)


@xai_component(color="grey")
class Double(Component):
    x: InCompArg[int]
    scale: InArg[int]
    y: OutArg[int]

    def execute(self, ctx) -> None:
        self.y.value = self.x.value * (self.scale.value if self.scale.value is not None else 2)
        ctx.setdefault("seen", []).append(self.y.value)


def chain():
    first, second = Double(), Double()
    first.x.value = 3
    second.x.connect(first.y)
    second.scale.value = 10
    first.next, second.next = second, None
    return first, second


def test_ports_are_created_per_instance():
    a, b = Double(), Double()
    assert isinstance(a.x, InCompArg) and isinstance(a.y, OutArg)
    assert a.x is not b.x
    assert a.next is None


def test_connected_port_reads_through():
    first, second = chain()
    first.y.value = 7
    assert second.x.value == 7


def test_execute_graph_follows_next():
    first, second = chain()
    ctx = {}
    execute_graph(Namespace(), first, ctx)
    assert second.y.value == 60
    assert ctx["seen"] == [6, 60]


def test_parse_bool():
    assert parse_bool("Yes") is True
    assert parse_bool("0") is False
    assert parse_bool(None) is None


def test_logger_is_silent_by_default(capsys):
    first, _ = chain()
    first.do({})
    assert capsys.readouterr().err == ""


def test_logger_records_component_ports(debug_log):
    first, _ = chain()
    first.do({"args": None})
    events = [json.loads(line) for line in debug_log.read_text().splitlines()]
    assert [e["type"] for e in events] == ["before_execution", "after_execution"]
    assert events[0]["component"]["inputs"] == {"x": 3, "scale": None}
    assert events[1]["component"]["outputs"] == {"y": 6}
    assert events[1]["ctx"] == ["args", "seen"]


def test_log_event_payload(debug_log):
    StructuredDebugLogger.get_logger().log_event("deliver", level="INFO", step=4)
    event = json.loads(debug_log.read_text())
    assert event["level"] == "INFO"
    assert event["step"] == 4
