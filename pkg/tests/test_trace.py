import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import TRACE_SPEC
from oracle import CONFIGS, drop_event, mutate_position, simulate
from sysgrader.trace import (
    MSG_CONS_LOCATION,
    MSG_MISSING,
    MSG_PROD_LOCATION,
    MSG_VALUES,
    EventKind,
    MalformedEvent,
    OrderRelation,
    TraceSpec,
    TraceSpecError,
    check_order,
    check_progress,
    check_trace,
    check_values,
    evaluate_prod_cons,
    load_trace_spec,
    parse_trace,
    trace_spec_from_dict,
)


def P(value, pos, pid=1):
    return f"[PROD] pid={pid} value={value} pos={pos}"


def C(value, pos, pid=2):
    return f"[CONS] pid={pid} value={value} pos={pos}"


def run(lines, size=10, total=3):
    spec = TraceSpec(size, total)
    return evaluate_prod_cons(parse_trace("\n".join(lines), spec), spec)


# -- parse_trace ---------------------------------------------------------------


def test_production_line_parses():
    spec = TraceSpec(10, 1)
    (ev,) = parse_trace(P(7, 0, pid=42), spec)
    assert (ev.kind, ev.pid, ev.value, ev.position, ev.line_no) == (EventKind.Production, 42, 7, 0, 1)


def test_oracle_lines_parse():
    lines = simulate(10, 5, 3, seed=1)
    events = parse_trace("\n".join(lines), TraceSpec(10, 5))
    assert len(events) == 10
    assert [e.raw for e in events] == lines


def test_empty_output():
    assert parse_trace("", TraceSpec(10, 0)) == []


def test_debug_lines_are_ignored():
    events = parse_trace("\n".join([P(1, 0), "hello from the producer", C(1, 0)]), TraceSpec(10, 1))
    assert [e.line_no for e in events] == [1, 3]


def test_tampered_line_is_malformed():
    with pytest.raises(MalformedEvent) as err:
        parse_trace("\n".join([P(1, 0), "[PROD] pid=3 value=seven pos=1"]), TraceSpec(10, 2))
    assert err.value.line_no == 2


def test_extra_whitespace_tolerated():
    (ev,) = parse_trace("  [CONS]  pid=9   value=3 pos=4  ", TraceSpec(10, 1))
    assert ev.kind is EventKind.Consumption and ev.position == 4


def test_line_numbers_increase():
    lines = simulate(2, 100, 3, seed=5, chatter=True)
    events = parse_trace("\n".join(lines), TraceSpec(2, 100))
    nums = [e.line_no for e in events]
    assert nums == sorted(set(nums))


# -- evaluate_prod_cons --------------------------------------------------------


def test_hand_simulated_trace_passes():
    v = run([P(5, 0), P(9, 1), C(5, 0), P(2, 2), C(9, 1), C(2, 2)])
    assert v.passed and v.status == "pass"


def test_empty_trace_with_zero_total_passes():
    assert run([], total=0).passed


def test_wrong_production_location():
    v = run([P(5, 3)], total=1)
    assert v.errors[0].message == MSG_PROD_LOCATION
    assert v.errors[0].line_no == 1


def test_wrong_consumption_location():
    v = run([P(5, 0), C(5, 1)], total=1)
    assert [e.message for e in v.errors] == [MSG_CONS_LOCATION]


def test_missing_and_value_mismatch():
    v = run([P(5, 0), P(6, 1), C(5, 0)], total=2)
    assert MSG_MISSING in v.messages and MSG_VALUES in v.messages


def test_wraparound():
    lines = []
    for k in range(7):
        lines += [P(k, k % 3), C(k, k % 3)]
    assert run(lines, size=3, total=7).passed


# -- generic checks --------------------------------------------------------------


def _events(lines, total=5):
    spec = TraceSpec(10, total)
    return parse_trace("\n".join(lines), spec), spec


def test_progress():
    ev, spec = _events([P(i, i) for i in range(5)] + [C(i, i) for i in range(5)])
    assert check_progress(ev, spec).passed
    ev, spec = _events([P(i, i) for i in range(5)] + [C(i, i) for i in range(4)])
    assert check_progress(ev, spec).messages == [MSG_MISSING]
    ev, spec = _events([], total=0)
    assert check_progress(ev, spec).passed


def test_values_are_multisets():
    ev, spec = _events([P(3, 0), P(3, 1), P(8, 2), C(8, 0), C(3, 1), C(3, 2)])
    assert check_values(ev, spec).passed
    ev, spec = _events([P(3, 0), C(4, 0)])
    assert check_values(ev, spec).messages == [MSG_VALUES]
    ev, spec = _events([P(3, 0), P(3, 1), C(3, 0), C(8, 1)])
    assert not check_values(ev, spec).passed
    assert check_values([], spec).passed


def test_order():
    ev, spec = _events([C(5, 0), P(5, 0)])
    v = check_order(ev, spec)
    assert not v.passed and v.errors[0].line_no == 1
    ev, spec = _events([P(5, 0), C(5, 0), P(5, 1), C(5, 1)])
    assert check_order(ev, spec).passed
    # one production justifies only one consumption
    ev, spec = _events([P(5, 0), C(5, 0), C(5, 1)])
    assert not check_order(ev, spec).passed


def test_generic_events_and_relations():
    spec = trace_spec_from_dict(
        {
            "size": 1,
            "total": 0,
            "events": {"write": "W {value:int}", "read": "R {value:int}"},
            "order": [["write", "read", "value"]],
            "value_pairs": [["write", "read"]],
            "counts": {"write": 2, "read": 2},
        }
    )
    assert not spec.is_prod_cons
    ok = parse_trace("W 1\nR 1\nW 2\nR 2\n", spec)
    assert ok[0].kind is EventKind.Generic
    assert check_trace(ok, spec).passed
    bad = parse_trace("R 1\nW 1\nW 2\n", spec)
    codes = {e.code for e in check_trace(bad, spec).errors}
    assert codes == {"order-violation", "missing-events", "value-mismatch"}


def test_order_without_join_key():
    spec = TraceSpec(10, 1, order_relations=[OrderRelation("production", "consumption", None)])
    ev = parse_trace("\n".join([C(1, 0), P(2, 0)]), spec)
    assert check_order(ev, spec).messages == ["Consumption before any production"]


@pytest.mark.parametrize(
    "doc",
    [
        {"size": 0, "total": 1},
        {"size": 1, "total": -1},
        {"total": 1},
        {"size": 1, "total": 1, "colour": "red"},
        {"size": 1, "total": 1, "order": [["production", "nothing"]]},
        {"size": 1, "total": 1, "events": {"a": "A {x} {x}"}},
    ],
)
def test_bad_specs(doc):
    with pytest.raises(TraceSpecError):
        trace_spec_from_dict(doc)


def test_shipped_spec():
    spec = load_trace_spec(TRACE_SPEC)
    assert (spec.size, spec.total) == (10, 15)
    assert spec.to_dict()["order"] == [["production", "consumption", "value"]]
    assert trace_spec_from_dict(spec.to_dict()).to_dict() == spec.to_dict()


# -- oracle ----------------------------------------------------------------------


@pytest.mark.parametrize("size, total, producers", CONFIGS)
def test_oracle_traces_pass_every_check(size, total, producers):
    spec = TraceSpec(size, total)
    for seed in range(12):
        events = parse_trace("\n".join(simulate(size, total, producers, seed, chatter=True)), spec)
        for check in (evaluate_prod_cons, check_progress, check_values, check_order, check_trace):
            assert check(events, spec).passed, (check.__name__, seed)


def test_several_consumers():
    spec = TraceSpec(4, 40)
    for seed in range(20):
        events = parse_trace("\n".join(simulate(4, 40, 3, seed, consumers=2)), spec)
        assert check_trace(events, spec).passed


@pytest.mark.parametrize("size, total, producers", [c for c in CONFIGS if c[1] > 0])
def test_oracle_mutations_detected(size, total, producers):
    spec = TraceSpec(size, total)
    rng = random.Random(size * 1000 + total * 10 + producers)
    for seed in range(8):
        lines = simulate(size, total, producers, seed)
        moved = evaluate_prod_cons(parse_trace("\n".join(mutate_position(lines, size, rng)), spec), spec)
        assert {MSG_PROD_LOCATION, MSG_CONS_LOCATION} & set(moved.messages)
        dropped = evaluate_prod_cons(parse_trace("\n".join(drop_event(lines, rng)), spec), spec)
        assert MSG_MISSING in dropped.messages


def test_adjacent_swaps_in_minimal_trace():
    # P0 C0 P1 C1 ... with distinct values; moving a consumption ahead of its
    # own production must fail, moving the next production ahead of a
    # consumption is still a legal schedule for SIZE=3
    spec = TraceSpec(3, 4)
    lines = [line for k in range(4) for line in (P(10 + k, k % 3), C(10 + k, k % 3))]
    assert check_trace(parse_trace("\n".join(lines), spec), spec).passed
    for i in range(len(lines) - 1):
        swapped = list(lines)
        swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
        verdict = check_trace(parse_trace("\n".join(swapped), spec), spec)
        if i % 2 == 0:
            assert any(e.code == "order-violation" for e in verdict.errors)
            assert MSG_CONS_LOCATION not in verdict.messages
        else:
            assert verdict.passed


def test_swapped_productions_fail_on_location():
    spec = TraceSpec(10, 2)
    lines = [P(1, 1), P(2, 0), C(2, 0), C(1, 1)]
    assert check_trace(parse_trace("\n".join(lines), spec), spec).messages[0] == MSG_PROD_LOCATION


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 9), max_size=20), st.randoms())
def test_multiset_check_is_order_insensitive(values, rnd):
    spec = TraceSpec(100, len(values))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    lines = [P(v, i) for i, v in enumerate(values)] + [C(v, i) for i, v in enumerate(shuffled)]
    assert check_values(parse_trace("\n".join(lines), spec), spec).passed
    if values:
        lines[-1] = C(shuffled[-1] + 10, len(values) - 1)
        assert not check_values(parse_trace("\n".join(lines), spec), spec).passed


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(0, 30), st.integers(1, 3), st.integers(0, 2**32))
def test_verdict_is_deterministic(size, total, producers, seed):
    spec = TraceSpec(size, total)
    out = "\n".join(simulate(size, total, producers, seed))
    assert check_trace(parse_trace(out, spec), spec) == check_trace(parse_trace(out, spec), spec)
