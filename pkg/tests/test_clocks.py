import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clocksim.clocks import (
    DISABLED,
    UNCHANGED,
    ClockSpec,
    Enabled,
    JumpMark,
    StateView,
    SystemState,
    apply_mark,
    evaluate_enabling,
)
from clocksim.errors import NegativeSubstate
from clocksim.hazards import Exponential, HazardSpec, Weibull


def view(counts, changed=None):
    return StateView(counts, changed or {})


def test_apply_mark_examples():
    out = apply_mark(SystemState({"S": 3, "I": 1}), JumpMark({"S": -1, "I": +1}))
    assert out.counts == {"S": 2, "I": 2}
    out = apply_mark(SystemState({"S": 1}), JumpMark({"S": -1}))
    assert out.counts == {}
    with pytest.raises(NegativeSubstate):
        apply_mark(SystemState({}), JumpMark({"S": -1}))


def test_zero_entries_removed_on_construction():
    assert SystemState({"a": 0, "b": 2}).counts == {"b": 2}
    assert JumpMark({"a": 0, "b": -1}).deltas == {"b": -1}
    assert JumpMark({"a": 1}).support() == frozenset({"a"})


_keys = ("a", "b", "c")


@given(
    start=st.lists(st.integers(10, 20), min_size=3, max_size=3),
    d1=st.lists(st.integers(-3, 3), min_size=3, max_size=3),
    d2=st.lists(st.integers(-3, 3), min_size=3, max_size=3),
)
@settings(max_examples=150, deadline=None)
def test_apply_mark_associative_with_mark_addition(start, d1, d2):
    state = SystemState(dict(zip(_keys, start)))
    m1 = JumpMark(dict(zip(_keys, d1)))
    m2 = JumpMark(dict(zip(_keys, d2)))
    summed = JumpMark({k: a + b for k, a, b in zip(_keys, d1, d2)})
    step = apply_mark(apply_mark(state, m1), m2)
    direct = apply_mark(state, summed)
    assert step == direct


def _simple_clock(spec=None, reads=("a",)):
    spec = spec or HazardSpec(Exponential(1.0))

    def rule(v, now):
        return Enabled(spec) if v.count("a") >= 1 else DISABLED

    return ClockSpec(id=0, enabling=rule, mark=JumpMark({"a": -1}), reads=frozenset(reads))


def test_evaluate_enabling_deterministic():
    clock = _simple_clock()
    v = view({"a": 2})
    first = evaluate_enabling(clock, v, 1.0, DISABLED)
    second = evaluate_enabling(clock, v, 1.0, DISABLED)
    assert first == second
    assert isinstance(first, Enabled)


def test_enable_anchors_at_now_then_sticks():
    clock = _simple_clock()
    out = evaluate_enabling(clock, view({"a": 1}), 2.5, DISABLED)
    assert out == Enabled(HazardSpec(Exponential(1.0)), 2.5)
    # re-query while still enabled: same functional form and anchor
    again = evaluate_enabling(clock, view({"a": 1}), 4.0, out)
    assert again is UNCHANGED
    # disabling reported once, then unchanged
    off = evaluate_enabling(clock, view({}), 5.0, out)
    assert off is DISABLED
    assert evaluate_enabling(clock, view({}), 6.0, DISABLED) is UNCHANGED


def test_spec_change_keeps_anchor():
    def rule(v, now):
        n = v.count("a")
        return Enabled(HazardSpec(Exponential(float(n)))) if n >= 1 else DISABLED

    clock = ClockSpec(id=0, enabling=rule, mark=JumpMark({"a": -1}), reads=frozenset({"a"}))
    first = evaluate_enabling(clock, view({"a": 1}), 1.0, DISABLED)
    assert first.enabling_time == 1.0
    changed = evaluate_enabling(clock, view({"a": 3}), 2.0, first)
    assert changed == Enabled(HazardSpec(Exponential(3.0)), 1.0)


def test_explicit_anchor_from_state_history():
    spec = HazardSpec(Weibull(2.0, 1.0))

    def rule(v, now):
        if v.count("food") < 1:
            return DISABLED
        return Enabled(spec, enabling_time=v.changed_at("meal"))

    clock = ClockSpec(id=0, enabling=rule, mark=JumpMark({"food": -1, "meal": +1}),
                      reads=frozenset({"food", "meal"}))
    v = view({"food": 2, "meal": 1}, changed={"meal": 3.25})
    out = evaluate_enabling(clock, v, 7.0, DISABLED)
    assert out == Enabled(spec, 3.25)
    # unchanged across a later query at a new stopping time
    assert evaluate_enabling(clock, v, 9.0, out) is UNCHANGED


def test_future_anchor_rejected():
    def rule(v, now):
        return Enabled(HazardSpec(Exponential(1.0)), enabling_time=now + 1.0)

    clock = ClockSpec(id=0, enabling=rule, mark=JumpMark({"a": 1}), reads=frozenset())
    with pytest.raises(ValueError):
        evaluate_enabling(clock, view({}), 1.0, DISABLED)


@given(
    a=st.integers(0, 5),
    noise=st.dictionaries(st.sampled_from(["b", "c", "d"]), st.integers(0, 50), max_size=3),
    now=st.floats(0.0, 100.0),
)
@settings(max_examples=200, deadline=None)
def test_locality_outside_reads(a, noise, now):
    clock = _simple_clock()
    base = {"a": a}
    out_plain = evaluate_enabling(clock, view(dict(base)), now, DISABLED)
    perturbed = dict(base)
    perturbed.update(noise)
    out_noise = evaluate_enabling(clock, view(perturbed), now, DISABLED)
    assert out_plain == out_noise
