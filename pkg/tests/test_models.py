import math

import numpy as np
import pytest

from clocksim import graph as depgraph
from clocksim.clocks import DISABLED, Enabled, StateView, UNCHANGED, evaluate_enabling
from clocksim.errors import ModelError
from clocksim.hazards import Exponential, HazardSpec, Weibull
from clocksim.kernel import EventCount, StalledOnly, final_state, replay_states, run_ensemble, run_trajectory
from clocksim.models import (
    build,
    build_atomic_showcase,
    build_rabbits,
    build_ring,
    build_sir,
    parse_hazard,
    unparse_hazard,
)
from clocksim.verify import ks_statistic

ALL_BUILTINS = [
    ("sir", {"n": 3, "initial_infected": 1, "recover": "weibull:2,1"}),
    ("rabbits", {"m": 2, "food_rate": 2.0, "portions": "1;2", "initial_food": 3}),
    ("atomic-showcase", {}),
    ("birth-death", {"birth": 1.0, "death": 1.0, "x0": 2, "capacity": 20}),
    ("ring", {"m": 4}),
    ("poisson", {"rate": 1.0}),
    ("renewal", {}),
]


def test_parse_hazard_round_trip():
    for text in ["exponential:1.5", "weibull:2,1", "gamma:2,3", "uniform:0.5,2",
                 "piecewise:0,1,2|0.5,0,2", "none@1,0.5", "exponential:1@0.5,0.25;2,1"]:
        spec = parse_hazard(text)
        again = parse_hazard(unparse_hazard(spec))
        assert again == spec
    assert parse_hazard(HazardSpec(Exponential(2.0))) == HazardSpec(Exponential(2.0))
    with pytest.raises(ModelError):
        parse_hazard("cauchy:1")
    with pytest.raises(ModelError):
        parse_hazard("weibull:2")


def test_unknown_model_rejected():
    with pytest.raises(ModelError):
        build("nope", {})
    with pytest.raises(ModelError):
        build("sir", {"n": 0})
    with pytest.raises(ModelError):
        build("sir", {})  # n required


def test_sir_structure():
    model = build_sir(3)
    names = [c.name for c in model.clocks]
    assert sum(1 for n in names if n.startswith("infect")) == 6
    assert sum(1 for n in names if n.startswith("recover")) == 3
    assert model.initial_state.counts == {"I_0": 1, "S_1": 1, "S_2": 1}


def test_sir_two_individuals_second_infected_half_the_time():
    model = build_sir(2)  # rate-1 infection races rate-1 recovery
    n = 3000
    hits = 0
    for traj in run_ensemble(model, "direct", 2024, n, StalledOnly()):
        state = final_state(model, traj).counts
        if "R_1" in state:
            hits += 1
    assert abs(hits / n - 0.5) < 0.03


def test_sir_weibull_recovery_anchored_at_infection_time():
    model = build_sir(2, recover="weibull:2,1", infect="exponential:100")
    traj = run_trajectory(model, "next-reaction", 3, EventCount(2))
    names = {c.name: c.id for c in model.clocks}
    infections = [ev for ev in traj.events if ev.clock == names["infect_0_1"]]
    assert infections, "with rate-100 infection the pair clock fires first"
    # replaying: individual 1 became infectious exactly at the infection event
    t_inf = infections[0].time
    view_counts = {"I_0": 1, "I_1": 1}
    out = evaluate_enabling(
        model.clock(names["recover_1"]), StateView(view_counts, {"I_1": t_inf}), t_inf, DISABLED
    )
    assert out == Enabled(HazardSpec(Weibull(2.0, 1.0)), t_inf)


def test_rabbits_food_bookkeeping():
    model = build_rabbits(2, 3.0, (1, 2), initial_food=5)
    traj = run_trajectory(model, "next-to-fire", 17, EventCount(500))
    state = final_state(model, traj).counts
    by_name = {c.id: c.name for c in model.clocks}
    produced = sum(1 for ev in traj.events if by_name[ev.clock] == "food")
    eaten = 0
    for ev in traj.events:
        name = by_name[ev.clock]
        if name.startswith("eat_"):
            k = int(name.split("_")[-1])
            eaten += (1, 2)[k]
    assert state.get("food", 0) == 5 + produced - eaten


def test_rabbits_zero_food_disables_eating():
    model = build_rabbits(1, 1.0, (1,), initial_food=0)
    view = StateView(dict(model.initial_state.counts), {})
    for c in model.clocks:
        if c.name.startswith("eat"):
            assert c.enabling(view, 0.0) is DISABLED


def test_rabbits_intermeal_times_are_weibull():
    # abundant food: the single eating clock is enabled continuously, so
    # inter-meal durations are iid Weibull(2, 1)
    model = build_rabbits(1, 2.0, (1,), initial_food=2000)
    traj = run_trajectory(model, "next-reaction", 12321, EventCount(30_000))
    eat_id = next(c.id for c in model.clocks if c.name.startswith("eat"))
    meal_times = [ev.time for ev in traj.events if ev.clock == eat_id]
    assert len(meal_times) >= 10_000
    prev = 0.0
    gaps = []
    for t in meal_times:
        gaps.append(t - prev)
        prev = t
    # food never ran out, so the clock was never disabled mid-interval
    assert min(st.counts.get("food", 0) for _, st in replay_states(model, traj)) >= 1
    cdf = lambda t: 1.0 - math.exp(-(t ** 2))
    stat, p = ks_statistic(gaps[:10_000], cdf)
    assert p > 0.01, (stat, p)


def test_atomic_showcase_probability_and_final_states():
    model = build_atomic_showcase()
    n = 2000
    b_fired = 0
    for traj in run_ensemble(model, "direct", 99, n, StalledOnly()):
        assert len(traj.events) == 1
        state = final_state(model, traj).counts
        if traj.events[0].clock == 1:
            b_fired += 1
            assert state == {"b_count": 1}
            assert traj.events[0].time == 1.0
        else:
            assert state == {"a_count": 1}
    assert abs(b_fired / n - 0.25) < 0.03


def test_sir_final_size_matches_ctmc_oracle():
    from clocksim.kernel import EndTime
    from clocksim.verify import ctmc_oracle, total_variation

    model = build_sir(3)
    horizon = 40.0  # epidemic over: essentially all mass on absorbing states

    def size_of(key_or_counts):
        items = dict(key_or_counts)
        return sum(v for k, v in items.items() if k.startswith("R_"))

    oracle = {}
    for key, p in ctmc_oracle(model, horizon).items():
        oracle[size_of(key)] = oracle.get(size_of(key), 0.0) + p
    n = 4000
    emp = {}
    for traj in run_ensemble(model, "next-to-fire", 303, n, EndTime(horizon)):
        s = size_of(final_state(model, traj).counts)
        emp[s] = emp.get(s, 0.0) + 1.0 / n
    assert total_variation(emp, oracle) < 0.03


def test_ring_conserves_tokens():
    model = build_ring(6, rate=2.0, tokens=2)
    traj = run_trajectory(model, "direct", 5, EventCount(300))
    state = final_state(model, traj).counts
    assert sum(state.values()) == 12


@pytest.mark.parametrize("name,params", ALL_BUILTINS, ids=[m[0] for m in ALL_BUILTINS])
def test_graph_soundness_fuzz(name, params):
    """Unaffected clocks see an unchanged enabling outcome after any jump."""
    model = build(name, params)
    g = depgraph.build(model.clocks)
    by_id = {c.id: c for c in model.clocks}
    keys = sorted({k for c in model.clocks for k in c.reads | c.mark.support()})
    rng = np.random.default_rng(1234)
    trials = 0
    while trials < 120:
        counts = {k: int(rng.integers(0, 4)) for k in keys}
        counts = {k: v for k, v in counts.items() if v}
        changed = {k: float(rng.random() * 5.0) for k in keys}
        fired = int(rng.choice([c.id for c in model.clocks]))
        mark = by_id[fired].mark
        if any(counts.get(k, 0) + d < 0 for k, d in mark.deltas.items()):
            continue
        trials += 1
        after = dict(counts)
        for k, d in mark.deltas.items():
            after[k] = after.get(k, 0) + d
            if after[k] == 0:
                del after[k]
        changed_after = dict(changed)
        now = 6.0
        for k in mark.deltas:
            changed_after[k] = now
        aff = depgraph.affected(g, fired)
        for cid, clock in by_id.items():
            if cid in aff:
                continue
            prev = evaluate_enabling(clock, StateView(counts, changed), now, DISABLED)
            if prev is UNCHANGED:
                prev = DISABLED
            out = evaluate_enabling(clock, StateView(after, changed_after), now, prev)
            assert out is UNCHANGED, (name, cid, counts, fired)


def test_rabbits_scarce_food_equivalence_multi_event():
    """Scarce food churns enabling: frozen budgets, past anchors, and scale
    changes must leave every sampler on the same trajectory distribution."""
    from clocksim.verify import chi_square_homogeneity, ks_two_sample

    model = build("rabbits", {"m": 2, "food_rate": 1.0, "portions": "1;2", "initial_food": 1})
    n = 1200
    depth = 8
    data = {}
    for sampler in ("first-reaction", "next-reaction", "next-to-fire", "direct"):
        finals = []
        marks = {}
        for traj in run_ensemble(model, sampler, 4096, n, EventCount(depth)):
            assert len(traj.events) == depth
            finals.append(traj.events[-1].time)
            for ev in traj.events:
                marks[ev.clock] = marks.get(ev.clock, 0) + 1
        data[sampler] = (finals, marks)
    ref_finals, ref_marks = data["first-reaction"]
    clocks = sorted({c for _, m in data.values() for c in m})
    for sampler in ("next-reaction", "next-to-fire", "direct"):
        finals, marks = data[sampler]
        _, p_ks = ks_two_sample(ref_finals, finals)
        _, p_chi = chi_square_homogeneity(
            [ref_marks.get(c, 0) for c in clocks], [marks.get(c, 0) for c in clocks]
        )
        assert p_ks > 0.005, (sampler, p_ks)
        assert p_chi > 0.005, (sampler, p_chi)


@pytest.mark.parametrize("name,params", ALL_BUILTINS, ids=[m[0] for m in ALL_BUILTINS])
def test_first_event_equivalence_desk_scale(name, params):
    """All samplers draw the first (clock, time) from the same distribution."""
    from clocksim.verify import chi_square_homogeneity, ks_two_sample

    model = build(name, params)
    n = 1200
    data = {}
    for sampler in ("first-reaction", "next-reaction", "next-to-fire", "direct"):
        times = []
        marks = {}
        for traj in run_ensemble(model, sampler, 81, n, EventCount(1)):
            if traj.events:
                times.append(traj.events[0].time)
                marks[traj.events[0].clock] = marks.get(traj.events[0].clock, 0) + 1
        data[sampler] = (times, marks)
    base_times, base_marks = data["first-reaction"]
    clocks = sorted({c for _, m in data.values() for c in m})
    for sampler in ("next-reaction", "next-to-fire", "direct"):
        times, marks = data[sampler]
        _, p_ks = ks_two_sample(base_times, times)
        assert p_ks > 0.005, (name, sampler, p_ks)
        if len(clocks) >= 2:
            _, p_chi = chi_square_homogeneity(
                [base_marks.get(c, 0) for c in clocks], [marks.get(c, 0) for c in clocks]
            )
            assert p_chi > 0.005, (name, sampler, p_chi)
