"""Switching/selection functions, adoption probabilities, predicates, schedules."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contagion_games import (
    BLUE,
    RED,
    UNINFECTED,
    BuiltinAdoption,
    DynamicsDefinitionError,
    Graph,
    HalfPointSwitch,
    LayerOrder,
    ParallelRounds,
    PowerSwitch,
    RandomSequential,
    ScheduleError,
    SinglePassOrder,
    SwitchSelectAdoption,
    TableSelection,
    TableSwitch,
    ThresholdSwitch,
    TullockSelection,
    ValidationError,
    candidate_vertices,
    check_additive,
    check_competitive,
    decompose,
    filter_phase_candidates,
    from_switch_select,
    is_additive,
    is_competitive,
    linear_selection,
    load_dynamics,
    load_schedule,
    realizable_fraction_pairs,
    run_contagion,
)


def linear_dyn():
    return SwitchSelectAdoption(PowerSwitch(1.0), linear_selection())


# ---------------------------------------------------------------------------
# Switching functions.
# ---------------------------------------------------------------------------


def test_power_switch_values():
    assert PowerSwitch(2.0)(0.5) == 0.25
    assert PowerSwitch(0.5)(0.25) == 0.5
    assert PowerSwitch(1.0)(0.37) == 0.37
    assert PowerSwitch(3.0)(0.0) == 0.0
    assert PowerSwitch(3.0)(1.0) == 1.0


def test_power_switch_convex_anchor():
    # exponent chosen so that f(2/3) = 1/25
    r = math.log(25.0) / math.log(1.5)
    assert PowerSwitch(r)(2.0 / 3.0) == pytest.approx(1.0 / 25.0, abs=1e-12)


@pytest.mark.parametrize("bad", [0, -1.0, "2"])
def test_power_switch_rejects_bad_exponent(bad):
    with pytest.raises(DynamicsDefinitionError, match="positive"):
        PowerSwitch(bad)


def test_threshold_switch_is_a_step_at_the_threshold():
    f = ThresholdSwitch(0.75)
    assert f(0.74) == 0.0
    assert f(0.75) == 1.0
    assert f(1.0) == 1.0
    assert f(0.0) == 0.0


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
def test_threshold_switch_rejects_degenerate_thresholds(bad):
    with pytest.raises(DynamicsDefinitionError, match="strictly inside"):
        ThresholdSwitch(bad)


def test_halfpoint_switch_piecewise_values():
    f = HalfPointSwitch(0.01)
    assert f(0.0) == 0.0
    assert f(0.25) == pytest.approx(0.005)
    assert f(0.5) == pytest.approx(0.01)
    assert f(0.75) == pytest.approx(0.505)
    assert f(1.0) == 1.0


def test_table_switch_interpolates():
    f = TableSwitch(((0.0, 0.0), (0.5, 0.2), (1.0, 1.0)))
    assert f(0.25) == pytest.approx(0.1)
    assert f(0.5) == pytest.approx(0.2)
    assert f(0.75) == pytest.approx(0.6)


@pytest.mark.parametrize("points, pattern", [
    (((0.0, 0.0),), "at least"),
    (((0.0, 0.0), (0.5, 0.5)), "span"),
    (((0.0, 0.0), (0.5, 0.5), (0.5, 0.6), (1.0, 1.0)), "strictly increasing"),
    (((0.0, 0.0), (0.5, 0.9), (1.0, 0.3)), "1 at 1|decreasing"),
    (((0.0, 0.2), (1.0, 1.0)), "0 at 0"),
])
def test_table_switch_validation(points, pattern):
    with pytest.raises(DynamicsDefinitionError, match=pattern):
        TableSwitch(points)


def test_switch_rejects_arguments_outside_unit_interval():
    with pytest.raises(ValidationError):
        PowerSwitch(1.0)(1.2)
    with pytest.raises(ValidationError):
        PowerSwitch(1.0)(-0.1)


# ---------------------------------------------------------------------------
# Selection functions.
# ---------------------------------------------------------------------------


def test_tullock_identity_at_s_one():
    g = TullockSelection(1.0)
    for y in (0.0, 0.17, 0.5, 0.99, 1.0):
        assert g(y) == y
    assert linear_selection() == TullockSelection(1.0)


def test_tullock_hand_values():
    assert TullockSelection(2.0)(1.0 / 3.0) == pytest.approx(0.2, abs=1e-12)
    assert TullockSelection(2.0)(0.5) == 0.5
    # exponent chosen so that a 2/3 share wins with probability 99/100
    g = TullockSelection(math.log2(99.0))
    assert g(2.0 / 3.0) == pytest.approx(0.99, abs=1e-12)


def test_tullock_endpoints_even_for_small_exponent():
    g = TullockSelection(0.25)
    assert g(0.0) == 0.0
    assert g(1.0) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1.0 - 1e-6),
       st.floats(min_value=0.05, max_value=8.0))
def test_tullock_symmetry(y, s):
    # interior points only: below ~1e-16 the complement 1-y itself rounds to 1
    g = TullockSelection(s)
    assert g(y) + g(1.0 - y) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=0.5, exclude_max=True),
       st.floats(min_value=1.0, max_value=8.0))
def test_tullock_polarizes_minorities_for_large_exponents(y, s):
    assert TullockSelection(s)(y) <= y + 1e-12


def test_tullock_rejects_bad_exponent():
    with pytest.raises(DynamicsDefinitionError, match="positive"):
        TullockSelection(0.0)


def test_table_selection_interpolates_and_requires_symmetry():
    g = TableSelection(((0.0, 0.0), (0.3, 0.1), (0.7, 0.9), (1.0, 1.0)))
    assert g(0.5) == pytest.approx(0.5)
    assert g(0.3) == pytest.approx(0.1)
    with pytest.raises(DynamicsDefinitionError, match="symmetry"):
        TableSelection(((0.0, 0.0), (0.3, 0.2), (0.7, 0.9), (1.0, 1.0)))


# ---------------------------------------------------------------------------
# Adoption functions.
# ---------------------------------------------------------------------------


def test_switch_select_hand_probabilities():
    dyn = linear_dyn()
    assert dyn.prob_red(0.5, 0.25) == pytest.approx(0.5)
    assert dyn.prob_blue(0.5, 0.25) == pytest.approx(0.25)
    assert dyn.prob_any(0.5, 0.25) == pytest.approx(0.75)


def test_no_infected_neighbors_means_no_infection():
    for dyn in (linear_dyn(), BuiltinAdoption("quadratic_damped")):
        assert dyn.prob_red(0.0, 0.0) == 0.0
        assert dyn.prob_any(0.0, 0.0) == 0.0


def test_fraction_pair_validation():
    dyn = linear_dyn()
    with pytest.raises(ValidationError, match="nonnegative"):
        dyn.prob_red(-0.1, 0.0)
    with pytest.raises(ValidationError, match="sum past 1"):
        dyn.prob_red(0.7, 0.4)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.2, max_value=5.0),
       st.floats(min_value=0.2, max_value=5.0))
def test_update_probs_partition(a_scale, b, r, s):
    a = a_scale * (1.0 - b)  # keep a + b inside the simplex
    dyn = SwitchSelectAdoption(PowerSwitch(r), TullockSelection(s))
    pr, pb, pu = dyn.update_probs(a, b)
    for p in (pr, pb, pu):
        assert -1e-12 <= p <= 1.0 + 1e-12
    assert pr + pb + pu == pytest.approx(1.0, abs=1e-12)


def test_builtin_quadratic_damped_values():
    dyn = BuiltinAdoption("quadratic_damped")
    assert dyn.prob_red(0.5, 0.5) == pytest.approx(0.375)
    assert dyn.prob_red(1.0, 0.0) == 1.0
    assert dyn.prob_any(0.5, 0.5) == pytest.approx(0.75)
    assert dyn.to_json_dict() == {"h": "builtin:quadratic_damped"}


def test_unknown_builtin_rejected():
    with pytest.raises(DynamicsDefinitionError, match="unknown builtin"):
        BuiltinAdoption("no_such_thing")


def test_from_switch_select_builds_adoption():
    dyn = from_switch_select(PowerSwitch(2.0), TullockSelection(2.0))
    assert dyn.prob_red(0.25, 0.25) == pytest.approx(0.125)


# ---------------------------------------------------------------------------
# Competitive / additive predicates and decomposition.
# ---------------------------------------------------------------------------


def test_linear_dynamics_are_competitive_and_additive():
    dyn = linear_dyn()
    assert is_competitive(dyn)
    assert is_additive(dyn)


def test_convex_switching_with_linear_selection_is_not_competitive():
    dyn = SwitchSelectAdoption(PowerSwitch(2.0), linear_selection())
    violations = check_competitive(dyn)
    assert violations
    v = violations[0]
    assert v.prob_with_opponent > v.prob_alone


@pytest.mark.parametrize("r, s, expected", [
    (0.5, 0.5, True),    # s equal to the switching exponent
    (0.5, 1.0, True),    # s at the linear end
    (0.5, 0.75, True),   # interior of [r, 1]
    (0.5, 0.25, False),  # s below the switching exponent
    (0.5, 1.5, False),   # s above 1
    (1.0, 1.0, True),
])
def test_competitive_boundary_in_the_selection_exponent(r, s, expected):
    dyn = SwitchSelectAdoption(PowerSwitch(r), TullockSelection(s))
    assert is_competitive(dyn) is expected


def test_quadratic_damped_is_competitive_but_not_additive():
    dyn = BuiltinAdoption("quadratic_damped")
    assert is_competitive(dyn)
    violations = check_additive(dyn)
    assert violations
    assert not is_additive(dyn)


def test_decompose_recovers_both_parts_of_an_additive_function():
    dyn = SwitchSelectAdoption(PowerSwitch(2.0), TullockSelection(2.0))
    dec = decompose(dyn)
    assert dec.switching is not None
    assert dec.switching(0.5) == pytest.approx(0.25)
    assert dec.selection(0.25, 0.25) == pytest.approx(0.5)
    assert dec.selection(0.5, 0.25) == pytest.approx(TullockSelection(2.0)(2.0 / 3.0))
    assert dec.undefined_points == ((0.0, 0.0),)


def test_decompose_marks_zero_probability_region_undefined():
    dyn = SwitchSelectAdoption(ThresholdSwitch(0.5), linear_selection())
    dec = decompose(dyn)
    assert (0.25, 0.0) in dec.undefined_points
    assert math.isnan(dec.selection(0.25, 0.0))


def test_decompose_non_additive_function_has_no_switching_part():
    dec = decompose(BuiltinAdoption("quadratic_damped"))
    assert dec.switching is None
    assert dec.selection(0.5, 0.5) == pytest.approx(0.5)


def test_realizable_fraction_pairs_enumerates_in_degree_grids():
    g = Graph(n=4, edges=((0, 1), (0, 2), (3, 2), (1, 3)))  # in-degrees 1, 2, 1
    pairs = realizable_fraction_pairs(g)
    assert pairs == (
        (0.0, 0.0), (0.0, 0.5), (0.0, 1.0),
        (0.5, 0.0), (0.5, 0.5),
        (1.0, 0.0),
    )


# ---------------------------------------------------------------------------
# Candidates and schedules.
# ---------------------------------------------------------------------------


def path_graph():
    return Graph(n=3, edges=((0, 1), (1, 2)))


def test_candidate_vertices_need_an_infected_in_neighbor():
    g = path_graph()
    state = [RED, UNINFECTED, UNINFECTED]
    assert candidate_vertices(g, state, [False] * 3) == (1,)
    assert candidate_vertices(g, state, [False, True, False]) == ()
    state = [RED, BLUE, UNINFECTED]
    assert candidate_vertices(g, state, [False] * 3) == (2,)


def test_filter_phase_candidates_respects_phase_membership():
    g = path_graph()
    state = [RED, UNINFECTED, UNINFECTED]
    assert filter_phase_candidates(g, state, [False] * 3, (2, 1)) == (1,)


def test_single_pass_order_sensitivity():
    g = path_graph()
    dyn = linear_dyn()
    initial = [RED, UNINFECTED, UNINFECTED]
    forward = run_contagion(g, initial, dyn, SinglePassOrder((1, 2)), rng_seed=0)
    backward = run_contagion(g, initial, dyn, SinglePassOrder((2, 1)), rng_seed=0)
    assert forward.chi_R == 3
    assert backward.chi_R == 2
    assert backward.state[2] == UNINFECTED


def test_single_pass_rejects_duplicates_and_unknown_vertices():
    with pytest.raises(ScheduleError, match="twice"):
        SinglePassOrder((1, 1))
    with pytest.raises(ScheduleError, match="unknown vertex"):
        run_contagion(path_graph(), [RED, UNINFECTED, UNINFECTED], linear_dyn(),
                      SinglePassOrder((5,)), rng_seed=0)


def test_parallel_rounds_use_snapshot_semantics():
    g = path_graph()
    dyn = linear_dyn()
    initial = [RED, UNINFECTED, UNINFECTED]
    one = run_contagion(g, initial, dyn, ParallelRounds(max_rounds=1), rng_seed=0)
    assert one.state == (RED, RED, UNINFECTED)  # the wave moves one hop per round
    two = run_contagion(g, initial, dyn, ParallelRounds(max_rounds=2), rng_seed=0)
    assert two.state == (RED, RED, RED)


def test_parallel_rounds_stop_when_nothing_changes():
    out = run_contagion(path_graph(), [RED, UNINFECTED, UNINFECTED], linear_dyn(),
                        ParallelRounds(max_rounds=50), rng_seed=0, keep_trace=True)
    assert out.chi_R == 3
    assert len(out.trace) <= 3


def test_parallel_immunity_retires_failed_candidates():
    # 2 flips to red in round 1; 1's only chance needs both in-neighbors, which
    # happens from round 2 on -- too late once a failed attempt makes it immune.
    g = Graph(n=3, edges=((0, 1), (2, 1), (0, 2)))
    dyn = SwitchSelectAdoption(ThresholdSwitch(0.75), linear_selection())
    initial = [RED, UNINFECTED, UNINFECTED]
    plain = run_contagion(g, initial, dyn, ParallelRounds(max_rounds=5), rng_seed=0)
    immune = run_contagion(g, initial, dyn, ParallelRounds(max_rounds=5, immunity=True),
                           rng_seed=0)
    assert plain.state == (RED, RED, RED)
    assert immune.state == (RED, UNINFECTED, RED)


def test_layer_order_matches_equivalent_single_pass():
    g = path_graph()
    dyn = linear_dyn()
    initial = [RED, UNINFECTED, UNINFECTED]
    layered = run_contagion(g, initial, dyn, LayerOrder(((1,), (2,))), rng_seed=0)
    sequential = run_contagion(g, initial, dyn, SinglePassOrder((1, 2)), rng_seed=0)
    assert layered.state == sequential.state


def test_layer_order_rejects_overlapping_layers():
    with pytest.raises(ScheduleError, match="more than one layer"):
        LayerOrder(((0, 1), (1, 2)))


def test_random_sequential_updates_one_vertex_per_step():
    g = Graph(n=5, edges=((0, 1), (0, 2), (0, 3), (0, 4)))
    out = run_contagion(g, [RED] + [UNINFECTED] * 4, linear_dyn(),
                        RandomSequential(max_steps=3), rng_seed=7, keep_trace=True)
    assert len(out.trace) == 3
    assert all(len(rec.candidates) == 1 for rec in out.trace)
    assert out.chi_R == 4  # seed plus one new infection per step


def test_random_sequential_is_deterministic_given_the_seed():
    g = Graph(n=5, edges=((0, 1), (0, 2), (1, 3), (2, 4)))
    initial = [RED, UNINFECTED, UNINFECTED, UNINFECTED, UNINFECTED]
    a = run_contagion(g, initial, linear_dyn(), RandomSequential(max_steps=10), rng_seed=123)
    b = run_contagion(g, initial, linear_dyn(), RandomSequential(max_steps=10), rng_seed=123)
    assert a == b


def test_seeded_vertices_never_update():
    g = Graph(n=2, edges=((0, 1), (1, 0)))
    out = run_contagion(g, [RED, BLUE], linear_dyn(), ParallelRounds(max_rounds=10),
                        rng_seed=0)
    assert out.state == (RED, BLUE)


def test_zero_in_degree_vertices_are_never_infected():
    g = Graph(n=3, edges=((0, 1),))
    out = run_contagion(g, [RED, UNINFECTED, UNINFECTED], linear_dyn(),
                        ParallelRounds(max_rounds=10), rng_seed=0)
    assert out.state == (RED, RED, UNINFECTED)


def test_initial_state_validation():
    g = path_graph()
    with pytest.raises(ValidationError, match="length"):
        run_contagion(g, [RED, UNINFECTED], linear_dyn(), ParallelRounds(1), rng_seed=0)
    with pytest.raises(ValidationError, match="invalid"):
        run_contagion(g, [RED, 9, UNINFECTED], linear_dyn(), ParallelRounds(1), rng_seed=0)


# ---------------------------------------------------------------------------
# JSON loaders.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("doc", [
    {"f": {"kind": "power", "r": 2.0}, "g": {"kind": "tullock", "s": 1.5}},
    {"f": {"kind": "threshold", "alpha": 0.75}, "g": {"kind": "tullock", "s": 1.0}},
    {"f": {"kind": "halfpoint", "eps": 0.01}, "g": {"kind": "tullock", "s": 1.0}},
    {"f": {"kind": "table", "points": [[0.0, 0.0], [0.5, 0.2], [1.0, 1.0]]},
     "g": {"kind": "table", "points": [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]}},
    {"h": "builtin:quadratic_damped"},
])
def test_load_dynamics_round_trip(doc):
    dyn = load_dynamics(doc)
    assert load_dynamics(dyn.to_json_dict()) == dyn


@pytest.mark.parametrize("doc, pattern", [
    ({"f": {"kind": "power", "r": 1.0}}, "both 'f' and 'g'"),
    ({"h": "builtin:x", "f": {"kind": "power", "r": 1.0}}, "not both"),
    ({"h": "quadratic_damped"}, "builtin:"),
    ({"f": {"kind": "nope"}, "g": {"kind": "tullock", "s": 1.0}}, "unknown switching"),
    ({"f": {"kind": "power"}, "g": {"kind": "tullock", "s": 1.0}}, "missing field 'r'"),
    ({"f": {"kind": "power", "r": 1.0}, "g": {"kind": "nope"}}, "unknown selection"),
    ("{bad json", "not valid JSON"),
    ([1, 2], "JSON object"),
])
def test_load_dynamics_error_cases(doc, pattern):
    with pytest.raises(DynamicsDefinitionError, match=pattern):
        load_dynamics(doc)


@pytest.mark.parametrize("doc", [
    {"kind": "parallel", "max_rounds": 5, "immunity": False},
    {"kind": "parallel", "max_rounds": 2, "immunity": True},
    {"kind": "single_pass", "order": [2, 0, 1]},
    {"kind": "layer_order", "layers": [[0, 1], [2]]},
    {"kind": "random_sequential", "max_steps": 9},
])
def test_load_schedule_round_trip(doc):
    sched = load_schedule(doc)
    assert load_schedule(sched.to_json_dict()) == sched


@pytest.mark.parametrize("doc, pattern", [
    ({"kind": "nope"}, "unknown schedule kind"),
    ({"kind": "parallel"}, "missing field"),
    ({"kind": "parallel", "max_rounds": "soon"}, "malformed"),
    ({"max_rounds": 5}, "'kind'"),
    ("{bad json", "not valid JSON"),
])
def test_load_schedule_error_cases(doc, pattern):
    with pytest.raises(ScheduleError, match=pattern):
        load_schedule(doc)
