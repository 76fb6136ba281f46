import json

import pytest

from util import fixture_bytes

from crashscope.analysis import extract_feature_map, load_app_ir
from crashscope.corpus import learned_edge_set, oracle_graph
from crashscope.domain import (
    Action,
    ContextMode,
    StrategyConfig,
    TextMode,
    TraceOutcome,
    Traversal,
    UiEvent,
    component_center,
)
from crashscope.ripper import (
    ExplorationBudget,
    NavOutcome,
    TransitionGraph,
    explore_app,
    navigate_to,
    run_matrix,
)
from crashscope.simulator import SimulatorPort, load_app_model


def load_pair(app_id):
    model = load_app_model(fixture_bytes(app_id, "model.json"))
    ir = load_app_ir(fixture_bytes(app_id, "ir.json"))
    return model, ir


def run_one(app_id, traversal=Traversal.TOP_DOWN, text=TextMode.NONE, context=ContextMode.NORMAL, seed=0, budget=None):
    model, ir = load_pair(app_id)
    strategy = StrategyConfig(traversal, text, context, seed)
    features = extract_feature_map(ir)
    return explore_app(SimulatorPort(model), strategy, features, budget or ExplorationBudget()), model


def test_learned_graph_equals_oracle_on_login_fixture():
    result, model = run_one("two_screen_login")
    nodes, edges = oracle_graph(model)
    assert set(result.graph.nodes) == set(nodes)
    assert learned_edge_set(result) == edges


def test_unexpected_text_required_for_special_char_crash():
    for text, expect in ((TextMode.NONE, 0), (TextMode.EXPECTED, 0), (TextMode.UNEXPECTED, 1)):
        result, _ = run_one("special_chars_form", text=text)
        assert len(result.crashes) == expect, text


def test_single_screen_no_clickables():
    doc = {
        "app": {"id": "bare", "name": "Bare", "version": "1", "package": "com.bare"},
        "activities": [{"name": "Main", "rotatable": False}],
        "screens": [
            {
                "id": "s",
                "activity": "Main",
                "initial": True,
                "components": [
                    {"id": "l", "kind": "LABEL", "label": "Hi", "bounds": {"left": 0, "top": 0, "right": 10, "bottom": 10}}
                ],
            }
        ],
        "transitions": [],
        "crash_rules": [],
    }
    model = load_app_model(json.dumps(doc).encode())
    ir = load_app_ir(
        json.dumps(
            {
                "package": "com.bare",
                "methods": [{"id": "m"}],
                "call_edges": [],
                "activity_entries": {"Main": ["m"]},
                "manifest": {"activities": [{"name": "Main"}]},
            }
        )
    )
    strategy = StrategyConfig(Traversal.TOP_DOWN, TextMode.NONE, ContextMode.NORMAL, 0)
    result = explore_app(SimulatorPort(model), strategy, extract_feature_map(ir), ExplorationBudget())
    assert len(result.traces) == 1
    assert result.traces[0].outcome == TraceOutcome.COMPLETED
    assert not result.crashes
    assert len(result.graph.nodes) == 1


def test_crash_resilience_two_disjoint_paths():
    result, _ = run_one("dual_path_crashes")
    types = {c.stack_trace.exception_type for c in result.crashes}
    assert types == {
        "java.lang.ArrayIndexOutOfBoundsException",
        "java.lang.ClassCastException",
    }


def test_no_triple_executed_twice():
    result, _ = run_one("dual_path_crashes")
    executed = []
    for trace in result.traces:
        for step in trace.steps:
            if step.event.action in (Action.TAP, Action.LONG_TAP):
                executed.append((step.screen_before, step.event.target, step.event.action))
    # Navigation replays may repeat an event; state-discovery executions may not.
    fresh = [t for t in executed if executed.index(t) == executed.index(t)]
    assert len(set(executed)) <= len(executed)
    seen = set()
    duplicates = [t for t in executed if t in seen or seen.add(t)]
    for dup in duplicates:
        # any duplicate must come from a navigation replay along a learned edge
        assert any(
            e.src == dup[0] and e.event.target == dup[1] for e in result.graph.edges
        ), dup


def test_steps_chain_and_target_components_exist():
    result, _ = run_one("dual_path_crashes")
    for trace in result.traces:
        for a, b in zip(trace.steps, trace.steps[1:]):
            assert a.screen_after == b.screen_before
        for step in trace.steps:
            if step.event.target:
                snapshot = result.graph.nodes[step.screen_before]
                assert snapshot.component(step.event.target) is not None


def test_budget_limits_counted_events():
    budget = ExplorationBudget(max_events=2)  # the wizard needs 3 taps to finish
    result, _ = run_one("deep_linear", budget=budget)
    assert result.events_counted <= 2
    assert result.traces[-1].outcome == TraceOutcome.BUDGET_EXHAUSTED


def test_adverse_context_emits_context_steps():
    result, _ = run_one("network_outage", context=ContextMode.ADVERSE)
    assert len(result.crashes) == 1
    first_steps = result.traces[0].steps
    assert first_steps[0].event.action == Action.CONTEXT_SET
    assert first_steps[0].event.context_value == "OFF"


def test_double_rotation_once_per_state():
    result, _ = run_one("rotation_lifecycle", context=ContextMode.ADVERSE)
    assert len(result.crashes) == 1  # crash on first rotation, not retried
    rotates = [
        s for t in result.traces for s in t.steps if s.event.action == Action.ROTATE
    ]
    # gallery crashes at its first rotate; caption completes the double rotation
    assert 1 <= len(rotates) <= 3


def test_one_shot_transition_unreachable_after_reset():
    result, _ = run_one("one_shot_vault", traversal=Traversal.TOP_DOWN, text=TextMode.EXPECTED)
    assert not result.crashes
    result, _ = run_one("one_shot_vault", traversal=Traversal.BOTTOM_UP, text=TextMode.EXPECTED)
    assert len(result.crashes) == 1


def test_warnings_recorded_for_nonfatal_exceptions():
    result, _ = run_one("deep_linear")
    warnings = [w for t in result.traces for w in t.warnings]
    assert any("uncaught exception without dialog" in w for w in warnings)
    assert not result.crashes


def test_random_traversal_reserved():
    model, ir = load_pair("two_screen_login")
    strategy = StrategyConfig(Traversal.RANDOM, TextMode.NONE, ContextMode.NORMAL, 0)
    with pytest.raises(NotImplementedError):
        explore_app(SimulatorPort(model), strategy, extract_feature_map(ir), ExplorationBudget())


# -- navigateTo


def build_graph(model, *taps):
    """Walk a linear path once, recording edges like the ripper would."""
    session = SimulatorPort(model).launch()
    graph = TransitionGraph()
    graph.add_node(session.current_state())
    for screen_id, component_id in taps:
        comp = model.screen(screen_id).component_by_id(component_id)
        event = UiEvent(Action.TAP, target=component_id, coordinates=component_center(comp.bounds))
        before = session.current_state().state_key
        session.execute_event(event)
        after_state = session.current_state()
        graph.add_node(after_state)
        graph.add_edge(before, event, after_state.state_key)
    return graph, session


def test_navigate_to_root_is_zero_events(wizard_model):
    graph, session = build_graph(wizard_model, ("step1", "next1_btn"))
    assert navigate_to(session, graph, graph.root) == NavOutcome.REACHED
    assert session.current_state().state_key == graph.root


def test_navigate_replays_shortest_path(wizard_model):
    graph, session = build_graph(
        wizard_model, ("step1", "next1_btn"), ("step2", "next2_btn"), ("step3", "next3_btn")
    )
    third = [k for k in graph.nodes if graph.nodes[k].component("next3_btn")][0]
    session.reset_app()
    assert navigate_to(session, graph, third) == NavOutcome.REACHED
    assert session.current_state().state_key == third
    path = graph.shortest_path(third)
    assert len(path) == 2


def test_navigate_unreachable_after_guard_consumed():
    model = load_app_model(fixture_bytes("one_shot_vault", "model.json"))
    session = SimulatorPort(model).launch()
    graph = TransitionGraph()
    graph.add_node(session.current_state())
    field = model.screen("entry").component_by_id("code_field")
    session.execute_event(
        UiEvent(Action.TYPE, target="code_field", coordinates=component_center(field.bounds), text="zz")
    )
    button = model.screen("entry").component_by_id("open_btn")
    event = UiEvent(Action.TAP, target="open_btn", coordinates=component_center(button.bounds))
    before = session.current_state().state_key
    session.execute_event(event)
    inner = session.current_state()
    graph.add_node(inner)
    graph.add_edge(before, event, inner.state_key)
    # Second visit: the typed code is gone after reset, so the guard fails.
    assert navigate_to(session, graph, inner.state_key) == NavOutcome.UNREACHABLE
    assert any(e.stale for e in graph.edges)


# -- matrix


def test_matrix_returns_twelve_results():
    model, ir = load_pair("two_screen_login")
    results = run_matrix(model, ir, ExplorationBudget(), base_seed=0)
    assert len(results) == 12
    assert len({r.strategy.label() for r in results}) == 12


def test_matrix_parallel_equals_serial():
    model, ir = load_pair("kitchen_sink")
    serial = run_matrix(model, ir, ExplorationBudget(), base_seed=0, worker_count=1)
    parallel = run_matrix(model, ir, ExplorationBudget(), base_seed=0, worker_count=4)
    assert [sorted(r.signatures()) for r in serial] == [sorted(r.signatures()) for r in parallel]


def test_matrix_covers_three_dimension_crashes():
    model, ir = load_pair("kitchen_sink")
    results = run_matrix(model, ir, ExplorationBudget(), base_seed=0)
    union = {sig for r in results for sig in r.signatures()}
    assert len(union) == 3


def test_deterministic_traces_across_runs():
    model, ir = load_pair("dual_path_crashes")
    first = run_matrix(model, ir, ExplorationBudget(), base_seed=0)
    second = run_matrix(model, ir, ExplorationBudget(), base_seed=0)
    a = [t.to_json() for r in first for t in r.traces]
    b = [t.to_json() for r in second for t in r.traces]
    assert a == b
    assert [r.screenshots for r in first] == [r.screenshots for r in second]


def test_graph_dot_export():
    result, _ = run_one("deep_linear")
    dot = result.graph.to_dot()
    assert dot.startswith("digraph")
    assert "WizardActivity" in dot
