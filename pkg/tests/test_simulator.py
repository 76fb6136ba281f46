import json

import pytest

from util import fixture_bytes

from crashscope.domain import (
    Action,
    ContextualFeature,
    Orientation,
    StackFrame,
    StackTrace,
    UiEvent,
    ValidationError,
    component_center,
)
from crashscope.simulator import (
    CrashDialogBlocking,
    EventOutcome,
    SimulatorPort,
    format_stack_trace,
    load_app_model,
    parse_stack_trace,
    resolution_label,
)

MINIMAL = {
    "app": {"id": "mini", "name": "Mini", "version": "1", "package": "com.mini"},
    "activities": [{"name": "Main", "rotatable": False}],
    "screens": [
        {
            "id": "only",
            "activity": "Main",
            "initial": True,
            "components": [
                {
                    "id": "b1",
                    "kind": "BUTTON",
                    "label": "Go",
                    "bounds": {"left": 0, "top": 0, "right": 100, "bottom": 50},
                    "clickable": True,
                }
            ],
        }
    ],
    "transitions": [],
    "crash_rules": [],
}


def doc(**overrides) -> bytes:
    merged = json.loads(json.dumps(MINIMAL))
    merged.update(overrides)
    return json.dumps(merged).encode()


def tap(component, model_screen):
    comp = model_screen.component_by_id(component)
    return UiEvent(Action.TAP, target=component, coordinates=component_center(comp.bounds))


# -- loading


def test_minimal_model_loads():
    model = load_app_model(doc())
    assert len(model.screens) == 1
    assert not model.transitions
    assert model.initial_screen.id == "only"


def test_dangling_to_screen_is_named_in_error():
    bad = doc(
        transitions=[
            {"from_screen": "only", "trigger": {"component": "b1", "action": "TAP"}, "to_screen": "ghost"}
        ]
    )
    with pytest.raises(ValidationError) as err:
        load_app_model(bad)
    assert "transitions[0].to_screen" in str(err.value)


def test_duplicate_initial_screen_rejected():
    two = json.loads(json.dumps(MINIMAL))
    second = json.loads(json.dumps(two["screens"][0]))
    second["id"] = "extra"
    two["screens"].append(second)
    with pytest.raises(ValidationError) as err:
        load_app_model(json.dumps(two).encode())
    assert "initial" in str(err.value)


def test_login_fixture_counts():
    model = load_app_model(fixture_bytes("two_screen_login", "model.json"))
    assert len(model.screens) == 2
    assert len(model.transitions) == 1
    assert len(model.crash_rules) == 1


def test_shadowed_rule_warning():
    shadowed = doc(
        transitions=[
            {"from_screen": "only", "trigger": {"component": "b1", "action": "TAP"}, "to_screen": "only"},
            {"from_screen": "only", "trigger": {"component": "b1", "action": "TAP"}, "to_screen": "only"},
        ]
    )
    model = load_app_model(shadowed)
    assert any("shadowed" in w for w in model.warnings)


# -- sessions


def test_launch_lands_on_initial_screen(login_model):
    session = SimulatorPort(login_model).launch()
    state = session.query_hierarchy()
    assert state.activity == "LoginActivity"
    assert [c.id for c in state.components] == ["user_field", "pass_field", "login_btn"]


def test_two_launches_independent_and_equal(login_model):
    port = SimulatorPort(login_model)
    a, b = port.launch(), port.launch()
    assert a.query_hierarchy() == b.query_hierarchy()
    a.execute_event(UiEvent(Action.TYPE, target="user_field", coordinates=(540, 460), text="x"))
    assert a.entered_text("user_field") == "x"
    assert b.entered_text("user_field") == ""


def test_tap_login_with_empty_fields_crashes(login_model):
    session = SimulatorPort(login_model).launch()
    screen = login_model.screen("login")
    result = session.execute_event(tap("login_btn", screen))
    assert result.status == EventOutcome.CRASHED
    assert session.crash_dialog_visible()
    with pytest.raises(CrashDialogBlocking):
        session.query_hierarchy()
    with pytest.raises(CrashDialogBlocking):
        session.execute_event(tap("login_btn", screen))


def test_tap_login_after_typing_reaches_home(login_model):
    session = SimulatorPort(login_model).launch()
    screen = login_model.screen("login")
    field = screen.component_by_id("user_field")
    session.execute_event(
        UiEvent(Action.TYPE, target="user_field", coordinates=component_center(field.bounds), text="ann")
    )
    result = session.execute_event(tap("login_btn", screen))
    assert result.status == EventOutcome.OK
    assert session.query_hierarchy().activity == "HomeActivity"


def test_tap_hitting_nothing_is_no_effect(login_model):
    session = SimulatorPort(login_model).launch()
    result = session.execute_event(UiEvent(Action.TAP, target="nowhere", coordinates=(5, 5)))
    assert result.status == EventOutcome.NO_EFFECT
    assert result.hit is None


def test_context_set_crash_rule(corpus_dir):
    model = load_app_model(fixture_bytes("network_outage", "model.json"))
    session = SimulatorPort(model).launch()
    result = session.execute_event(
        UiEvent(Action.CONTEXT_SET, context_feature=ContextualFeature.NETWORK, context_value="OFF")
    )
    assert result.status == EventOutcome.CRASHED


def test_drain_returns_app_entries_once(login_model):
    session = SimulatorPort(login_model).launch()
    session.execute_event(tap("login_btn", login_model.screen("login")))
    drained = session.drain_exception_log()
    assert len(drained) == 1
    assert drained[0].exception_type == "java.lang.NullPointerException"
    assert "pid" in drained[0].message  # raw captures carry pid noise
    assert session.drain_exception_log() == []


def test_reset_restores_launch_state_but_keeps_log(login_model):
    port = SimulatorPort(login_model)
    session = port.launch()
    session.execute_event(tap("login_btn", login_model.screen("login")))
    session.reset_app()
    assert not session.crash_dialog_visible()
    assert session.query_hierarchy() == port.launch().query_hierarchy()
    assert session.context.non_default_items() == []
    assert len(session.drain_exception_log()) == 1  # drain is the only clear


def test_crash_dominates_transition(corpus_dir):
    model = load_app_model(fixture_bytes("overlap_dominance", "model.json"))
    session = SimulatorPort(model).launch()
    screen = model.screen("main")
    assert session.execute_event(tap("danger_btn", screen)).status == EventOutcome.CRASHED


def test_rotation_only_on_rotatable_activities(login_model):
    session = SimulatorPort(login_model).launch()
    assert session.execute_event(UiEvent(Action.ROTATE)).status == EventOutcome.NO_EFFECT
    gallery = load_app_model(fixture_bytes("rotation_lifecycle", "model.json"))
    rotating = SimulatorPort(gallery).launch()
    assert rotating.execute_event(UiEvent(Action.ROTATE)).status == EventOutcome.CRASHED
    assert rotating.orientation == Orientation.LANDSCAPE


def test_back_without_rule_is_no_effect(login_model):
    session = SimulatorPort(login_model).launch()
    assert session.execute_event(UiEvent(Action.BACK)).status == EventOutcome.NO_EFFECT


def test_back_rule_navigates(wizard_model):
    session = SimulatorPort(wizard_model).launch()
    for screen_id, button in (("step1", "next1_btn"), ("step2", "next2_btn")):
        session.execute_event(tap(button, wizard_model.screen(screen_id)))
    assert session.query_hierarchy().activity == "WizardActivity"
    assert session.execute_event(UiEvent(Action.BACK)).status == EventOutcome.OK
    state = session.query_hierarchy()
    assert state.component("next2_btn") is not None  # back on step2


def test_nonfatal_rule_logs_without_dialog(wizard_model):
    session = SimulatorPort(wizard_model).launch()
    session.execute_event(tap("next1_btn", wizard_model.screen("step1")))
    result = session.execute_event(tap("next2_btn", wizard_model.screen("step2")))
    assert result.status == EventOutcome.OK  # transition still fires
    assert not session.crash_dialog_visible()
    assert len(session.drain_exception_log()) == 1


def test_topmost_component_wins_hit_test():
    layered = json.loads(json.dumps(MINIMAL))
    layered["screens"][0]["components"].append(
        {
            "id": "overlay",
            "kind": "BUTTON",
            "label": "Overlay",
            "bounds": {"left": 0, "top": 0, "right": 100, "bottom": 50},
            "clickable": True,
        }
    )
    model = load_app_model(json.dumps(layered).encode())
    session = SimulatorPort(model).launch()
    result = session.execute_event(UiEvent(Action.TAP, target="overlay", coordinates=(50, 25)))
    assert result.hit == "overlay"


def test_determinism_event_for_event(dual_model):
    port = SimulatorPort(dual_model)
    a, b = port.launch(), port.launch()
    events = [
        UiEvent(Action.TAP, target="alpha_btn", coordinates=(540, 460)),
        UiEvent(Action.TAP, target="alpha_crash_btn", coordinates=(540, 560)),
    ]
    for event in events:
        ra, rb = a.execute_event(event), b.execute_event(event)
        assert ra == rb
        assert a.screenshot() == b.screenshot()
    assert [t.to_json() for t in a.drain_exception_log()] == [
        t.to_json() for t in b.drain_exception_log()
    ]


# -- screenshots


def test_screenshot_byte_identical_and_highlight(login_model):
    session = SimulatorPort(login_model).launch()
    assert session.screenshot() == session.screenshot()
    highlighted = session.screenshot(highlight="login_btn")
    assert highlighted.count('class="highlight"') == 1
    assert 'class="highlight"' not in session.screenshot()


def test_screenshot_dialog_overlay(login_model):
    session = SimulatorPort(login_model).launch()
    session.execute_event(tap("login_btn", login_model.screen("login")))
    shot = session.screenshot()
    assert 'class="crash-dialog"' in shot
    assert "has stopped" in shot


def test_resolution_labels():
    assert resolution_label(Orientation.PORTRAIT) == "1080x1920"
    assert resolution_label(Orientation.LANDSCAPE) == "1920x1080"


# -- stack trace wire form


def test_wire_format_roundtrip():
    trace = StackTrace(
        "java.lang.IllegalStateException",
        "widget: not attached",
        (
            StackFrame("com.app.ui", "Widget", "attach", "Widget.java", 31),
            StackFrame("android.view", "View", "dispatch", "View.java", 900),
        ),
    )
    text = format_stack_trace(trace)
    assert text.splitlines()[0] == "java.lang.IllegalStateException: widget: not attached"
    assert parse_stack_trace(text) == trace


def test_wire_parse_rejects_garbage():
    with pytest.raises(ValidationError):
        parse_stack_trace("Type: msg\n  at not-a-frame")
