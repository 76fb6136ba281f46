import pytest

from util import fixture_bytes

from crashscope.analysis import extract_feature_map, load_app_ir
from crashscope.domain import (
    ContextMode,
    StackFrame,
    StrategyConfig,
    TextMode,
    Traversal,
)
from crashscope.report import (
    ReportDoc,
    ReportError,
    generate_report,
    render_html,
    sentence_for,
    validate_report,
)
from crashscope.ripper import ExplorationBudget, explore_app
from crashscope.simulator import SimulatorPort, load_app_model


def crashing_run(app_id, **kwargs):
    model = load_app_model(fixture_bytes(app_id, "model.json"))
    ir = load_app_ir(fixture_bytes(app_id, "ir.json"))
    strategy = StrategyConfig(
        kwargs.get("traversal", Traversal.TOP_DOWN),
        kwargs.get("text", TextMode.NONE),
        kwargs.get("context", ContextMode.NORMAL),
        0,
    )
    result = explore_app(SimulatorPort(model), strategy, extract_feature_map(ir), ExplorationBudget())
    crash = result.crashes[0]
    trace = next(t for t in result.traces if t.trace_id == crash.trace_id)
    return model, result, trace, crash


def build_report(app_id, **kwargs):
    model, result, trace, crash = crashing_run(app_id, **kwargs)
    doc = generate_report(
        crash,
        trace,
        model.package,
        screens=result.graph.nodes,
        screenshot_exists=lambda ref: ref in result.screenshots,
    )
    return model, result, trace, crash, doc


def test_sentence_count_matches_trace_length():
    model, result, trace, crash, doc = build_report("dual_path_crashes")
    assert len(doc.steps) == len(trace.steps)
    assert len(doc.screen_flow) == len(doc.steps)
    validate_report(doc, trace, model.package)


def test_sentences_use_component_labels():
    model, result, trace, crash, doc = build_report("dual_path_crashes")
    assert doc.steps[0].sentence == 'Tap on "Alpha module"'
    assert doc.steps[-1].sentence == 'Tap on "Compute alpha"'


def test_network_sentence_and_badge_flip():
    model, result, trace, crash, doc = build_report("kitchen_sink", context=ContextMode.ADVERSE)
    # first crash under ADVERSE is the network rule firing on the CONTEXT_SET
    assert doc.steps[-1].sentence == "Turn the Network OFF"
    assert doc.steps[-1].badges == ()  # badge shows the pre-event context

    # A context change early in a trace badges every later step.
    model2, result2, trace2, crash2, doc2 = build_report("app_level_sensor", context=ContextMode.ADVERSE)
    assert doc2.steps[0].sentence == "Set the GPS to an infeasible value"
    assert all("GPS:INFEASIBLE" in step.badges for step in doc2.steps[1:])


def test_pruned_trace_keeps_only_app_frames():
    model, result, trace, crash, doc = build_report("two_screen_login")
    # planted exception: 2 app frames + 2 framework frames
    assert len(crash.stack_trace.frames) == 4
    assert len(doc.pruned_frames) == 2
    assert all(f.package.startswith(model.package) for f in doc.pruned_frames)


def test_sensor_sentence_templates():
    from crashscope.domain import Action, ContextualFeature, Orientation, UiEvent

    gps_event = UiEvent(
        Action.CONTEXT_SET, context_feature=ContextualFeature.GPS, context_value="INFEASIBLE"
    )
    assert sentence_for(gps_event, None, Orientation.PORTRAIT) == "Set the GPS to an infeasible value"
    rotate = UiEvent(Action.ROTATE)
    assert sentence_for(rotate, None, Orientation.PORTRAIT) == "Rotate the device to landscape"
    from crashscope.domain import Action as A

    launch = UiEvent(A.LAUNCH)
    assert sentence_for(launch, None, Orientation.PORTRAIT) == "Launch the application"


def test_report_json_roundtrip_identity():
    model, result, trace, crash, doc = build_report("two_screen_login")
    assert ReportDoc.from_json(doc.to_json()) == doc


def test_render_html_deterministic_and_embeds_svg():
    model, result, trace, crash, doc = build_report("dual_path_crashes")
    html_a = render_html(doc, result.screenshots.get)
    html_b = render_html(doc, result.screenshots.get)
    assert html_a == html_b
    assert "<svg" in html_a
    assert "1. General Information" in html_a
    assert "2. Steps to Reproduce" in html_a
    assert "3. Screen Flow" in html_a
    assert "4. Pruned Stack Trace" in html_a
    assert "Warnings" not in html_a  # no warnings block when empty


def test_missing_screenshot_yields_placeholder_and_warning():
    model, result, trace, crash = crashing_run("two_screen_login")
    doc = generate_report(
        crash, trace, model.package, screens=result.graph.nodes, screenshot_exists=lambda ref: False
    )
    assert doc.warnings
    html = render_html(doc, lambda ref: None)
    assert "screenshot missing" in html
    assert "Warnings" in html


def test_frameless_crash_flagged_in_html():
    model, result, trace, crash, doc = build_report("framework_only")
    assert crash.dialog_only
    assert doc.pruned_frames == ()
    html = render_html(doc, result.screenshots.get)
    assert "frameless" in html


def test_report_requires_crashed_trace(wizard_model):
    ir = load_app_ir(fixture_bytes("deep_linear", "ir.json"))
    strategy = StrategyConfig(Traversal.TOP_DOWN, TextMode.NONE, ContextMode.NORMAL, 0)
    result = explore_app(
        SimulatorPort(wizard_model), strategy, extract_feature_map(ir), ExplorationBudget()
    )
    _, _, _, crash = crashing_run("two_screen_login")
    with pytest.raises(ReportError):
        generate_report(crash, result.traces[0], "com.example.wizard")


def test_device_and_os_labels_from_identification():
    model, result, trace, crash, doc = build_report("two_screen_login")
    assert doc.general["device"] == "sim-1080x1920"
    assert doc.general["os_version"] == "v1"
    assert doc.general["resolution"] == "1080x1920"
