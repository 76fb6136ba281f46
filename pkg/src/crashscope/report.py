"""Natural-language crash reports: four sections, rendered to self-contained HTML.

Section 1 is general information plus the context-badge legend, section 2 the
numbered reproduction sentences with per-step context badges, section 3 the
screen flow with the interacted component highlighted, and section 4 the
stack trace pruned to app-package frames. Rendering is deterministic byte
for byte, so reports are valid golden-file material.
"""

from __future__ import annotations

from dataclasses import dataclass
from html import escape
from typing import Callable, Optional

from .domain import (
    Action,
    ContextualFeature,
    CrashRecord,
    CrashScopeError,
    ExecutionTrace,
    INFEASIBLE_SENSOR_READINGS,
    Orientation,
    ScreenState,
    StackFrame,
    StrategyConfig,
    TraceOutcome,
    UiEvent,
)
from .simulator import DEVICE_IDENTIFICATION

PLACEHOLDER_SVG = (
    '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="270" height="480" '
    'viewBox="0 0 270 480"><rect width="270" height="480" fill="#eceff1"/>'
    '<text x="135" y="240" font-size="18" text-anchor="middle" fill="#607d8b">'
    "screenshot missing</text></svg>"
)

_GLYPHS = {
    ContextualFeature.NETWORK: "NET",
    ContextualFeature.GPS: "GPS",
    ContextualFeature.ACCELEROMETER: "ACC",
    ContextualFeature.MAGNETOMETER: "MAG",
    ContextualFeature.TEMPERATURE: "TMP",
    ContextualFeature.ROTATION: "ROT",
}

_SENTENCE_LABELS = {
    ContextualFeature.NETWORK: "the Network",
    ContextualFeature.GPS: "the GPS",
    ContextualFeature.ACCELEROMETER: "the Accelerometer",
    ContextualFeature.MAGNETOMETER: "the Magnetometer",
    ContextualFeature.TEMPERATURE: "the Temperature Sensor",
}


class ReportError(CrashScopeError, ValueError):
    pass


@dataclass(frozen=True)
class ReportStep:
    index: int
    sentence: str
    badges: tuple[str, ...]

    def to_json(self) -> dict:
        return {"index": self.index, "sentence": self.sentence, "badges": list(self.badges)}

    @classmethod
    def from_json(cls, d: dict) -> "ReportStep":
        return cls(d["index"], d["sentence"], tuple(d["badges"]))


@dataclass(frozen=True)
class ReportDoc:
    crash_id: str
    general: dict
    steps: tuple[ReportStep, ...]
    screen_flow: tuple[str, ...]
    pruned_exception_type: str
    pruned_message: str
    pruned_frames: tuple[StackFrame, ...]
    signature: str
    dialog_only: bool
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "crash_id": self.crash_id,
            "section1_general": self.general,
            "section2_steps": [s.to_json() for s in self.steps],
            "section3_screen_flow": list(self.screen_flow),
            "section4_pruned_trace": {
                "exception_type": self.pruned_exception_type,
                "message": self.pruned_message,
                "frames": [f.to_json() for f in self.pruned_frames],
            },
            "signature": self.signature,
            "dialog_only": self.dialog_only,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ReportDoc":
        pruned = d["section4_pruned_trace"]
        return cls(
            crash_id=d["crash_id"],
            general=d["section1_general"],
            steps=tuple(ReportStep.from_json(s) for s in d["section2_steps"]),
            screen_flow=tuple(d["section3_screen_flow"]),
            pruned_exception_type=pruned["exception_type"],
            pruned_message=pruned["message"],
            pruned_frames=tuple(StackFrame.from_json(f) for f in pruned["frames"]),
            signature=d["signature"],
            dialog_only=d.get("dialog_only", False),
            warnings=tuple(d.get("warnings", ())),
        )


def context_legend() -> list[dict]:
    legend = []
    for feature in ContextualFeature:
        entry = {"feature": feature.value, "glyph": _GLYPHS[feature]}
        if feature == ContextualFeature.NETWORK:
            entry["states"] = "ON / OFF"
        elif feature == ContextualFeature.ROTATION:
            entry["states"] = "PORTRAIT / LANDSCAPE"
        else:
            entry["states"] = f"NORMAL / INFEASIBLE {INFEASIBLE_SENSOR_READINGS[feature]}"
        legend.append(entry)
    return legend


def _badges(context) -> tuple[str, ...]:
    return tuple(f"{_GLYPHS[f]}:{value}" for f, value in context.non_default_items())


def sentence_for(event: UiEvent, label: Optional[str], pre_rotation: Orientation) -> str:
    """The frozen per-event sentence templates."""
    if event.action == Action.TAP:
        return f'Tap on "{label}"'
    if event.action == Action.LONG_TAP:
        return f'Long-press "{label}"'
    if event.action == Action.TYPE:
        return f'Enter "{event.text}" into the "{label}" field'
    if event.action == Action.ROTATE:
        landed = (
            Orientation.LANDSCAPE if pre_rotation == Orientation.PORTRAIT else Orientation.PORTRAIT
        )
        return f"Rotate the device to {landed.value.lower()}"
    if event.action == Action.CONTEXT_SET:
        feature = event.context_feature
        if feature == ContextualFeature.NETWORK:
            return f"Turn {_SENTENCE_LABELS[feature]} {event.context_value}"
        if event.context_value == "INFEASIBLE":
            return f"Set {_SENTENCE_LABELS[feature]} to an infeasible value"
        return f"Set {_SENTENCE_LABELS[feature]} to a normal value"
    if event.action == Action.LAUNCH:
        return "Launch the application"
    return f"Press {event.action.value}"


def generate_report(
    crash: CrashRecord,
    trace: ExecutionTrace,
    app_package: str,
    screens: Optional[dict[str, ScreenState]] = None,
    screenshot_exists: Optional[Callable[[str], bool]] = None,
    device_identification: str = DEVICE_IDENTIFICATION,
) -> ReportDoc:
    """Build the four-section report for one crashing trace.

    `screens` maps state keys to snapshots for component-label lookup (the
    persisted transition graph provides it). A missing screenshot becomes a
    placeholder plus a warning entry rather than a failure.
    """
    if trace.outcome != TraceOutcome.CRASHED:
        raise ReportError(f"trace {trace.trace_id} did not crash")
    if crash.trace_id != trace.trace_id:
        raise ReportError(f"crash {crash.crash_id} does not reference trace {trace.trace_id}")

    device, _, os_version = device_identification.partition("/")
    warnings: list[str] = []
    steps: list[ReportStep] = []
    flow: list[str] = []
    screens = screens or {}

    for step in trace.steps:
        label = None
        if step.event.target is not None:
            snapshot = screens.get(step.screen_before)
            comp = snapshot.component(step.event.target) if snapshot else None
            if comp is not None:
                label = comp.label
            else:
                label = step.event.target
                warnings.append(
                    f"step {step.index}: no snapshot for component {step.event.target!r}; "
                    f"using its id as the label"
                )
        steps.append(
            ReportStep(
                index=step.index,
                sentence=sentence_for(step.event, label, step.context.rotation),
                badges=_badges(step.context),
            )
        )
        ref = step.screenshot_ref
        if screenshot_exists is not None and not screenshot_exists(ref):
            warnings.append(f"step {step.index}: screenshot {ref!r} missing; placeholder used")
            ref = ""
        flow.append(ref)

    pruned = tuple(f for f in crash.stack_trace.frames if f.package.startswith(app_package))
    general = {
        "app_name": trace.app_name,
        "app_version": trace.app_version,
        "app_package": app_package,
        "os_version": os_version or device_identification,
        "device": device,
        "orientation": crash.orientation.value,
        "resolution": crash.resolution,
        "strategy": trace.strategy.label(),
        "legend": context_legend(),
    }
    return ReportDoc(
        crash_id=crash.crash_id,
        general=general,
        steps=tuple(steps),
        screen_flow=tuple(flow),
        pruned_exception_type=crash.stack_trace.exception_type,
        pruned_message=crash.stack_trace.message,
        pruned_frames=pruned,
        signature=crash.signature,
        dialog_only=crash.dialog_only,
        warnings=tuple(warnings),
    )


def validate_report(doc: ReportDoc, trace: ExecutionTrace, app_package: str) -> None:
    """Cardinality and pruning invariants; raises ReportError on violation."""
    if len(doc.steps) != len(trace.steps):
        raise ReportError(f"{len(doc.steps)} sentences for {len(trace.steps)} steps")
    if len(doc.screen_flow) != len(doc.steps):
        raise ReportError("screen flow and step counts differ")
    if not doc.general:
        raise ReportError("general section is empty")
    if not doc.pruned_exception_type:
        raise ReportError("pruned trace section is empty")
    for frame in doc.pruned_frames:
        if not frame.package.startswith(app_package):
            raise ReportError(f"non-app frame {frame.package} survived pruning")


_STYLE = """
body { font-family: sans-serif; margin: 2rem auto; max-width: 60rem; color: #212121; }
h1 { border-bottom: 3px solid #b71c1c; padding-bottom: 0.3rem; }
section { margin-bottom: 2rem; }
table { border-collapse: collapse; }
td, th { border: 1px solid #bdbdbd; padding: 0.3rem 0.8rem; text-align: left; }
ol li { margin: 0.4rem 0; }
.badge { background: #ffe082; border-radius: 4px; padding: 0 0.4rem; margin-left: 0.4rem;
         font-size: 0.85rem; font-family: monospace; }
.flow { display: flex; flex-wrap: wrap; gap: 1rem; }
.flow figure { margin: 0; }
.flow svg { width: 270px; height: auto; border: 1px solid #9e9e9e; }
pre { background: #eceff1; padding: 1rem; overflow-x: auto; }
.warnings { background: #fff3e0; padding: 0.6rem 1rem; border-left: 4px solid #ef6c00; }
.frameless { color: #ef6c00; font-weight: bold; }
""".strip()


def render_html(doc: ReportDoc, svg_lookup: Optional[Callable[[str], Optional[str]]] = None) -> str:
    """Single self-contained HTML document with the screen-flow SVGs inlined."""
    rows = []
    for key in ("app_name", "app_version", "app_package", "os_version", "device",
                "orientation", "resolution", "strategy"):
        rows.append(
            f"<tr><th>{escape(key.replace('_', ' ').title())}</th>"
            f"<td>{escape(str(doc.general.get(key, '')))}</td></tr>"
        )
    legend_rows = [
        f"<tr><td>{escape(entry['glyph'])}</td><td>{escape(entry['feature'])}</td>"
        f"<td>{escape(entry['states'])}</td></tr>"
        for entry in doc.general.get("legend", [])
    ]

    items = []
    for step in doc.steps:
        badges = "".join(f'<span class="badge">{escape(b)}</span>' for b in step.badges)
        items.append(f"<li>{escape(step.sentence)}{badges}</li>")

    figures = []
    for step, ref in zip(doc.steps, doc.screen_flow):
        svg = None
        if ref and svg_lookup is not None:
            svg = svg_lookup(ref)
        if svg is None:
            svg = PLACEHOLDER_SVG
        else:
            svg = svg.replace('<?xml version="1.0" encoding="UTF-8"?>\n', "")
        figures.append(
            f"<figure>{svg}<figcaption>Step {step.index}</figcaption></figure>"
        )

    trace_lines = [f"{doc.pruned_exception_type}: {doc.pruned_message}"]
    trace_lines += [
        f"  at {f.package}.{f.class_name}.{f.method}({f.file}:{f.line})"
        for f in doc.pruned_frames
    ]
    frameless = (
        '<p class="frameless">frameless: no app-package frames were captured</p>'
        if not doc.pruned_frames
        else ""
    )

    warnings_block = ""
    if doc.warnings:
        entries = "".join(f"<li>{escape(w)}</li>" for w in doc.warnings)
        warnings_block = f'<section class="warnings"><h2>Warnings</h2><ul>{entries}</ul></section>'

    return f"""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Crash report {escape(doc.crash_id)}</title>
<style>{_STYLE}</style>
</head>
<body>
<h1>Crash Report</h1>
<p>Crash <code>{escape(doc.crash_id)}</code>, signature <code>{escape(doc.signature)}</code></p>
{warnings_block}
<section id="general">
<h2>1. General Information</h2>
<table>{''.join(rows)}</table>
<h3>Context badge legend</h3>
<table><tr><th>Badge</th><th>Feature</th><th>States</th></tr>{''.join(legend_rows)}</table>
</section>
<section id="steps">
<h2>2. Steps to Reproduce</h2>
<ol>{''.join(items)}</ol>
</section>
<section id="screen-flow">
<h2>3. Screen Flow</h2>
<div class="flow">{''.join(figures)}</div>
</section>
<section id="stack-trace">
<h2>4. Pruned Stack Trace</h2>
{frameless}<pre>{escape(chr(10).join(trace_lines))}</pre>
</section>
</body>
</html>
"""


def graph_doc_id(app_id: str, strategy: StrategyConfig, task_id: Optional[str] = None) -> str:
    prefix = f"{task_id}-" if task_id else ""
    return f"{prefix}graph-{app_id}-{strategy.short()}"
