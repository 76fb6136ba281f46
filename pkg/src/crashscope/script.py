"""Replayable crash scripts: generation, parsing, and coordinate-driven replay.

One command per line, `#` comments. Pointer commands replay by raw
coordinates with no hierarchy lookup, and context markers spell the network
feature WIFI. The textual form round-trips byte for byte, which the golden
tests rely on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .domain import (
    Action,
    ContextualFeature,
    CrashRecord,
    CrashScopeError,
    ExecutionTrace,
    Orientation,
    TraceOutcome,
    UiEvent,
)
from .ripper import build_crash_evidence
from .simulator import DeviceSession, EventOutcome, resolution_label

SCRIPT_VERSION = 1

# Pointer commands replay by coordinates alone; this placeholder target keeps
# the event well-formed without claiming hierarchy knowledge.
REPLAY_TARGET = "*"

_FEATURE_TO_MARKER = {
    ContextualFeature.NETWORK: "WIFI",
    ContextualFeature.GPS: "GPS",
    ContextualFeature.ACCELEROMETER: "ACCEL",
    ContextualFeature.MAGNETOMETER: "MAG",
    ContextualFeature.TEMPERATURE: "TEMP",
}
_MARKER_TO_FEATURE = {v: k for k, v in _FEATURE_TO_MARKER.items()}
_MARKER_VALUES = ("ON", "OFF", "INFEASIBLE", "NORMAL")


class ScriptError(CrashScopeError, ValueError):
    pass


class GenerationError(CrashScopeError, ValueError):
    pass


@dataclass(frozen=True)
class ScriptLine:
    op: str  # LAUNCH | TAP | LONGTAP | TYPE | ROTATE | CONTEXT
    x: Optional[int] = None
    y: Optional[int] = None
    text: Optional[str] = None
    orientation: Optional[Orientation] = None
    feature: Optional[ContextualFeature] = None
    value: Optional[str] = None


@dataclass(frozen=True)
class CrashScript:
    app_id: str
    resolution: str
    version: int
    lines: tuple[ScriptLine, ...]


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    )


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"n": "\n", "t": "\t", "\\": "\\", '"': '"'}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def serialize_script(script: CrashScript) -> str:
    lines = [
        f"# app: {script.app_id}",
        f"# resolution: {script.resolution}",
        f"# version: {script.version}",
    ]
    for line in script.lines:
        if line.op == "LAUNCH":
            lines.append("LAUNCH")
        elif line.op in ("TAP", "LONGTAP"):
            lines.append(f"{line.op} {line.x} {line.y}")
        elif line.op == "TYPE":
            lines.append(f'TYPE {line.x} {line.y} "{_escape(line.text)}"')
        elif line.op == "ROTATE":
            lines.append(f"ROTATE {line.orientation.value}")
        elif line.op == "CONTEXT":
            lines.append(f"CONTEXT {_FEATURE_TO_MARKER[line.feature]} {line.value}")
        else:
            raise ScriptError(f"unknown command {line.op!r}")
    return "\n".join(lines) + "\n"


_POINTER_RE = re.compile(r"^(TAP|LONGTAP) (\d+) (\d+)$")
_TYPE_RE = re.compile(r'^TYPE (\d+) (\d+) "(.*)"$')
_HEADER_RE = re.compile(r"^# (app|resolution|version): (.*)$")
_RESOLUTION_RE = re.compile(r"^(\d+)x(\d+)$")


def parse_script(text: str) -> CrashScript:
    header: dict[str, str] = {}
    lines: list[ScriptLine] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            match = _HEADER_RE.match(stripped)
            if match:
                header[match.group(1)] = match.group(2)
            continue
        if stripped == "LAUNCH":
            lines.append(ScriptLine("LAUNCH"))
            continue
        match = _POINTER_RE.match(stripped)
        if match:
            lines.append(ScriptLine(match.group(1), x=int(match.group(2)), y=int(match.group(3))))
            continue
        match = _TYPE_RE.match(stripped)
        if match:
            lines.append(
                ScriptLine(
                    "TYPE",
                    x=int(match.group(1)),
                    y=int(match.group(2)),
                    text=_unescape(match.group(3)),
                )
            )
            continue
        if stripped.startswith("ROTATE "):
            name = stripped.split(" ", 1)[1]
            try:
                lines.append(ScriptLine("ROTATE", orientation=Orientation(name)))
            except ValueError:
                raise ScriptError(f"line {number}: unknown orientation {name!r}")
            continue
        if stripped.startswith("CONTEXT "):
            parts = stripped.split(" ")
            if len(parts) != 3 or parts[1] not in _MARKER_TO_FEATURE or parts[2] not in _MARKER_VALUES:
                raise ScriptError(f"line {number}: malformed context marker {stripped!r}")
            lines.append(
                ScriptLine("CONTEXT", feature=_MARKER_TO_FEATURE[parts[1]], value=parts[2])
            )
            continue
        raise ScriptError(f"line {number}: unparseable command {stripped!r}")

    for key in ("app", "resolution", "version"):
        if key not in header:
            raise ScriptError(f"missing header comment '# {key}:'")
    if not _RESOLUTION_RE.match(header["resolution"]):
        raise ScriptError(f"malformed resolution {header['resolution']!r}")
    script = CrashScript(
        app_id=header["app"],
        resolution=header["resolution"],
        version=int(header["version"]),
        lines=tuple(lines),
    )
    _check_pointer_bounds(script)
    return script


def _check_pointer_bounds(script: CrashScript):
    width, height = (int(n) for n in script.resolution.split("x"))
    span = max(width, height)
    for i, line in enumerate(script.lines, start=1):
        if line.x is not None and (line.x >= span or line.y >= span):
            raise ScriptError(f"command {i}: coordinates ({line.x},{line.y}) outside {script.resolution}")


def generate_script(trace: ExecutionTrace, crash: CrashRecord) -> CrashScript:
    """One command per step through the crash step, prefixed with LAUNCH.

    Pointer lines reuse the center coordinates the engine extrapolated from
    each component's recorded bounds at execution time.
    """
    if trace.outcome != TraceOutcome.CRASHED:
        raise GenerationError(f"trace {trace.trace_id} did not crash")
    if crash.trace_id != trace.trace_id:
        raise GenerationError(f"crash {crash.crash_id} does not belong to trace {trace.trace_id}")
    lines = [ScriptLine("LAUNCH")]
    for step in trace.steps[: crash.crash_step_index]:
        event = step.event
        if event.action in (Action.TAP, Action.LONG_TAP, Action.TYPE):
            if event.coordinates is None:
                raise GenerationError(
                    f"step {step.index} has no recorded coordinates for {event.target!r}"
                )
            x, y = event.coordinates
            if event.action == Action.TAP:
                lines.append(ScriptLine("TAP", x=x, y=y))
            elif event.action == Action.LONG_TAP:
                lines.append(ScriptLine("LONGTAP", x=x, y=y))
            else:
                lines.append(ScriptLine("TYPE", x=x, y=y, text=event.text))
        elif event.action == Action.ROTATE:
            landed = (
                Orientation.LANDSCAPE
                if step.context.rotation == Orientation.PORTRAIT
                else Orientation.PORTRAIT
            )
            lines.append(ScriptLine("ROTATE", orientation=landed))
        elif event.action == Action.CONTEXT_SET:
            lines.append(
                ScriptLine("CONTEXT", feature=event.context_feature, value=event.context_value)
            )
        elif event.action == Action.LAUNCH:
            lines.append(ScriptLine("LAUNCH"))
        else:
            raise GenerationError(f"step {step.index}: {event.action.value} is not scriptable")
    script = CrashScript(
        app_id=trace.app_id,
        resolution=resolution_label(Orientation.PORTRAIT),
        version=SCRIPT_VERSION,
        lines=tuple(lines),
    )
    _check_pointer_bounds(script)
    return script


class ReplayStatus(str, Enum):
    REPRODUCED = "REPRODUCED"
    DIVERGED = "DIVERGED"
    COMPLETED_NO_CRASH = "COMPLETED_NO_CRASH"


@dataclass(frozen=True)
class ReplayResult:
    status: ReplayStatus
    signature: Optional[str] = None
    diverged_at: Optional[int] = None  # 1-based command number
    detail: str = ""


def replay_script(script: CrashScript, session: DeviceSession) -> ReplayResult:
    """Replay commands on a fresh session of the same app.

    REPRODUCED means a crash fired on the final command; its normalized
    signature is returned. A crash on any earlier command, or a pointer
    command that hits no component, is a divergence.
    """
    expected = resolution_label(Orientation.PORTRAIT)
    if script.resolution != expected:
        raise ScriptError(
            f"script recorded at {script.resolution}, device is {expected}; refusing to replay"
        )
    total = len(script.lines)
    for number, line in enumerate(script.lines, start=1):
        if line.op == "LAUNCH":
            session.reset_app()
            continue
        if line.op in ("TAP", "LONGTAP", "TYPE"):
            action = {"TAP": Action.TAP, "LONGTAP": Action.LONG_TAP, "TYPE": Action.TYPE}[line.op]
            event = UiEvent(
                action,
                target=REPLAY_TARGET,
                coordinates=(line.x, line.y),
                text=line.text if line.op == "TYPE" else None,
            )
        elif line.op == "ROTATE":
            event = UiEvent(Action.ROTATE)
        elif line.op == "CONTEXT":
            event = UiEvent(
                Action.CONTEXT_SET, context_feature=line.feature, context_value=line.value
            )
        else:
            raise ScriptError(f"command {number}: unknown op {line.op!r}")

        result = session.execute_event(event)
        if result.status == EventOutcome.CRASHED:
            if number == total:
                _, signature, _ = build_crash_evidence(
                    session.drain_exception_log(), session.model.package
                )
                return ReplayResult(ReplayStatus.REPRODUCED, signature=signature)
            return ReplayResult(
                ReplayStatus.DIVERGED,
                diverged_at=number,
                detail=f"crashed early at command {number} of {total}",
            )
        if line.op in ("TAP", "LONGTAP", "TYPE") and result.hit is None:
            return ReplayResult(
                ReplayStatus.DIVERGED,
                diverged_at=number,
                detail=f"command {number} hit no component at ({line.x},{line.y})",
            )
    return ReplayResult(ReplayStatus.COMPLETED_NO_CRASH)
