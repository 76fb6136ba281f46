"""Deterministic simulated device and app backend.

An `AppModel` is a declarative GUI state machine loaded from JSON; a
`SimulatorSession` executes events against it with crash rules, an exception
log, a blocking crash dialog, and SVG screenshots. Everything is a pure
function of the model and the event history, so two sessions fed the same
events behave identically byte for byte.
"""

from __future__ import annotations

import json
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional
from xml.sax.saxutils import escape

from .domain import (
    Action,
    Bounds,
    ComponentKind,
    ContextState,
    ContextualFeature,
    ContractViolation,
    GuiComponent,
    KeyboardType,
    Orientation,
    ScreenState,
    StackFrame,
    StackTrace,
    UiEvent,
    ValidationError,
    fnv1a_64,
)
from .textgen import ALPHABETS

PORTRAIT_RESOLUTION = (1080, 1920)
DEVICE_IDENTIFICATION = "sim-1080x1920/v1"


def resolution_label(orientation: Orientation) -> str:
    w, h = PORTRAIT_RESOLUTION
    if orientation == Orientation.LANDSCAPE:
        w, h = h, w
    return f"{w}x{h}"


# --------------------------------------------------------------------------
# Stack trace wire form


_FRAME_RE = re.compile(r"^  at (?P<qual>.+)\((?P<file>[^:]*):(?P<line>\d+)\)$")


def format_stack_trace(trace: StackTrace) -> str:
    lines = [f"{trace.exception_type}: {trace.message}"]
    for f in trace.frames:
        lines.append(f"  at {f.package}.{f.class_name}.{f.method}({f.file}:{f.line})")
    return "\n".join(lines)


def parse_stack_frame(text: str) -> StackFrame:
    """Parse one `pkg.Class.method(File:Line)` frame, `at`-prefixed or bare."""
    candidate = text if text.startswith("  at ") else f"  at {text}"
    m = _FRAME_RE.match(candidate)
    if m is None:
        raise ValidationError(f"unparseable stack frame: {text!r}")
    qual = m.group("qual")
    parts = qual.rsplit(".", 2)
    if len(parts) != 3:
        raise ValidationError(f"frame needs package.Class.method: {text!r}")
    return StackFrame(
        package=parts[0],
        class_name=parts[1],
        method=parts[2],
        file=m.group("file"),
        line=int(m.group("line")),
    )


def parse_stack_trace(text: str) -> StackTrace:
    lines = text.splitlines()
    if not lines:
        raise ValidationError("empty stack trace document")
    head, sep, message = lines[0].partition(": ")
    if not sep:
        head, message = lines[0].rstrip(":"), ""
    frames = tuple(parse_stack_frame(line) for line in lines[1:] if line.strip())
    return StackTrace(exception_type=head, message=message, frames=frames)


# --------------------------------------------------------------------------
# Predicates


TEXT_CHECKS = ("IS_EMPTY", "CONTAINS_SPECIAL", "NOT_MATCHING_KEYBOARD", "LENGTH_GT")


@dataclass(frozen=True)
class Predicate:
    """Closed guard grammar: text checks, context equality, conjunction."""

    kind: str  # "text" | "context" | "all"
    field: Optional[str] = None
    check: Optional[str] = None
    value: Any = None
    feature: Optional[ContextualFeature] = None
    preds: tuple["Predicate", ...] = ()

    def evaluate(self, text_of, keyboard_of, context: ContextState) -> bool:
        """`text_of(field) -> str`, `keyboard_of(field) -> KeyboardType`."""
        if self.kind == "all":
            return all(p.evaluate(text_of, keyboard_of, context) for p in self.preds)
        if self.kind == "context":
            return context.value_of(self.feature) == self.value
        text = text_of(self.field)
        if self.check == "IS_EMPTY":
            return text == ""
        if self.check == "LENGTH_GT":
            return len(text) > int(self.value)
        alphabet = ALPHABETS[keyboard_of(self.field)]
        if self.check == "CONTAINS_SPECIAL":
            return any(ch in alphabet.special_chars for ch in text)
        # NOT_MATCHING_KEYBOARD: some character falls outside the plain set
        return any(ch not in alphabet.expected_chars for ch in text)

    def referenced_fields(self) -> list[str]:
        if self.kind == "text":
            return [self.field]
        if self.kind == "all":
            out = []
            for p in self.preds:
                out.extend(p.referenced_fields())
            return out
        return []

    def to_json(self) -> dict:
        if self.kind == "all":
            return {"kind": "all", "preds": [p.to_json() for p in self.preds]}
        if self.kind == "context":
            return {"kind": "context", "feature": self.feature.value, "value": self.value}
        doc = {"kind": "text", "field": self.field, "check": self.check}
        if self.check == "LENGTH_GT":
            doc["value"] = self.value
        return doc


def _parse_predicate(doc: Any, path: str) -> Predicate:
    if not isinstance(doc, dict):
        raise ValidationError("guard must be an object", path)
    kind = doc.get("kind")
    if kind == "all":
        preds = doc.get("preds")
        if not isinstance(preds, list) or not preds:
            raise ValidationError("conjunction needs a non-empty preds list", f"{path}.preds")
        return Predicate(
            kind="all",
            preds=tuple(_parse_predicate(p, f"{path}.preds[{i}]") for i, p in enumerate(preds)),
        )
    if kind == "context":
        try:
            feature = ContextualFeature(doc.get("feature"))
        except ValueError:
            raise ValidationError(f"unknown feature {doc.get('feature')!r}", f"{path}.feature")
        return Predicate(kind="context", feature=feature, value=doc.get("value"))
    if kind == "text":
        check = doc.get("check")
        if check not in TEXT_CHECKS:
            raise ValidationError(f"unknown text check {check!r}", f"{path}.check")
        if check == "LENGTH_GT" and not isinstance(doc.get("value"), int):
            raise ValidationError("LENGTH_GT needs an integer value", f"{path}.value")
        if not isinstance(doc.get("field"), str):
            raise ValidationError("text guard needs a field id", f"{path}.field")
        return Predicate(kind="text", field=doc["field"], check=check, value=doc.get("value"))
    raise ValidationError(f"unknown guard kind {kind!r}", f"{path}.kind")


# --------------------------------------------------------------------------
# Model types


@dataclass(frozen=True)
class SimScreen:
    id: str
    activity: str
    components: tuple[GuiComponent, ...]
    initial: bool = False

    def component_by_id(self, component_id: str) -> Optional[GuiComponent]:
        for c in self.components:
            if c.id == component_id:
                return c
        return None


@dataclass(frozen=True)
class Trigger:
    """What fires a rule: a component action, BACK, ROTATE, or a context change."""

    action: Action
    component: Optional[str] = None
    feature: Optional[ContextualFeature] = None
    value: Optional[str] = None

    def key(self) -> tuple:
        return (self.action, self.component, self.feature, self.value)

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"action": self.action.value}
        if self.component is not None:
            doc["component"] = self.component
        if self.feature is not None:
            doc["feature"] = self.feature.value
            doc["value"] = self.value
        return doc


@dataclass(frozen=True)
class TransitionRule:
    from_screen: str
    trigger: Trigger
    to_screen: str
    guard: Optional[Predicate] = None


@dataclass(frozen=True)
class CrashRule:
    screen: str
    trigger: Trigger
    exception: StackTrace
    guard: Optional[Predicate] = None
    fatal: bool = True


@dataclass(frozen=True)
class AppModel:
    app_id: str
    name: str
    version: str
    package: str
    activities: tuple[tuple[str, bool], ...]  # (name, rotatable)
    screens: tuple[SimScreen, ...]
    transitions: tuple[TransitionRule, ...]
    crash_rules: tuple[CrashRule, ...]
    warnings: tuple[str, ...] = ()

    def screen(self, screen_id: str) -> SimScreen:
        for s in self.screens:
            if s.id == screen_id:
                return s
        raise KeyError(screen_id)

    @property
    def initial_screen(self) -> SimScreen:
        return next(s for s in self.screens if s.initial)

    def rotatable(self, activity: str) -> bool:
        return dict(self.activities).get(activity, False)


# --------------------------------------------------------------------------
# Model loading


def _require(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise ValidationError(f"missing required field", f"{path}.{key}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(
            f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
            f"{path}.{key}",
        )
    return value


def _parse_component(doc: dict, path: str) -> GuiComponent:
    kind_name = _require(doc, "kind", str, path)
    try:
        kind = ComponentKind(kind_name)
    except ValueError:
        raise ValidationError(f"unknown component kind {kind_name!r}", f"{path}.kind")
    bounds_doc = _require(doc, "bounds", dict, path)
    for edge in ("left", "top", "right", "bottom"):
        _require(bounds_doc, edge, int, f"{path}.bounds")
    keyboard = doc.get("keyboard_type")
    if keyboard is not None:
        try:
            keyboard = KeyboardType(keyboard)
        except ValueError:
            raise ValidationError(
                f"unknown keyboard type {doc['keyboard_type']!r}", f"{path}.keyboard_type"
            )
    try:
        return GuiComponent(
            id=_require(doc, "id", str, path),
            kind=kind,
            label=_require(doc, "label", str, path),
            bounds=Bounds.from_json(bounds_doc),
            clickable=doc.get("clickable", False),
            long_clickable=doc.get("long_clickable", False),
            keyboard_type=keyboard,
        )
    except ContractViolation as exc:
        raise ValidationError(str(exc), path)


def _parse_trigger(doc: dict, path: str, allow: tuple[Action, ...]) -> Trigger:
    action_name = _require(doc, "action", str, path)
    try:
        action = Action(action_name)
    except ValueError:
        raise ValidationError(f"unknown action {action_name!r}", f"{path}.action")
    if action not in allow:
        raise ValidationError(f"action {action.value} not allowed here", f"{path}.action")
    if action in (Action.TAP, Action.LONG_TAP, Action.TYPE):
        return Trigger(action=action, component=_require(doc, "component", str, path))
    if action == Action.CONTEXT_SET:
        try:
            feature = ContextualFeature(_require(doc, "feature", str, path))
        except ValueError:
            raise ValidationError(f"unknown feature {doc.get('feature')!r}", f"{path}.feature")
        return Trigger(action=action, feature=feature, value=_require(doc, "value", str, path))
    return Trigger(action=action)


def _parse_exception(doc: dict, path: str) -> StackTrace:
    frames_doc = _require(doc, "frames", list, path)
    if not frames_doc:
        raise ValidationError("exception needs at least one frame", f"{path}.frames")
    frames = []
    for i, frame in enumerate(frames_doc):
        if not isinstance(frame, str):
            raise ValidationError("frames are wire-form strings", f"{path}.frames[{i}]")
        try:
            frames.append(parse_stack_frame(frame))
        except ValidationError as exc:
            raise ValidationError(exc.reason, f"{path}.frames[{i}]")
    return StackTrace(
        exception_type=_require(doc, "type", str, path),
        message=_require(doc, "message", str, path),
        frames=tuple(frames),
    )


def load_app_model(document: bytes | str) -> AppModel:
    """Parse and validate an app-model JSON document.

    Raises ValidationError with a path to the offending field on schema
    violations, dangling references, or duplicate initial screens; records
    shadowed-rule warnings on the returned model.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc}", "$")
    if not isinstance(doc, dict):
        raise ValidationError("top level must be an object", "$")

    app = _require(doc, "app", dict, "$")
    app_id = _require(app, "id", str, "$.app")
    name = _require(app, "name", str, "$.app")
    version = _require(app, "version", str, "$.app")
    package = _require(app, "package", str, "$.app")

    activities = []
    for i, entry in enumerate(_require(doc, "activities", list, "$")):
        path = f"$.activities[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError("activity must be an object", path)
        activities.append((_require(entry, "name", str, path), bool(entry.get("rotatable", False))))
    activity_names = {a for a, _ in activities}

    screens = []
    initial_path = None
    for i, entry in enumerate(_require(doc, "screens", list, "$")):
        path = f"$.screens[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError("screen must be an object", path)
        activity = _require(entry, "activity", str, path)
        if activity not in activity_names:
            raise ValidationError(f"unknown activity {activity!r}", f"{path}.activity")
        components = tuple(
            _parse_component(c, f"{path}.components[{j}]")
            for j, c in enumerate(_require(entry, "components", list, path))
        )
        screen = SimScreen(
            id=_require(entry, "id", str, path),
            activity=activity,
            components=components,
            initial=bool(entry.get("initial", False)),
        )
        if screen.initial:
            if initial_path is not None:
                raise ValidationError(
                    f"duplicate initial screen (first at {initial_path})", f"{path}.initial"
                )
            initial_path = f"{path}.initial"
        try:
            ScreenState(screen.activity, screen.components, Orientation.PORTRAIT)
        except ContractViolation as exc:
            raise ValidationError(str(exc), path)
        screens.append(screen)
    screen_ids = {s.id for s in screens}
    if len(screen_ids) != len(screens):
        raise ValidationError("duplicate screen ids", "$.screens")
    if initial_path is None:
        raise ValidationError("no screen flagged initial", "$.screens")

    def check_screen_ref(screen_id: str, path: str):
        if screen_id not in screen_ids:
            raise ValidationError(f"unknown screen {screen_id!r}", path)

    def check_trigger_component(screen_id: str, trigger: Trigger, path: str):
        if trigger.component is None:
            return
        screen = next(s for s in screens if s.id == screen_id)
        if screen.component_by_id(trigger.component) is None:
            raise ValidationError(
                f"screen {screen_id!r} has no component {trigger.component!r}",
                f"{path}.component",
            )

    def check_guard_fields(guard: Optional[Predicate], screen_id: str, path: str):
        if guard is None:
            return
        screen = next(s for s in screens if s.id == screen_id)
        for field_id in guard.referenced_fields():
            comp = screen.component_by_id(field_id)
            if comp is None or comp.kind != ComponentKind.TEXT_FIELD:
                raise ValidationError(
                    f"guard references missing text field {field_id!r} on screen {screen_id!r}",
                    f"{path}.guard",
                )

    transitions = []
    for i, entry in enumerate(_require(doc, "transitions", list, "$")):
        path = f"$.transitions[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError("transition must be an object", path)
        from_screen = _require(entry, "from_screen", str, path)
        to_screen = _require(entry, "to_screen", str, path)
        check_screen_ref(from_screen, f"{path}.from_screen")
        check_screen_ref(to_screen, f"{path}.to_screen")
        trigger = _parse_trigger(
            _require(entry, "trigger", dict, path),
            f"{path}.trigger",
            allow=(Action.TAP, Action.LONG_TAP, Action.BACK),
        )
        check_trigger_component(from_screen, trigger, f"{path}.trigger")
        guard = _parse_predicate(entry["guard"], f"{path}.guard") if "guard" in entry else None
        check_guard_fields(guard, from_screen, path)
        transitions.append(TransitionRule(from_screen, trigger, to_screen, guard))

    crash_rules = []
    for i, entry in enumerate(_require(doc, "crash_rules", list, "$")):
        path = f"$.crash_rules[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError("crash rule must be an object", path)
        screen_id = _require(entry, "screen", str, path)
        check_screen_ref(screen_id, f"{path}.screen")
        trigger = _parse_trigger(
            _require(entry, "trigger", dict, path),
            f"{path}.trigger",
            allow=(Action.TAP, Action.LONG_TAP, Action.TYPE, Action.ROTATE, Action.CONTEXT_SET),
        )
        check_trigger_component(screen_id, trigger, f"{path}.trigger")
        guard = _parse_predicate(entry["guard"], f"{path}.guard") if "guard" in entry else None
        check_guard_fields(guard, screen_id, path)
        crash_rules.append(
            CrashRule(
                screen=screen_id,
                trigger=trigger,
                exception=_parse_exception(_require(entry, "exception", dict, path), f"{path}.exception"),
                guard=guard,
                fatal=bool(entry.get("fatal", True)),
            )
        )

    warnings = []
    seen_unguarded: dict[tuple, int] = {}
    for i, rule in enumerate(transitions):
        key = ("transition", rule.from_screen, rule.trigger.key())
        if key in seen_unguarded:
            warnings.append(
                f"transitions[{i}] is shadowed by unguarded transitions[{seen_unguarded[key]}]"
            )
        elif rule.guard is None:
            seen_unguarded[key] = i
    for i, rule in enumerate(crash_rules):
        key = ("crash", rule.screen, rule.trigger.key())
        if key in seen_unguarded:
            warnings.append(
                f"crash_rules[{i}] is shadowed by unguarded crash_rules[{seen_unguarded[key]}]"
            )
        elif rule.guard is None:
            seen_unguarded[key] = i

    return AppModel(
        app_id=app_id,
        name=name,
        version=version,
        package=package,
        activities=tuple(activities),
        screens=tuple(screens),
        transitions=tuple(transitions),
        crash_rules=tuple(crash_rules),
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# Device port


class EventOutcome(str, Enum):
    OK = "OK"
    NO_EFFECT = "NO_EFFECT"
    CRASHED = "CRASHED"


@dataclass(frozen=True)
class EventResult:
    status: EventOutcome
    hit: Optional[str] = None  # component id a pointer event landed on


class CrashDialogBlocking(ContractViolation):
    """Raised when the crash dialog is up and anything but a reset arrives."""


class DeviceSession(ABC):
    """Single-owner handle to one running app instance."""

    @abstractmethod
    def query_hierarchy(self) -> ScreenState: ...

    @abstractmethod
    def execute_event(self, event: UiEvent) -> EventResult: ...

    @abstractmethod
    def drain_exception_log(self) -> list[StackTrace]: ...

    @abstractmethod
    def crash_dialog_visible(self) -> bool: ...

    @abstractmethod
    def reset_app(self) -> None: ...

    @abstractmethod
    def screenshot(self, highlight: Optional[str] = None) -> str: ...


class DevicePort(ABC):
    """Factory seam between the exploration engine and an execution backend."""

    @abstractmethod
    def identification(self) -> str: ...

    @abstractmethod
    def launch(self) -> DeviceSession: ...


class SimulatorPort(DevicePort):
    def __init__(self, model: AppModel, noise_seed: int = 0):
        self.model = model
        self.noise_seed = noise_seed

    def identification(self) -> str:
        return DEVICE_IDENTIFICATION

    def launch(self) -> "SimulatorSession":
        return SimulatorSession(self.model, noise_seed=self.noise_seed)


class SimulatorSession(DeviceSession):
    """Reference DevicePort implementation over an AppModel."""

    def __init__(self, model: AppModel, noise_seed: int = 0):
        self.model = model
        # Deterministic fake pid; varies with noise_seed so tests can emulate
        # relaunches getting a fresh process id.
        self._pid = 1000 + (fnv1a_64(model.app_id.encode()) ^ noise_seed) % 90000
        self._log: list[StackTrace] = []
        self._relaunch()

    def _relaunch(self):
        self._screen = self.model.initial_screen
        self._context = ContextState()
        self._entered: dict[tuple[str, str], str] = {}
        self._crashed = False
        self._crash_exception: Optional[StackTrace] = None

    # -- query side

    @property
    def orientation(self) -> Orientation:
        return self._context.rotation

    @property
    def context(self) -> ContextState:
        return self._context

    def resolution(self) -> tuple[int, int]:
        w, h = PORTRAIT_RESOLUTION
        return (h, w) if self.orientation == Orientation.LANDSCAPE else (w, h)

    def current_state(self) -> ScreenState:
        return ScreenState(self._screen.activity, self._screen.components, self.orientation)

    def query_hierarchy(self) -> ScreenState:
        if self._crashed:
            raise CrashDialogBlocking("crash dialog is showing; reset before querying")
        return self.current_state()

    def crash_dialog_visible(self) -> bool:
        return self._crashed

    def entered_text(self, field_id: str) -> str:
        return self._entered.get((self._screen.id, field_id), "")

    # -- event side

    def _keyboard_of(self, field_id: str) -> KeyboardType:
        comp = self._screen.component_by_id(field_id)
        if comp is None or comp.keyboard_type is None:
            return KeyboardType.TEXT
        return comp.keyboard_type

    def _guard_holds(self, guard: Optional[Predicate]) -> bool:
        if guard is None:
            return True
        return guard.evaluate(self.entered_text, self._keyboard_of, self._context)

    def _matching_crash_rules(self, trigger_key: tuple):
        for rule in self.model.crash_rules:
            if rule.screen == self._screen.id and rule.trigger.key() == trigger_key:
                if self._guard_holds(rule.guard):
                    yield rule

    def _capture(self, exception: StackTrace) -> StackTrace:
        # Raw captures carry pid noise the way a real log would; the
        # normalizer is responsible for stripping it.
        return StackTrace(
            exception_type=exception.exception_type,
            message=f"{exception.message} (pid {self._pid})",
            frames=exception.frames,
            raw_noise=(f"pid={self._pid}",),
        )

    def _fire(self, trigger_key: tuple) -> Optional[EventOutcome]:
        """Run crash rules for a trigger. Returns CRASHED on a fatal hit."""
        for rule in self._matching_crash_rules(trigger_key):
            self._log.append(self._capture(rule.exception))
            if rule.fatal:
                self._crashed = True
                self._crash_exception = rule.exception
                return EventOutcome.CRASHED
        return None

    def _hit_test(self, x: int, y: int) -> Optional[GuiComponent]:
        hit = None
        for comp in self._screen.components:  # later in pre-order paints on top
            if comp.bounds.contains(x, y):
                hit = comp
        return hit

    def execute_event(self, event: UiEvent) -> EventResult:
        if self._crashed:
            raise CrashDialogBlocking("crash dialog is showing; only reset is accepted")

        if event.action == Action.LAUNCH:
            self._relaunch()
            return EventResult(EventOutcome.OK)

        if event.action in (Action.TAP, Action.LONG_TAP, Action.TYPE):
            x, y = event.coordinates
            width, height = self.resolution()
            if not (0 <= x < width and 0 <= y < height):
                raise ContractViolation(
                    f"coordinates ({x},{y}) outside resolution {width}x{height}"
                )
            hit = self._hit_test(x, y)
            if hit is None:
                return EventResult(EventOutcome.NO_EFFECT)
            typed = False
            if event.action == Action.TYPE:
                if hit.kind != ComponentKind.TEXT_FIELD:
                    return EventResult(EventOutcome.NO_EFFECT, hit=hit.id)
                self._entered[(self._screen.id, hit.id)] = event.text
                typed = True
            trigger_key = (event.action, hit.id, None, None)
            if self._fire(trigger_key) == EventOutcome.CRASHED:
                return EventResult(EventOutcome.CRASHED, hit=hit.id)
            for rule in self.model.transitions:
                if (
                    rule.from_screen == self._screen.id
                    and rule.trigger.key() == trigger_key
                    and self._guard_holds(rule.guard)
                ):
                    self._screen = self.model.screen(rule.to_screen)
                    return EventResult(EventOutcome.OK, hit=hit.id)
            if typed:
                return EventResult(EventOutcome.OK, hit=hit.id)
            return EventResult(EventOutcome.NO_EFFECT, hit=hit.id)

        if event.action == Action.BACK:
            trigger_key = (Action.BACK, None, None, None)
            for rule in self.model.transitions:
                if (
                    rule.from_screen == self._screen.id
                    and rule.trigger.key() == trigger_key
                    and self._guard_holds(rule.guard)
                ):
                    self._screen = self.model.screen(rule.to_screen)
                    return EventResult(EventOutcome.OK)
            return EventResult(EventOutcome.NO_EFFECT)

        if event.action == Action.ROTATE:
            if not self.model.rotatable(self._screen.activity):
                return EventResult(EventOutcome.NO_EFFECT)
            flipped = (
                Orientation.LANDSCAPE
                if self.orientation == Orientation.PORTRAIT
                else Orientation.PORTRAIT
            )
            self._context = self._context.with_value(ContextualFeature.ROTATION, flipped.value)
            if self._fire((Action.ROTATE, None, None, None)) == EventOutcome.CRASHED:
                return EventResult(EventOutcome.CRASHED)
            return EventResult(EventOutcome.OK)

        if event.action == Action.CONTEXT_SET:
            self._context = self._context.with_value(event.context_feature, event.context_value)
            trigger_key = (Action.CONTEXT_SET, None, event.context_feature, event.context_value)
            if self._fire(trigger_key) == EventOutcome.CRASHED:
                return EventResult(EventOutcome.CRASHED)
            return EventResult(EventOutcome.OK)

        raise ContractViolation(f"unsupported action {event.action}")

    def drain_exception_log(self) -> list[StackTrace]:
        """Return app-package log entries accumulated since the last drain."""
        drained = [
            t
            for t in self._log
            if any(f.package.startswith(self.model.package) for f in t.frames)
        ]
        self._log = []
        return drained

    def reset_app(self) -> None:
        # The exception log survives a reset; draining is the only clear.
        self._relaunch()

    # -- rendering

    _KIND_FILL = {
        ComponentKind.BUTTON: "#90caf9",
        ComponentKind.TEXT_FIELD: "#ffffff",
        ComponentKind.LABEL: "#eeeeee",
        ComponentKind.OTHER: "#e0e0e0",
    }

    def screenshot(self, highlight: Optional[str] = None) -> str:
        """Deterministic SVG rendering of the current screen.

        Works with the crash dialog showing; the dialog is drawn as an
        overlay on top of the component rectangles.
        """
        width, height = self.resolution()
        parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#fafafa"/>',
            f'<text x="16" y="36" font-size="28" fill="#555555">'
            f"{escape(self._screen.activity)}</text>",
        ]
        for comp in self._screen.components:
            b = comp.bounds
            fill = self._KIND_FILL[comp.kind]
            label = self._entered.get((self._screen.id, comp.id)) or comp.label
            parts.append(
                f'<rect x="{b.left}" y="{b.top}" width="{b.right - b.left}" '
                f'height="{b.bottom - b.top}" fill="{fill}" stroke="#9e9e9e"/>'
            )
            cx, cy = (b.left + b.right) // 2, (b.top + b.bottom) // 2
            parts.append(
                f'<text x="{cx}" y="{cy}" font-size="24" text-anchor="middle" '
                f'fill="#212121">{escape(label)}</text>'
            )
        if highlight is not None:
            comp = self._screen.component_by_id(highlight)
            if comp is not None:
                b = comp.bounds
                parts.append(
                    f'<rect class="highlight" x="{b.left - 6}" y="{b.top - 6}" '
                    f'width="{b.right - b.left + 12}" height="{b.bottom - b.top + 12}" '
                    f'fill="none" stroke="#d32f2f" stroke-width="6"/>'
                )
        if self._crashed:
            dialog_w, dialog_h = 720, 300
            dx, dy = (width - dialog_w) // 2, (height - dialog_h) // 2
            title = f"{self.model.name} has stopped"
            detail = self._crash_exception.exception_type if self._crash_exception else "crash"
            parts.append(
                f'<rect class="crash-dialog" x="{dx}" y="{dy}" width="{dialog_w}" '
                f'height="{dialog_h}" fill="#ffffff" stroke="#424242" stroke-width="3"/>'
            )
            parts.append(
                f'<text x="{width // 2}" y="{dy + 90}" font-size="32" text-anchor="middle" '
                f'fill="#b71c1c">{escape(title)}</text>'
            )
            parts.append(
                f'<text x="{width // 2}" y="{dy + 160}" font-size="22" text-anchor="middle" '
                f'fill="#424242">{escape(detail)}</text>'
            )
            parts.append(
                f'<text x="{width // 2}" y="{dy + 240}" font-size="26" text-anchor="middle" '
                f'fill="#1565c0">OK</text>'
            )
        parts.append("</svg>")
        return "\n".join(parts)
