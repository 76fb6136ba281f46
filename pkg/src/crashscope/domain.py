"""Shared vocabulary types and the pure helpers built on them.

Every type here is an immutable value with a canonical JSON form (lowercase
snake_case keys); the operations are pure functions, so values can be shared
between concurrent workers without synchronization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Iterable, Optional

_MASK64 = (1 << 64) - 1
_MASK128 = (1 << 128) - 1

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_FNV128_OFFSET = 0x6C62272E07BB014262B821756295C58D
_FNV128_PRIME = 0x0000000001000000000000000000013B

# Recorded in the store header; persisted signatures are only comparable
# between stores created with the same algorithm.
SIGNATURE_ALGORITHM = "fnv1a-128"


def fnv1a_64(data: bytes) -> int:
    h = _FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV64_PRIME) & _MASK64
    return h


def fnv1a_128(data: bytes) -> str:
    h = _FNV128_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV128_PRIME) & _MASK128
    return format(h, "032x")


class CrashScopeError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(CrashScopeError, ValueError):
    """A caller broke a documented precondition."""


class ValidationError(CrashScopeError, ValueError):
    """A document failed validation; `path` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.reason = message


class ComponentKind(str, Enum):
    BUTTON = "BUTTON"
    TEXT_FIELD = "TEXT_FIELD"
    LABEL = "LABEL"
    OTHER = "OTHER"


class KeyboardType(str, Enum):
    TEXT = "TEXT"
    NUMBER = "NUMBER"
    PHONE = "PHONE"
    EMAIL = "EMAIL"


class Orientation(str, Enum):
    PORTRAIT = "PORTRAIT"
    LANDSCAPE = "LANDSCAPE"


class Action(str, Enum):
    TAP = "TAP"
    LONG_TAP = "LONG_TAP"
    TYPE = "TYPE"
    ROTATE = "ROTATE"
    CONTEXT_SET = "CONTEXT_SET"
    LAUNCH = "LAUNCH"
    BACK = "BACK"


class ContextualFeature(str, Enum):
    NETWORK = "NETWORK"
    GPS = "GPS"
    ACCELEROMETER = "ACCELEROMETER"
    MAGNETOMETER = "MAGNETOMETER"
    TEMPERATURE = "TEMPERATURE"
    ROTATION = "ROTATION"


SENSOR_FEATURES = (
    ContextualFeature.GPS,
    ContextualFeature.ACCELEROMETER,
    ContextualFeature.MAGNETOMETER,
    ContextualFeature.TEMPERATURE,
)

ON = "ON"
OFF = "OFF"
NORMAL = "NORMAL"
INFEASIBLE = "INFEASIBLE"

# Out-of-physical-range readings shown in reports for sensors forced into
# an infeasible state.
INFEASIBLE_SENSOR_READINGS = {
    ContextualFeature.GPS: "(91.0, 181.0)",
    ContextualFeature.ACCELEROMETER: "9999 m/s^2",
    ContextualFeature.MAGNETOMETER: "99999 uT",
    ContextualFeature.TEMPERATURE: "-999 C",
}


class Traversal(str, Enum):
    TOP_DOWN = "TOP_DOWN"
    BOTTOM_UP = "BOTTOM_UP"
    # Reserved for future exploration policies; the engine rejects it.
    RANDOM = "RANDOM"


class TextMode(str, Enum):
    NONE = "NONE"
    EXPECTED = "EXPECTED"
    UNEXPECTED = "UNEXPECTED"


class ContextMode(str, Enum):
    NORMAL = "NORMAL"
    ADVERSE = "ADVERSE"


class TraceOutcome(str, Enum):
    COMPLETED = "COMPLETED"
    CRASHED = "CRASHED"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True)
class Bounds:
    """Pixel rectangle in screen coordinates, origin top-left, edges inclusive."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if min(self.left, self.top, self.right, self.bottom) < 0:
            raise ContractViolation(f"negative bounds: {self}")
        if self.left > self.right or self.top > self.bottom:
            raise ContractViolation(f"inverted bounds: {self}")

    def contains(self, x: int, y: int) -> bool:
        return self.left <= x <= self.right and self.top <= y <= self.bottom

    def to_json(self) -> dict:
        return {
            "left": self.left,
            "top": self.top,
            "right": self.right,
            "bottom": self.bottom,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Bounds":
        return cls(d["left"], d["top"], d["right"], d["bottom"])


def component_center(bounds: Bounds) -> tuple[int, int]:
    """Integer midpoint of a component's bounds (floor division)."""
    return ((bounds.left + bounds.right) // 2, (bounds.top + bounds.bottom) // 2)


@dataclass(frozen=True)
class GuiComponent:
    id: str
    kind: ComponentKind
    label: str
    bounds: Bounds
    clickable: bool = False
    long_clickable: bool = False
    keyboard_type: Optional[KeyboardType] = None

    def __post_init__(self):
        if (self.kind == ComponentKind.TEXT_FIELD) != (self.keyboard_type is not None):
            raise ContractViolation(
                f"component {self.id!r}: keyboard_type must be present exactly "
                f"when kind is TEXT_FIELD"
            )

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "id": self.id,
            "kind": self.kind.value,
            "label": self.label,
            "bounds": self.bounds.to_json(),
            "clickable": self.clickable,
            "long_clickable": self.long_clickable,
        }
        if self.keyboard_type is not None:
            doc["keyboard_type"] = self.keyboard_type.value
        return doc

    @classmethod
    def from_json(cls, d: dict) -> "GuiComponent":
        kb = d.get("keyboard_type")
        return cls(
            id=d["id"],
            kind=ComponentKind(d["kind"]),
            label=d["label"],
            bounds=Bounds.from_json(d["bounds"]),
            clickable=d.get("clickable", False),
            long_clickable=d.get("long_clickable", False),
            keyboard_type=KeyboardType(kb) if kb is not None else None,
        )


def screen_state_key(activity: str, component_ids: Iterable[str], orientation: Orientation) -> str:
    """Fingerprint of a screen: activity name + sorted component ids + orientation.

    Component-set inclusion distinguishes dynamic screens that share one
    activity; orientation splits portrait and landscape states.
    """
    payload = "\n".join([activity, ",".join(sorted(component_ids)), orientation.value])
    return fnv1a_128(payload.encode("utf-8"))


@dataclass(frozen=True)
class ScreenState:
    """Snapshot of one screen: hierarchy pre-order component list plus orientation."""

    activity: str
    components: tuple[GuiComponent, ...]
    orientation: Orientation

    def __post_init__(self):
        ids = [c.id for c in self.components]
        if len(ids) != len(set(ids)):
            raise ContractViolation(f"duplicate component ids on screen {self.activity!r}")

    @property
    def state_key(self) -> str:
        return screen_state_key(self.activity, (c.id for c in self.components), self.orientation)

    def component(self, component_id: str) -> Optional[GuiComponent]:
        for c in self.components:
            if c.id == component_id:
                return c
        return None

    def to_json(self) -> dict:
        return {
            "activity": self.activity,
            "components": [c.to_json() for c in self.components],
            "orientation": self.orientation.value,
            "state_key": self.state_key,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ScreenState":
        return cls(
            activity=d["activity"],
            components=tuple(GuiComponent.from_json(c) for c in d["components"]),
            orientation=Orientation(d["orientation"]),
        )


@dataclass(frozen=True)
class UiEvent:
    action: Action
    target: Optional[str] = None
    coordinates: Optional[tuple[int, int]] = None
    text: Optional[str] = None
    context_feature: Optional[ContextualFeature] = None
    context_value: Optional[str] = None

    def __post_init__(self):
        pointer = self.action in (Action.TAP, Action.LONG_TAP, Action.TYPE)
        if pointer and (self.target is None or self.coordinates is None):
            raise ContractViolation(f"{self.action.value} events carry target and coordinates")
        if (self.action == Action.TYPE) != (self.text is not None):
            raise ContractViolation("text is carried by TYPE events only")
        if (self.action == Action.CONTEXT_SET) != (
            self.context_feature is not None and self.context_value is not None
        ):
            raise ContractViolation("feature and value are carried by CONTEXT_SET events only")
        if self.action in (Action.ROTATE, Action.LAUNCH, Action.BACK):
            if self.target is not None or self.coordinates is not None:
                raise ContractViolation(f"{self.action.value} events carry no target")

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"action": self.action.value}
        if self.target is not None:
            doc["target"] = self.target
        if self.coordinates is not None:
            doc["coordinates"] = list(self.coordinates)
        if self.text is not None:
            doc["text"] = self.text
        if self.context_feature is not None:
            doc["context_feature"] = self.context_feature.value
            doc["context_value"] = self.context_value
        return doc

    @classmethod
    def from_json(cls, d: dict) -> "UiEvent":
        coords = d.get("coordinates")
        feature = d.get("context_feature")
        return cls(
            action=Action(d["action"]),
            target=d.get("target"),
            coordinates=tuple(coords) if coords is not None else None,
            text=d.get("text"),
            context_feature=ContextualFeature(feature) if feature is not None else None,
            context_value=d.get("context_value"),
        )


_FEATURE_VALUES = {
    ContextualFeature.NETWORK: (ON, OFF),
    ContextualFeature.GPS: (NORMAL, INFEASIBLE),
    ContextualFeature.ACCELEROMETER: (NORMAL, INFEASIBLE),
    ContextualFeature.MAGNETOMETER: (NORMAL, INFEASIBLE),
    ContextualFeature.TEMPERATURE: (NORMAL, INFEASIBLE),
    ContextualFeature.ROTATION: (Orientation.PORTRAIT.value, Orientation.LANDSCAPE.value),
}


def adverse_value(feature: ContextualFeature) -> str:
    """The adverse setting for a feature: network off, sensors infeasible."""
    if feature == ContextualFeature.NETWORK:
        return OFF
    if feature == ContextualFeature.ROTATION:
        return Orientation.LANDSCAPE.value
    return INFEASIBLE


@dataclass(frozen=True)
class ContextState:
    """Total assignment of all six contextual features."""

    network: str = ON
    gps: str = NORMAL
    accelerometer: str = NORMAL
    magnetometer: str = NORMAL
    temperature: str = NORMAL
    rotation: Orientation = Orientation.PORTRAIT

    def __post_init__(self):
        for feature in ContextualFeature:
            value = self.value_of(feature)
            if value not in _FEATURE_VALUES[feature]:
                raise ContractViolation(f"invalid value {value!r} for {feature.value}")

    def value_of(self, feature: ContextualFeature) -> str:
        if feature == ContextualFeature.ROTATION:
            return self.rotation.value
        return getattr(self, feature.value.lower())

    def with_value(self, feature: ContextualFeature, value: str) -> "ContextState":
        if feature == ContextualFeature.ROTATION:
            return replace(self, rotation=Orientation(value))
        return replace(self, **{feature.value.lower(): value})

    def non_default_items(self) -> list[tuple[ContextualFeature, str]]:
        default = ContextState()
        return [
            (f, self.value_of(f))
            for f in ContextualFeature
            if self.value_of(f) != default.value_of(f)
        ]

    def to_json(self) -> dict:
        return {f.value.lower(): self.value_of(f) for f in ContextualFeature}

    @classmethod
    def from_json(cls, d: dict) -> "ContextState":
        return cls(
            network=d["network"],
            gps=d["gps"],
            accelerometer=d["accelerometer"],
            magnetometer=d["magnetometer"],
            temperature=d["temperature"],
            rotation=Orientation(d["rotation"]),
        )


@dataclass(frozen=True)
class StackFrame:
    package: str
    class_name: str
    method: str
    file: str
    line: int

    def to_json(self) -> dict:
        return {
            "package": self.package,
            "class": self.class_name,
            "method": self.method,
            "file": self.file,
            "line": self.line,
        }

    @classmethod
    def from_json(cls, d: dict) -> "StackFrame":
        return cls(d["package"], d["class"], d["method"], d["file"], d["line"])


@dataclass(frozen=True)
class StackTrace:
    exception_type: str
    message: str
    frames: tuple[StackFrame, ...]
    raw_noise: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.exception_type:
            raise ContractViolation("exception_type must be non-empty")
        if not self.frames:
            raise ContractViolation("a stack trace carries at least one frame")

    def to_json(self) -> dict:
        return {
            "exception_type": self.exception_type,
            "message": self.message,
            "frames": [f.to_json() for f in self.frames],
            "raw_noise": list(self.raw_noise),
        }

    @classmethod
    def from_json(cls, d: dict) -> "StackTrace":
        return cls(
            exception_type=d["exception_type"],
            message=d["message"],
            frames=tuple(StackFrame.from_json(f) for f in d["frames"]),
            raw_noise=tuple(d.get("raw_noise", ())),
        )


# Noise categories stripped during normalization: pid tokens, timestamps,
# hex addresses, and object-identity hashes.
_NOISE_PATTERNS = (
    re.compile(r"\(pid[ =]\d+\)"),
    re.compile(r"\bpid=\d+"),
    re.compile(r"\b\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?"),
    re.compile(r"\b\d{10,13}\b"),
    re.compile(r"(?:\bat\s+)?\b0x[0-9a-fA-F]+\b"),
    re.compile(r"@[0-9a-fA-F]+\b"),
)

_WS = re.compile(r"\s+")


def _strip_noise(text: str) -> str:
    for pattern in _NOISE_PATTERNS:
        text = pattern.sub("", text)
    return _WS.sub(" ", text).strip()


def normalize_stack_trace(raw: StackTrace) -> StackTrace:
    """Remove pids, timestamps, addresses, and identity hashes from a capture.

    Frame order and line numbers are preserved; the operation is idempotent.
    """
    frames = tuple(
        StackFrame(
            package=_strip_noise(f.package),
            class_name=_strip_noise(f.class_name),
            method=_strip_noise(f.method),
            file=_strip_noise(f.file),
            line=f.line,
        )
        for f in raw.frames
    )
    return StackTrace(
        exception_type=_strip_noise(raw.exception_type),
        message=_strip_noise(raw.message),
        frames=frames,
        raw_noise=(),
    )


FRAMELESS_PREFIX = "frameless:"


def crash_signature(trace: StackTrace, app_package: str) -> str:
    """Stable 128-bit signature over the app-frame-pruned normalized trace.

    Frames outside `app_package` are ignored, so two captures of one crash
    differing only in framework frames collapse to the same signature. With
    no app frames at all the signature covers only the first line and is
    flagged with a `frameless:` prefix.
    """
    app_frames = [f for f in trace.frames if f.package.startswith(app_package)]
    if not app_frames:
        payload = f"{trace.exception_type}\n{trace.message}"
        return FRAMELESS_PREFIX + fnv1a_128(payload.encode("utf-8"))
    lines = [trace.exception_type, trace.message]
    lines += [f"{f.package}.{f.class_name}.{f.method}({f.file}:{f.line})" for f in app_frames]
    return fnv1a_128("\n".join(lines).encode("utf-8"))


@dataclass(frozen=True)
class StrategyConfig:
    """One cell of the traversal x text x context matrix plus its seed."""

    traversal: Traversal
    text_mode: TextMode
    context_mode: ContextMode
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ContractViolation("seed must fit in 64 unsigned bits")

    def label(self) -> str:
        return f"{self.traversal.value},{self.text_mode.value},{self.context_mode.value}"

    def short(self) -> str:
        return (
            self.label()
            .lower()
            .replace("top_down", "td")
            .replace("bottom_up", "bu")
            .replace(",", "-")
        )

    def to_json(self) -> dict:
        return {
            "traversal": self.traversal.value,
            "text_mode": self.text_mode.value,
            "context_mode": self.context_mode.value,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "StrategyConfig":
        return cls(
            traversal=Traversal(d["traversal"]),
            text_mode=TextMode(d["text_mode"]),
            context_mode=ContextMode(d["context_mode"]),
            seed=d.get("seed", 0),
        )

    @classmethod
    def parse(cls, label: str, seed: int = 0) -> "StrategyConfig":
        parts = [p.strip().upper() for p in label.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"strategy must be TRAVERSAL,TEXT,CONTEXT: {label!r}")
        try:
            return cls(Traversal(parts[0]), TextMode(parts[1]), ContextMode(parts[2]), seed)
        except ValueError as exc:
            raise ValidationError(f"unknown strategy component in {label!r}: {exc}") from None


def strategy_seed(base_seed: int, traversal: Traversal, text_mode: TextMode, context_mode: ContextMode) -> int:
    """Per-strategy seed: base seed XOR a stable hash of the strategy enums."""
    label = f"{traversal.value},{text_mode.value},{context_mode.value}"
    return (base_seed ^ fnv1a_64(label.encode("utf-8"))) & _MASK64


def strategy_matrix(base_seed: int = 0) -> list[StrategyConfig]:
    """All 12 strategy combinations with per-strategy derived seeds."""
    matrix = []
    for traversal in (Traversal.TOP_DOWN, Traversal.BOTTOM_UP):
        for text_mode in TextMode:
            for context_mode in ContextMode:
                matrix.append(
                    StrategyConfig(
                        traversal,
                        text_mode,
                        context_mode,
                        strategy_seed(base_seed, traversal, text_mode, context_mode),
                    )
                )
    return matrix


@dataclass(frozen=True)
class ExecutionStep:
    """One executed event: what ran, where the app was before and after."""

    index: int
    event: UiEvent
    screen_before: str
    screen_after: str
    screenshot_ref: str
    context: ContextState
    screenshot_after_ref: str = ""

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "event": self.event.to_json(),
            "screen_before": self.screen_before,
            "screen_after": self.screen_after,
            "screenshot_ref": self.screenshot_ref,
            "screenshot_after_ref": self.screenshot_after_ref,
            "context": self.context.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExecutionStep":
        return cls(
            index=d["index"],
            event=UiEvent.from_json(d["event"]),
            screen_before=d["screen_before"],
            screen_after=d["screen_after"],
            screenshot_ref=d["screenshot_ref"],
            context=ContextState.from_json(d["context"]),
            screenshot_after_ref=d.get("screenshot_after_ref", ""),
        )


@dataclass(frozen=True)
class ExecutionTrace:
    trace_id: str
    app_id: str
    app_name: str
    app_version: str
    strategy: StrategyConfig
    steps: tuple[ExecutionStep, ...]
    outcome: TraceOutcome
    warnings: tuple[str, ...] = ()
    diagnostic: Optional[str] = None
    task_id: Optional[str] = None

    def __post_init__(self):
        for position, step in enumerate(self.steps, start=1):
            if step.index != position:
                raise ContractViolation(
                    f"trace {self.trace_id}: step indices must be contiguous from 1"
                )
        for previous, current in zip(self.steps, self.steps[1:]):
            if previous.screen_after != current.screen_before:
                raise ContractViolation(
                    f"trace {self.trace_id}: step {current.index} does not chain "
                    f"from step {previous.index}"
                )

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "trace_id": self.trace_id,
            "app_id": self.app_id,
            "app_name": self.app_name,
            "app_version": self.app_version,
            "strategy": self.strategy.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "outcome": self.outcome.value,
            "warnings": list(self.warnings),
        }
        if self.diagnostic is not None:
            doc["diagnostic"] = self.diagnostic
        if self.task_id is not None:
            doc["task_id"] = self.task_id
        return doc

    @classmethod
    def from_json(cls, d: dict) -> "ExecutionTrace":
        return cls(
            trace_id=d["trace_id"],
            app_id=d["app_id"],
            app_name=d["app_name"],
            app_version=d["app_version"],
            strategy=StrategyConfig.from_json(d["strategy"]),
            steps=tuple(ExecutionStep.from_json(s) for s in d["steps"]),
            outcome=TraceOutcome(d["outcome"]),
            warnings=tuple(d.get("warnings", ())),
            diagnostic=d.get("diagnostic"),
            task_id=d.get("task_id"),
        )


@dataclass(frozen=True)
class CrashRecord:
    crash_id: str
    trace_id: str
    crash_step_index: int
    stack_trace: StackTrace
    signature: str
    context_at_crash: ContextState
    orientation: Orientation
    resolution: str
    dialog_only: bool = False
    task_id: Optional[str] = None

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "crash_id": self.crash_id,
            "trace_id": self.trace_id,
            "crash_step_index": self.crash_step_index,
            "stack_trace": self.stack_trace.to_json(),
            "signature": self.signature,
            "context_at_crash": self.context_at_crash.to_json(),
            "orientation": self.orientation.value,
            "resolution": self.resolution,
            "dialog_only": self.dialog_only,
        }
        if self.task_id is not None:
            doc["task_id"] = self.task_id
        return doc

    @classmethod
    def from_json(cls, d: dict) -> "CrashRecord":
        return cls(
            crash_id=d["crash_id"],
            trace_id=d["trace_id"],
            crash_step_index=d["crash_step_index"],
            stack_trace=StackTrace.from_json(d["stack_trace"]),
            signature=d["signature"],
            context_at_crash=ContextState.from_json(d["context_at_crash"]),
            orientation=Orientation(d["orientation"]),
            resolution=d["resolution"],
            dialog_only=d.get("dialog_only", False),
            task_id=d.get("task_id"),
        )
