"""Systematic GUI exploration with crash resilience.

One strategy run drives a single device session: it keeps a LIFO component
stack of unexecuted (state, component, action) triples, learns a transition
graph as it goes, injects adverse context and targeted double rotation when
the strategy asks for it, fills text fields per the text heuristic, and on a
crash records the evidence, resets the app, and keeps going through whatever
is left on the stack.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

from .analysis import AppIR, FeatureMap, extract_feature_map, features_for_screen
from .domain import (
    Action,
    ContextMode,
    ContextState,
    ContextualFeature,
    CrashRecord,
    ExecutionStep,
    ExecutionTrace,
    Orientation,
    ScreenState,
    StackFrame,
    StackTrace,
    StrategyConfig,
    TextMode,
    TraceOutcome,
    Traversal,
    UiEvent,
    adverse_value,
    component_center,
    crash_signature,
    normalize_stack_trace,
    strategy_matrix,
)
from .simulator import DevicePort, DeviceSession, EventOutcome, SimulatorPort, resolution_label
from .textgen import SplitMix64, expected_text, unexpected_text


@dataclass(frozen=True)
class ComponentRef:
    state_key: str
    component_id: str
    action: Action


@dataclass(frozen=True)
class GraphEdge:
    src: str
    event: UiEvent
    dst: str
    stale: bool = False

    def to_json(self) -> dict:
        return {"from": self.src, "event": self.event.to_json(), "to": self.dst, "stale": self.stale}

    @classmethod
    def from_json(cls, d: dict) -> "GraphEdge":
        return cls(d["from"], UiEvent.from_json(d["event"]), d["to"], d.get("stale", False))


class TransitionGraph:
    """Learned directed graph of screen states; edges keep insertion order."""

    def __init__(self, root: Optional[str] = None):
        self.root = root
        self.nodes: dict[str, ScreenState] = {}
        self.edges: list[GraphEdge] = []

    def add_node(self, state: ScreenState) -> str:
        key = state.state_key
        if key not in self.nodes:
            self.nodes[key] = state
        if self.root is None:
            self.root = key
        return key

    def add_edge(self, src: str, event: UiEvent, dst: str) -> None:
        for edge in self.edges:
            if not edge.stale and edge.src == src and edge.dst == dst and edge.event == event:
                return
        self.edges.append(GraphEdge(src, event, dst))

    def mark_stale(self, edge: GraphEdge) -> None:
        for i, existing in enumerate(self.edges):
            if existing == edge:
                self.edges[i] = replace(existing, stale=True)
                return

    def shortest_path(self, target: str) -> Optional[list[GraphEdge]]:
        """Fewest-edge path root -> target; ties fall to edge insertion order."""
        if self.root is None or target not in self.nodes:
            return None
        if target == self.root:
            return []
        parent: dict[str, GraphEdge] = {}
        frontier = [self.root]
        seen = {self.root}
        while frontier:
            next_frontier = []
            for node in frontier:
                for edge in self.edges:
                    if edge.stale or edge.src != node or edge.dst in seen:
                        continue
                    seen.add(edge.dst)
                    parent[edge.dst] = edge
                    if edge.dst == target:
                        path = [edge]
                        while path[0].src != self.root:
                            path.insert(0, parent[path[0].src])
                        return path
                    next_frontier.append(edge.dst)
            frontier = next_frontier
        return None

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "nodes": {key: state.to_json() for key, state in sorted(self.nodes.items())},
            "edges": [e.to_json() for e in self.edges],
        }

    @classmethod
    def from_json(cls, d: dict) -> "TransitionGraph":
        graph = cls(root=d["root"])
        for key, state in d["nodes"].items():
            graph.nodes[key] = ScreenState.from_json(state)
        graph.edges = [GraphEdge.from_json(e) for e in d["edges"]]
        return graph

    def to_dot(self) -> str:
        lines = ["digraph transitions {"]
        for key, state in sorted(self.nodes.items()):
            shape = "doublecircle" if key == self.root else "box"
            lines.append(f'  "{key[:12]}" [label="{state.activity}" shape={shape}];')
        for edge in self.edges:
            style = ' style=dashed' if edge.stale else ""
            label = edge.event.action.value
            if edge.event.target:
                label += f":{edge.event.target}"
            lines.append(f'  "{edge.src[:12]}" -> "{edge.dst[:12]}" [label="{label}"{style}];')
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ExplorationBudget:
    max_events: int = 500
    max_wall_time: float = 3600.0

    def __post_init__(self):
        if self.max_events <= 0 or self.max_wall_time <= 0:
            raise ValueError("budget limits must be positive")


class NavOutcome(str, Enum):
    REACHED = "REACHED"
    UNREACHABLE = "UNREACHABLE"


@dataclass
class StrategyRunResult:
    strategy: StrategyConfig
    traces: list[ExecutionTrace]
    crashes: list[CrashRecord]
    graph: TransitionGraph
    screenshots: dict[str, str]
    events_counted: int = 0
    error: Optional[str] = None

    def signatures(self) -> list[str]:
        return [c.signature for c in self.crashes]


DIALOG_ONLY_EXCEPTION = "UnknownException"
DIALOG_ONLY_MESSAGE = "crash dialog shown with no logged app exception"


def build_crash_evidence(drained: list[StackTrace], app_package: str) -> tuple[StackTrace, str, bool]:
    """Turn drained log entries into (normalized trace, signature, dialog_only).

    The newest app-package entry is taken as the crash; with nothing in the
    log a placeholder trace is synthesized and flagged dialog-only, which
    also forces the frameless signature path.
    """
    app_entries = [
        t for t in drained if any(f.package.startswith(app_package) for f in t.frames)
    ]
    if app_entries:
        normalized = normalize_stack_trace(app_entries[-1])
        return normalized, crash_signature(normalized, app_package), False
    placeholder = StackTrace(
        exception_type=DIALOG_ONLY_EXCEPTION,
        message=DIALOG_ONLY_MESSAGE,
        frames=(StackFrame("unknown", "Unknown", "unknown", "Unknown.java", 0),),
    )
    return placeholder, crash_signature(placeholder, app_package), True


def detect_crash(session: DeviceSession, app_package: str):
    """Post-event crash check: evidence triple if the dialog is up, else None.

    Entries drained while no dialog shows are uncaught-but-survivable
    exceptions; the caller records them as trace warnings.
    """
    if not session.crash_dialog_visible():
        return None
    return build_crash_evidence(session.drain_exception_log(), app_package)


class _BudgetExhausted(Exception):
    pass


class _Exploration:
    def __init__(
        self,
        port: DevicePort,
        strategy: StrategyConfig,
        features: FeatureMap,
        budget: ExplorationBudget,
        task_id: Optional[str] = None,
    ):
        if strategy.traversal == Traversal.RANDOM:
            raise NotImplementedError("RANDOM traversal is reserved but not implemented")
        self.port = port
        self.strategy = strategy
        self.features = features
        self.budget = budget
        self.task_id = task_id
        self.session = port.launch()
        self.app_package = self.session.model.package
        self.graph = TransitionGraph()
        self.rng = SplitMix64(strategy.seed)
        self.traces: list[ExecutionTrace] = []
        self.crashes: list[CrashRecord] = []
        self.screenshots: dict[str, str] = {}
        self.stack: list[ComponentRef] = []
        self.visited: set[tuple[str, str, Action]] = set()
        self.pushed_states: set[str] = set()
        self.context_attempted: set[tuple[str, ContextualFeature]] = set()
        self.rotated_states: set[str] = set()
        self.crashed_fills: set[tuple[str, str]] = set()
        self.events_counted = 0
        self.deadline = time.monotonic() + budget.max_wall_time
        self.trace_seq = 0
        self.steps: list[ExecutionStep] = []
        self.warnings: list[str] = []
        self._begin_trace()

    # -- trace lifecycle

    @property
    def trace_id(self) -> str:
        prefix = f"{self.task_id}-" if self.task_id else ""
        model = self.session.model
        return f"{prefix}trace-{model.app_id}-{self.strategy.short()}-{self.trace_seq:02d}"

    def _begin_trace(self):
        self.trace_seq += 1
        self.steps = []
        self.warnings = []

    def _close_trace(self, outcome: TraceOutcome, diagnostic: Optional[str] = None):
        if not self.steps and self.traces:
            return  # nothing happened since the last close; drop the stub
        model = self.session.model
        self.traces.append(
            ExecutionTrace(
                trace_id=self.trace_id,
                app_id=model.app_id,
                app_name=model.name,
                app_version=model.version,
                strategy=self.strategy,
                steps=tuple(self.steps),
                outcome=outcome,
                warnings=tuple(self.warnings),
                diagnostic=diagnostic,
                task_id=self.task_id,
            )
        )

    # -- primitive event execution; every executed event becomes a step

    def _charge(self):
        if time.monotonic() > self.deadline:
            raise _BudgetExhausted("wall clock budget exhausted")
        if self.events_counted >= self.budget.max_events:
            raise _BudgetExhausted("event budget exhausted")
        self.events_counted += 1

    def _execute(self, event: UiEvent, counted: bool = True):
        if counted:
            self._charge()
        elif time.monotonic() > self.deadline:
            raise _BudgetExhausted("wall clock budget exhausted")
        before = self.session.current_state()
        before_key = self.graph.add_node(before)
        context_before = self.session.context
        index = len(self.steps) + 1
        shot_pre = f"{self.trace_id}-s{index:03d}-pre"
        shot_post = f"{self.trace_id}-s{index:03d}-post"
        self.screenshots[shot_pre] = self.session.screenshot(highlight=event.target)
        result = self.session.execute_event(event)
        self.screenshots[shot_post] = self.session.screenshot()
        if result.status == EventOutcome.CRASHED:
            after_key = before_key
        else:
            after = self.session.current_state()
            after_key = self.graph.add_node(after)
            if after_key != before_key:
                self.graph.add_edge(before_key, event, after_key)
        self.steps.append(
            ExecutionStep(
                index=index,
                event=event,
                screen_before=before_key,
                screen_after=after_key,
                screenshot_ref=shot_pre,
                context=context_before,
                screenshot_after_ref=shot_post,
            )
        )
        if result.status != EventOutcome.CRASHED:
            for entry in self.session.drain_exception_log():
                normalized = normalize_stack_trace(entry)
                self.warnings.append(
                    f"uncaught exception without dialog at step {index}: "
                    f"{normalized.exception_type}: {normalized.message}"
                )
        return result

    # -- crash handling

    def _handle_crash(self):
        evidence = detect_crash(self.session, self.app_package)
        trace, signature, dialog_only = evidence
        step_index = len(self.steps)
        self.crashes.append(
            CrashRecord(
                crash_id=f"{self.trace_id}-cr{step_index:03d}",
                trace_id=self.trace_id,
                crash_step_index=step_index,
                stack_trace=trace,
                signature=signature,
                context_at_crash=self.session.context,
                orientation=self.session.orientation,
                resolution=resolution_label(self.session.orientation),
                dialog_only=dialog_only,
                task_id=self.task_id,
            )
        )
        self._close_trace(TraceOutcome.CRASHED)
        self.session.reset_app()
        self._begin_trace()

    # -- per-screen work: context, rotation, text, stack pushes

    def _adverse_features(self, activity: str) -> list[ContextualFeature]:
        wanted = features_for_screen(self.features, activity)
        app_first = [f for f in ContextualFeature if f in self.features.app_level and f in wanted]
        rest = [
            f
            for f in ContextualFeature
            if f in wanted and f not in self.features.app_level and f != ContextualFeature.ROTATION
        ]
        return [f for f in app_first if f != ContextualFeature.ROTATION] + rest

    def _push_refs(self, state: ScreenState, key: str):
        if key in self.pushed_states:
            return
        self.pushed_states.add(key)
        refs = []
        for comp in state.components:
            if comp.clickable:
                refs.append(ComponentRef(key, comp.id, Action.TAP))
            if comp.long_clickable:
                refs.append(ComponentRef(key, comp.id, Action.LONG_TAP))
        refs = [r for r in refs if (r.state_key, r.component_id, r.action) not in self.visited]
        if self.strategy.traversal == Traversal.TOP_DOWN:
            refs = list(reversed(refs))  # first component in pre-order pops first
        for ref in refs:
            self.visited.add((ref.state_key, ref.component_id, ref.action))
            self.stack.append(ref)

    def _process_screen(self) -> bool:
        """Context, rotation, and text work for the current screen.

        Returns False when a crash interrupted processing; the crash has been
        handled and the session sits reset at the root. The screen's
        components are pushed even then, so exploration can come back for them.
        """
        state = self.session.current_state()
        key = self.graph.add_node(state)

        if self.strategy.context_mode == ContextMode.ADVERSE:
            for feature in self._adverse_features(state.activity):
                if (key, feature) in self.context_attempted:
                    continue
                self.context_attempted.add((key, feature))
                event = UiEvent(
                    Action.CONTEXT_SET,
                    context_feature=feature,
                    context_value=adverse_value(feature),
                )
                if self._execute(event).status == EventOutcome.CRASHED:
                    self._push_refs(state, key)
                    self._handle_crash()
                    return False
            if self.features.rotatable and state.activity in self.features.rotatable:
                if key not in self.rotated_states:
                    self.rotated_states.add(key)
                    for _ in range(2):  # targeted double rotation
                        result = self._execute(UiEvent(Action.ROTATE))
                        if result.status == EventOutcome.CRASHED:
                            self._push_refs(state, key)
                            self._handle_crash()
                            return False
                        self.rotated_states.add(self.session.current_state().state_key)

        if self.strategy.text_mode != TextMode.NONE:
            for comp in state.components:
                if comp.keyboard_type is None or (key, comp.id) in self.crashed_fills:
                    continue
                if self.strategy.text_mode == TextMode.EXPECTED:
                    text = expected_text(comp.keyboard_type, self.rng)
                else:
                    text = unexpected_text(comp.keyboard_type, self.rng)
                event = UiEvent(
                    Action.TYPE,
                    target=comp.id,
                    coordinates=component_center(comp.bounds),
                    text=text,
                )
                if self._execute(event).status == EventOutcome.CRASHED:
                    self.crashed_fills.add((key, comp.id))
                    self._push_refs(state, key)
                    self._handle_crash()
                    return False

        self._push_refs(state, key)
        return True

    def _ensure_processed(self):
        """Process the current screen, absorbing any crashes it provokes.

        Terminates because every crash consumes an attempted-slot (context
        feature, rotation, or text fill) that is never retried.
        """
        while not self._process_screen():
            pass

    # -- navigation

    def _navigate(self, target: str) -> NavOutcome:
        current = self.session.current_state().state_key
        if current != self.graph.root:
            # A reset ends the replayable unit; close the trace first.
            if self.steps:
                self._close_trace(TraceOutcome.COMPLETED)
            self.session.reset_app()
            self._begin_trace()
        if target == self.session.current_state().state_key:
            return NavOutcome.REACHED
        path = self.graph.shortest_path(target)
        if path is None:
            return NavOutcome.UNREACHABLE
        for edge in path:
            result = self._execute(edge.event, counted=False)
            if result.status == EventOutcome.CRASHED:
                # A real crash: record it, then give up on this path.
                self.graph.mark_stale(edge)
                self._handle_crash()
                return NavOutcome.UNREACHABLE
            landed = self.session.current_state().state_key
            if landed != edge.dst:
                self.graph.mark_stale(edge)
                return NavOutcome.UNREACHABLE
        return NavOutcome.REACHED

    def _discard_state(self, state_key: str):
        self.stack = [r for r in self.stack if r.state_key != state_key]

    # -- main loop

    def run(self) -> StrategyRunResult:
        try:
            if self.strategy.context_mode == ContextMode.ADVERSE:
                state = self.session.current_state()
                self.graph.add_node(state)
                for feature in ContextualFeature:
                    if feature not in self.features.app_level or feature == ContextualFeature.ROTATION:
                        continue
                    key = self.session.current_state().state_key
                    self.context_attempted.add((key, feature))
                    event = UiEvent(
                        Action.CONTEXT_SET,
                        context_feature=feature,
                        context_value=adverse_value(feature),
                    )
                    if self._execute(event).status == EventOutcome.CRASHED:
                        self._handle_crash()
            self._ensure_processed()
            while self.stack:
                ref = self.stack[-1]
                current = self.session.current_state().state_key
                if current != ref.state_key:
                    if self._navigate(ref.state_key) != NavOutcome.REACHED:
                        self._discard_state(ref.state_key)
                        self._ensure_processed()
                        continue
                    self._ensure_processed()
                    if self.session.current_state().state_key != ref.state_key:
                        continue
                self.stack.pop()
                state = self.session.current_state()
                comp = state.component(ref.component_id)
                if comp is None:
                    continue
                event = UiEvent(ref.action, target=comp.id, coordinates=component_center(comp.bounds))
                result = self._execute(event)
                if result.status == EventOutcome.CRASHED:
                    self._handle_crash()
                    self._ensure_processed()
                    continue
                if self.session.current_state().state_key != ref.state_key:
                    self._ensure_processed()
            self._close_trace(TraceOutcome.COMPLETED)
        except _BudgetExhausted as exc:
            self._close_trace(TraceOutcome.BUDGET_EXHAUSTED, diagnostic=str(exc))
        except Exception as exc:  # device failure aborts the run, never the caller
            self._close_trace(TraceOutcome.BUDGET_EXHAUSTED, diagnostic=f"{type(exc).__name__}: {exc}")
        return StrategyRunResult(
            strategy=self.strategy,
            traces=self.traces,
            crashes=self.crashes,
            graph=self.graph,
            screenshots=self.screenshots,
            events_counted=self.events_counted,
        )


def explore_app(
    port: DevicePort,
    strategy: StrategyConfig,
    features: FeatureMap,
    budget: ExplorationBudget,
    task_id: Optional[str] = None,
) -> StrategyRunResult:
    """Run one strategy against one fresh device session."""
    return _Exploration(port, strategy, features, budget, task_id=task_id).run()


def navigate_to(session: DeviceSession, graph: TransitionGraph, target: str) -> NavOutcome:
    """Reset-and-replay navigation to a known graph node (standalone form)."""
    if session.crash_dialog_visible():
        session.reset_app()
    current = session.current_state().state_key
    if current != graph.root or current not in graph.nodes:
        session.reset_app()
    if target == session.current_state().state_key:
        return NavOutcome.REACHED
    path = graph.shortest_path(target)
    if path is None:
        return NavOutcome.UNREACHABLE
    for edge in path:
        result = session.execute_event(edge.event)
        if result.status == EventOutcome.CRASHED:
            graph.mark_stale(edge)
            return NavOutcome.UNREACHABLE
        if session.current_state().state_key != edge.dst:
            graph.mark_stale(edge)
            return NavOutcome.UNREACHABLE
    return NavOutcome.REACHED


def run_matrix(
    model,
    ir: AppIR,
    budget: ExplorationBudget,
    base_seed: int = 0,
    worker_count: int = 1,
    task_id: Optional[str] = None,
    progress: Optional[Callable[[StrategyRunResult], None]] = None,
    noise_seed: int = 0,
) -> list[StrategyRunResult]:
    """Run all 12 strategies; results come back in canonical matrix order.

    Strategies are independent sessions, so any worker count yields the same
    results; `progress` fires once per finished strategy.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    features = extract_feature_map(ir)
    configs = strategy_matrix(base_seed)

    def run_one(config: StrategyConfig) -> StrategyRunResult:
        try:
            return explore_app(
                SimulatorPort(model, noise_seed=noise_seed), config, features, budget, task_id=task_id
            )
        except Exception as exc:
            return StrategyRunResult(
                strategy=config,
                traces=[],
                crashes=[],
                graph=TransitionGraph(),
                screenshots={},
                error=f"{type(exc).__name__}: {exc}",
            )

    results: list[Optional[StrategyRunResult]] = [None] * len(configs)
    if worker_count == 1:
        for i, config in enumerate(configs):
            results[i] = run_one(config)
            if progress:
                progress(results[i])
    else:
        from concurrent.futures import ThreadPoolExecutor, as_completed

        with ThreadPoolExecutor(max_workers=worker_count) as pool:
            futures = {pool.submit(run_one, config): i for i, config in enumerate(configs)}
            for future in as_completed(futures):
                results[futures[future]] = future.result()
                if progress:
                    progress(future.result())
    return results  # type: ignore[return-value]
