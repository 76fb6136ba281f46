"""Acceptance corpus: fixture loading, ground-truth oracles, check runner.

Every corpus app ships a model, an IR, and a manifest naming its planted
crashes with the strategy dimensions required to elicit each. The checks
here are the machine-checkable acceptance criteria: strategy sensitivity,
crash resilience, script reproduction, transition-graph fidelity against a
brute-force BFS oracle, and report completeness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .analysis import AppIR, load_app_ir
from .domain import (
    Action,
    Bounds,
    ContextMode,
    StackTrace,
    StrategyConfig,
    TextMode,
    TraceOutcome,
    Traversal,
    UiEvent,
    component_center,
    crash_signature,
    normalize_stack_trace,
)
from .report import generate_report, render_html, validate_report
from .ripper import (
    DIALOG_ONLY_EXCEPTION,
    DIALOG_ONLY_MESSAGE,
    ExplorationBudget,
    StrategyRunResult,
    run_matrix,
)
from .script import ReplayStatus, generate_script, replay_script, serialize_script
from .simulator import AppModel, SimulatorPort, load_app_model, parse_stack_frame
from .domain import StackFrame


@dataclass
class CorpusApp:
    app_id: str
    model: AppModel
    ir: AppIR
    manifest: dict
    path: Path


@dataclass
class CheckResult:
    criterion: str
    app_id: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        suffix = f" ({self.detail})" if self.detail and not self.ok else ""
        return f"{status}  {self.criterion:24s} {self.app_id}{suffix}"


def load_corpus(directory: str | Path) -> list[CorpusApp]:
    directory = Path(directory)
    apps = []
    for entry in sorted(directory.iterdir()):
        manifest_path = entry / "manifest.json"
        if not entry.is_dir() or not manifest_path.exists():
            continue
        model = load_app_model((entry / "model.json").read_bytes())
        ir = load_app_ir((entry / "ir.json").read_bytes())
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("app_id") != model.app_id:
            raise ValueError(f"{entry}: manifest app_id does not match model")
        apps.append(CorpusApp(model.app_id, model, ir, manifest, entry))
    if not apps:
        raise ValueError(f"no corpus apps found under {directory}")
    return apps


def expected_signature(crash_entry: dict, package: str) -> str:
    """Ground-truth signature derived straight from the manifest's planted exception."""
    if crash_entry.get("dialog_only"):
        placeholder = StackTrace(
            exception_type=DIALOG_ONLY_EXCEPTION,
            message=DIALOG_ONLY_MESSAGE,
            frames=(StackFrame("unknown", "Unknown", "unknown", "Unknown.java", 0),),
        )
        return crash_signature(placeholder, package)
    exc = crash_entry["exception"]
    trace = StackTrace(
        exception_type=exc["type"],
        message=exc["message"],
        frames=tuple(parse_stack_frame(f) for f in exc["frames"]),
    )
    return crash_signature(normalize_stack_trace(trace), package)


def strategy_qualifies(strategy: StrategyConfig, required: dict) -> bool:
    """Whether a strategy carries every dimension the manifest demands."""
    dims = {
        "traversal": strategy.traversal.value,
        "text_mode": strategy.text_mode.value,
        "context_mode": strategy.context_mode.value,
    }
    return all(dims[dim] in allowed for dim, allowed in required.items())


# --------------------------------------------------------------------------
# Brute-force ground-truth graph (independent of the exploration engine)


def _canon_event(event: UiEvent) -> str:
    return json.dumps(event.to_json(), sort_keys=True)


def oracle_graph(model: AppModel) -> tuple[dict, set]:
    """Ground truth for (any traversal, NONE text, NORMAL context) exploration.

    Plain breadth-first search over the simulator: every discovered state is
    re-reached through a fresh session replaying its discovery path, and every
    clickable/long-clickable component is fired once. Crashing events add no
    edge; state-preserving events add no edge.
    """
    port = SimulatorPort(model)
    session = port.launch()
    root_state = session.current_state()
    nodes = {root_state.state_key: root_state}
    paths: dict[str, list[UiEvent]] = {root_state.state_key: []}
    edges: set[tuple[str, str, str]] = set()
    queue = [root_state.state_key]
    position = 0
    while position < len(queue):
        key = queue[position]
        position += 1
        state = nodes[key]
        actions = []
        for comp in state.components:
            if comp.clickable:
                actions.append((comp, Action.TAP))
            if comp.long_clickable:
                actions.append((comp, Action.LONG_TAP))
        for comp, action in actions:
            session = port.launch()
            for event in paths[key]:
                session.execute_event(event)
            event = UiEvent(action, target=comp.id, coordinates=component_center(comp.bounds))
            result = session.execute_event(event)
            if result.status.value == "CRASHED":
                continue
            after = session.current_state()
            if after.state_key == key:
                continue
            edges.add((key, _canon_event(event), after.state_key))
            if after.state_key not in nodes:
                nodes[after.state_key] = after
                paths[after.state_key] = paths[key] + [event]
                queue.append(after.state_key)
    return nodes, edges


def learned_edge_set(result: StrategyRunResult) -> set:
    return {
        (e.src, _canon_event(e.event), e.dst) for e in result.graph.edges if not e.stale
    }


# --------------------------------------------------------------------------
# Mutation used by the diverged-replay check


def mutate_model_move_components(model: AppModel) -> AppModel:
    """Squeeze every component into a top-left strip no original tap can hit."""
    screens = []
    for screen in model.screens:
        comps = tuple(
            replace(comp, bounds=Bounds(i * 12, 0, i * 12 + 10, 40))
            for i, comp in enumerate(screen.components)
        )
        screens.append(replace(screen, components=comps))
    return replace(model, screens=tuple(screens))


# --------------------------------------------------------------------------
# Per-app acceptance checks


def check_strategy_sensitivity(app: CorpusApp, results: list[StrategyRunResult]) -> list[CheckResult]:
    checks = []
    union = set()
    for result in results:
        union.update(result.signatures())
    for crash_entry in app.manifest.get("crashes", []):
        name = crash_entry["name"]
        sig = expected_signature(crash_entry, app.model.package)
        required = crash_entry.get("required", {})
        ok = sig in union
        detail = "" if ok else "signature never discovered by the full matrix"
        leaks = []
        for result in results:
            if not strategy_qualifies(result.strategy, required):
                if sig in result.signatures():
                    leaks.append(result.strategy.label())
        if leaks:
            ok = False
            detail = f"found by non-qualifying strategies: {leaks}"
        checks.append(CheckResult("strategy-sensitivity", f"{app.app_id}:{name}", ok, detail))
    return checks


def check_resilience(app: CorpusApp, results: list[StrategyRunResult]) -> list[CheckResult]:
    if not app.manifest.get("resilience_fixture"):
        return []
    expected = {
        expected_signature(entry, app.model.package)
        for entry in app.manifest.get("crashes", [])
    }
    for result in results:
        found = set(result.signatures())
        if expected <= found:
            return [CheckResult("crash-resilience", app.app_id, True)]
    return [
        CheckResult(
            "crash-resilience",
            app.app_id,
            False,
            "no single strategy run discovered every disjoint-path signature",
        )
    ]


def check_script_reproduction(app: CorpusApp, results: list[StrategyRunResult]) -> list[CheckResult]:
    checks = []
    reproduced = 0
    total = 0
    diverged_checked = False
    for result in results:
        traces = {t.trace_id: t for t in result.traces}
        for crash in result.crashes:
            total += 1
            script = generate_script(traces[crash.trace_id], crash)
            fresh = SimulatorPort(app.model).launch()
            outcome = replay_script(script, fresh)
            if outcome.status == ReplayStatus.REPRODUCED and outcome.signature == crash.signature:
                reproduced += 1
            else:
                checks.append(
                    CheckResult(
                        "script-reproduction",
                        f"{app.app_id}:{crash.crash_id}",
                        False,
                        f"{outcome.status.value} {outcome.detail}",
                    )
                )
            if not diverged_checked and any(l.op in ("TAP", "LONGTAP") for l in script.lines):
                mutated = mutate_model_move_components(app.model)
                mutated_session = SimulatorPort(mutated).launch()
                mutated_outcome = replay_script(script, mutated_session)
                diverged_checked = True
                checks.append(
                    CheckResult(
                        "script-divergence",
                        f"{app.app_id}:{crash.crash_id}",
                        mutated_outcome.status == ReplayStatus.DIVERGED,
                        f"mutated replay returned {mutated_outcome.status.value}",
                    )
                )
    if total:
        checks.insert(
            0,
            CheckResult(
                "script-reproduction",
                app.app_id,
                reproduced == total,
                f"{reproduced}/{total} scripts reproduced",
            ),
        )
    return checks


def check_graph_fidelity(app: CorpusApp, budget: ExplorationBudget, base_seed: int) -> list[CheckResult]:
    if not app.manifest.get("graph_oracle_eligible") or len(app.model.screens) > 10:
        return []
    from .analysis import extract_feature_map
    from .ripper import explore_app

    oracle_nodes, oracle_edges = oracle_graph(app.model)
    features = extract_feature_map(app.ir)
    checks = []
    for traversal in (Traversal.TOP_DOWN, Traversal.BOTTOM_UP):
        strategy = StrategyConfig(traversal, TextMode.NONE, ContextMode.NORMAL, seed=base_seed)
        result = explore_app(SimulatorPort(app.model), strategy, features, budget)
        same_nodes = set(result.graph.nodes) == set(oracle_nodes)
        same_edges = learned_edge_set(result) == oracle_edges
        detail = ""
        if not same_nodes:
            detail = f"nodes {len(result.graph.nodes)} vs oracle {len(oracle_nodes)}"
        elif not same_edges:
            detail = f"edges {len(learned_edge_set(result))} vs oracle {len(oracle_edges)}"
        checks.append(
            CheckResult(
                "graph-fidelity",
                f"{app.app_id}:{traversal.value}",
                same_nodes and same_edges,
                detail,
            )
        )
    return checks


def check_reports(app: CorpusApp, results: list[StrategyRunResult]) -> list[CheckResult]:
    checks = []
    for result in results:
        traces = {t.trace_id: t for t in result.traces}
        for crash in result.crashes:
            trace = traces[crash.trace_id]
            doc = generate_report(crash, trace, app.model.package, screens=result.graph.nodes)
            try:
                validate_report(doc, trace, app.model.package)
            except Exception as exc:
                checks.append(
                    CheckResult("report-completeness", f"{app.app_id}:{crash.crash_id}", False, str(exc))
                )
                continue
            lookup = result.screenshots.get
            if render_html(doc, lookup) != render_html(doc, lookup):
                checks.append(
                    CheckResult(
                        "report-completeness",
                        f"{app.app_id}:{crash.crash_id}",
                        False,
                        "two renders of one report differ",
                    )
                )
    if not checks:
        checks.append(CheckResult("report-completeness", app.app_id, True))
    return checks


def check_determinism(app: CorpusApp, budget: ExplorationBudget, base_seed: int, first: list[StrategyRunResult]) -> list[CheckResult]:
    second = run_matrix(app.model, app.ir, budget, base_seed=base_seed, worker_count=1)

    def flatten(results: list[StrategyRunResult]) -> str:
        blob = []
        for result in results:
            blob.extend(json.dumps(t.to_json(), sort_keys=True) for t in result.traces)
            blob.extend(json.dumps(c.to_json(), sort_keys=True) for c in result.crashes)
            traces = {t.trace_id: t for t in result.traces}
            blob.extend(
                serialize_script(generate_script(traces[c.trace_id], c)) for c in result.crashes
            )
        return "\n".join(blob)

    ok = flatten(first) == flatten(second)
    return [
        CheckResult(
            "determinism", app.app_id, ok, "" if ok else "re-run produced different artifacts"
        )
    ]


def run_corpus_checks(
    corpus_dir: str | Path,
    budget: Optional[ExplorationBudget] = None,
    base_seed: int = 0,
    worker_count: int = 1,
) -> list[CheckResult]:
    budget = budget or ExplorationBudget()
    checks: list[CheckResult] = []
    for app in load_corpus(corpus_dir):
        results = run_matrix(app.model, app.ir, budget, base_seed=base_seed, worker_count=worker_count)
        for result in results:
            if result.error:
                checks.append(
                    CheckResult("matrix-run", f"{app.app_id}:{result.strategy.label()}", False, result.error)
                )
        checks.extend(check_strategy_sensitivity(app, results))
        checks.extend(check_resilience(app, results))
        checks.extend(check_script_reproduction(app, results))
        checks.extend(check_graph_fidelity(app, budget, base_seed))
        checks.extend(check_reports(app, results))
        checks.extend(check_determinism(app, budget, base_seed, results))
    return checks
