"""Command line face of the pipeline.

Exit codes: 0 success, 1 domain errors (validation, missing documents,
failed acceptance checks), 2 usage errors. Diagnostics go to stderr,
machine-readable output to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import extract_feature_map, load_app_ir
from .artifacts import persist_strategy_result
from .corpus import run_corpus_checks
from .domain import (
    CrashRecord,
    CrashScopeError,
    ExecutionTrace,
    StrategyConfig,
    strategy_seed,
)
from .report import generate_report, graph_doc_id, render_html, validate_report
from .ripper import ExplorationBudget, TransitionGraph, explore_app, run_matrix
from .simulator import SimulatorPort, load_app_model
from .store import DocumentStore, NotFound


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def cmd_analyze(args) -> int:
    ir = load_app_ir(_read(args.app_ir))
    feature_map = extract_feature_map(ir)
    print(json.dumps(feature_map.to_json(), indent=2, sort_keys=True))
    return 0


def _selected_strategies(args) -> list[StrategyConfig]:
    if args.strategy:
        configs = []
        for label in args.strategy:
            base = StrategyConfig.parse(label)
            configs.append(
                StrategyConfig(
                    base.traversal,
                    base.text_mode,
                    base.context_mode,
                    strategy_seed(args.seed, base.traversal, base.text_mode, base.context_mode),
                )
            )
        return configs
    return []  # empty means the full matrix


def cmd_explore(args) -> int:
    model = load_app_model(_read(args.app_model))
    ir = load_app_ir(_read(args.app_ir))
    for warning in model.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    budget = ExplorationBudget(max_events=args.budget)
    selected = _selected_strategies(args)
    if selected:
        features = extract_feature_map(ir)
        results = [
            explore_app(SimulatorPort(model), config, features, budget) for config in selected
        ]
    else:
        results = run_matrix(model, ir, budget, base_seed=args.seed, worker_count=args.workers)

    store = DocumentStore(args.out) if args.out else None
    rows = []
    for result in results:
        if store is not None and result.error is None:
            persist_strategy_result(store, model, result)
        traces = {t.trace_id: t for t in result.traces}
        for crash in result.crashes:
            rows.append(
                {
                    "signature": crash.signature,
                    "strategy": result.strategy.label(),
                    "steps": crash.crash_step_index,
                    "crash_id": crash.crash_id,
                    "exception": crash.stack_trace.exception_type,
                }
            )
        if result.error:
            print(f"strategy {result.strategy.label()} failed: {result.error}", file=sys.stderr)

    if args.json:
        print(json.dumps({"app_id": model.app_id, "crashes": rows}, indent=2, sort_keys=True))
    else:
        unique = len({r["signature"] for r in rows})
        print(f"{model.app_id}: {len(rows)} crashes, {unique} unique signatures")
        if rows:
            width = max(len(r["strategy"]) for r in rows)
            print(f"{'SIGNATURE':34s} {'STRATEGY':{width}s} STEPS")
            for row in rows:
                print(f"{row['signature'][:34]:34s} {row['strategy']:{width}s} {row['steps']}")
    return 0


def cmd_report(args) -> int:
    store = DocumentStore(args.store)
    crash = CrashRecord.from_json(store.get_document("crashes", args.crash_id))
    trace = ExecutionTrace.from_json(store.get_document("traces", crash.trace_id))
    graph_id = graph_doc_id(trace.app_id, trace.strategy, trace.task_id)
    screens = {}
    app_package = args.package
    try:
        graph = TransitionGraph.from_json(store.get_document("graphs", graph_id))
        screens = graph.nodes
    except NotFound:
        print(f"warning: graph {graph_id} not in store; labels fall back to ids", file=sys.stderr)
    if app_package is None:
        # Longest shared frame-package prefix is a close stand-in when the
        # original model is not at hand.
        app_package = crash.stack_trace.frames[0].package
    doc = generate_report(
        crash,
        trace,
        app_package,
        screens=screens,
        screenshot_exists=lambda ref: store.exists("screenshots", ref),
    )
    validate_report(doc, trace, app_package)
    store.put_document("reports", crash.crash_id, doc.to_json())
    html = render_html(doc, lambda ref: store.get_text("screenshots", ref) if store.exists("screenshots", ref) else None)
    store.put_text("reports", crash.crash_id, html, ext=".html")
    path = store.path_for("reports", crash.crash_id, ext=".html")
    if args.json:
        print(json.dumps({"crash_id": crash.crash_id, "path": str(path)}))
    else:
        print(path)
    return 0


def cmd_replay(args) -> int:
    from .script import ReplayStatus, parse_script, replay_script

    script = parse_script(Path(args.script).read_text(encoding="utf-8"))
    model = load_app_model(_read(args.app_model))
    if script.app_id != model.app_id:
        print(f"warning: script was recorded for {script.app_id}, app is {model.app_id}", file=sys.stderr)
    session = SimulatorPort(model).launch()
    result = replay_script(script, session)
    if args.json:
        print(
            json.dumps(
                {
                    "status": result.status.value,
                    "signature": result.signature,
                    "diverged_at": result.diverged_at,
                    "detail": result.detail,
                }
            )
        )
    elif result.status == ReplayStatus.REPRODUCED:
        print(f"REPRODUCED {result.signature}")
    elif result.status == ReplayStatus.DIVERGED:
        print(f"DIVERGED at command {result.diverged_at}: {result.detail}")
    else:
        print("COMPLETED_NO_CRASH")
    return 0


def cmd_serve(args) -> int:
    import logging

    from .service import ServiceConfig, TaskService

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    dashboard = args.dashboard
    if dashboard is None:
        bundled = Path(__file__).resolve().parents[2] / "dashboard" / "dist"
        dashboard = str(bundled) if bundled.is_dir() else None
    config = ServiceConfig.from_env(
        port=args.port,
        store_path=args.store,
        worker_count=args.workers,
        dashboard_dir=dashboard,
    )
    TaskService(config).serve_forever()
    return 0


def cmd_corpus_run(args) -> int:
    budget = ExplorationBudget(max_events=args.budget)
    checks = run_corpus_checks(args.directory, budget=budget, base_seed=args.seed, worker_count=args.workers)
    failures = [c for c in checks if not c.ok]
    if args.json:
        print(
            json.dumps(
                {
                    "checks": [
                        {"criterion": c.criterion, "subject": c.app_id, "ok": c.ok, "detail": c.detail}
                        for c in checks
                    ],
                    "failures": len(failures),
                },
                indent=2,
            )
        )
    else:
        for check in checks:
            print(check.line())
        print(f"{len(checks)} checks, {len(failures)} failures")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crashscope",
        description="Crash-discovery workbench: explore simulated apps, report and replay crashes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="extract the contextual feature map from an app IR")
    p.add_argument("app_ir")
    p.add_argument("--json", action="store_true", help="JSON output (always JSON)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("explore", help="run exploration strategies against an app model")
    p.add_argument("app_model")
    p.add_argument("app_ir")
    p.add_argument(
        "--strategy",
        action="append",
        metavar="T,X,C",
        help="one strategy triple such as TOP_DOWN,EXPECTED,ADVERSE (repeatable)",
    )
    p.add_argument("--all", action="store_true", help="run the full 12-strategy matrix (default)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=500, help="max counted events per strategy")
    p.add_argument("--out", metavar="STORE", help="persist artifacts into this store directory")
    p.add_argument("--workers", type=int, default=1, help="parallel strategy workers")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("report", help="write the HTML report for a stored crash")
    p.add_argument("crash_id")
    p.add_argument("--store", required=True)
    p.add_argument("--package", help="app package prefix for frame pruning")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="replay a crash script against an app model")
    p.add_argument("script")
    p.add_argument("app_model")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the task service and dashboard")
    p.add_argument("--port", type=int)
    p.add_argument("--store")
    p.add_argument("--workers", type=int)
    p.add_argument("--dashboard", help="directory with the dashboard bundle")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("corpus", help="acceptance corpus operations")
    corpus_sub = p.add_subparsers(dest="corpus_command", required=True)
    p = corpus_sub.add_parser("run", help="run every acceptance check on a corpus directory")
    p.add_argument("directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_corpus_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CrashScopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
