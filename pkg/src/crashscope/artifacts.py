"""Persisting one strategy run into the store.

Reports and scripts are generated eagerly here, right after the run, so the
service can serve them without recomputation.
"""

from __future__ import annotations

from typing import Optional

from .report import generate_report, graph_doc_id, render_html, validate_report
from .ripper import StrategyRunResult
from .script import generate_script, serialize_script
from .simulator import AppModel
from .store import DocumentStore


def persist_strategy_result(
    store: DocumentStore,
    model: AppModel,
    result: StrategyRunResult,
    task_id: Optional[str] = None,
) -> dict:
    """Write traces, crashes, graph, screenshots, reports, and scripts.

    Returns a small summary used for task progress accounting.
    """
    for shot_id, svg in sorted(result.screenshots.items()):
        store.put_text("screenshots", shot_id, svg)

    for trace in result.traces:
        store.put_document("traces", trace.trace_id, trace.to_json())

    graph_id = graph_doc_id(model.app_id, result.strategy, task_id)
    graph_doc = {
        "graph_id": graph_id,
        "app_id": model.app_id,
        "strategy": result.strategy.to_json(),
        "task_id": task_id,
        **result.graph.to_json(),
    }
    store.put_document("graphs", graph_id, graph_doc)

    traces_by_id = {t.trace_id: t for t in result.traces}
    for crash in result.crashes:
        store.put_document("crashes", crash.crash_id, crash.to_json())
        trace = traces_by_id[crash.trace_id]

        script = generate_script(trace, crash)
        store.put_text("scripts", crash.crash_id, serialize_script(script))

        report = generate_report(
            crash,
            trace,
            model.package,
            screens=result.graph.nodes,
            screenshot_exists=lambda ref: ref in result.screenshots,
        )
        validate_report(report, trace, model.package)
        store.put_document("reports", crash.crash_id, report.to_json())
        html = render_html(report, result.screenshots.get)
        store.put_text("reports", crash.crash_id, html, ext=".html")

    return {
        "strategy": result.strategy.label(),
        "crashes": len(result.crashes),
        "traces": len(result.traces),
        "events": result.events_counted,
        "error": result.error,
    }
