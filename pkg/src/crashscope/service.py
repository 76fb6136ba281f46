"""HTTP task service plus polling workers.

The web side accepts app uploads as tasks and serves results; worker threads
poll the store's queue, run the selected strategies, and persist artifacts,
updating task progress after every strategy. All coordination goes through
the store's atomic documents, so handlers and workers share no in-memory
state.
"""

from __future__ import annotations

import email.parser
import email.policy
import json
import logging
import mimetypes
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import urlparse

from .analysis import load_app_ir
from .artifacts import persist_strategy_result
from .domain import ContextMode, StrategyConfig, TextMode, Traversal, ValidationError, fnv1a_128, strategy_seed
from .ripper import ExplorationBudget, explore_app
from .simulator import SimulatorPort, load_app_model
from .store import (
    TASK_COMPLETED,
    TASK_FAILED,
    DocumentStore,
    NotFound,
)

log = logging.getLogger(__name__)

LEASE_SECONDS = 600.0  # crashed-worker recovery lease

ALL_STRATEGY_LABELS = [
    f"{t.value},{x.value},{c.value}"
    for t in (Traversal.TOP_DOWN, Traversal.BOTTOM_UP)
    for x in TextMode
    for c in ContextMode
]


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8345
    store_path: str = "store"
    worker_count: int = 2
    poll_interval_ms: int = 500
    max_events: int = 500
    max_wall_time: float = 3600.0
    dashboard_dir: Optional[str] = None

    def __post_init__(self):
        if self.worker_count < 0:
            raise ValueError("worker_count must be >= 0 (0 means API-only)")

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        env = {
            "store_path": os.environ.get("CRASHSCOPE_STORE"),
            "port": os.environ.get("CRASHSCOPE_PORT"),
            "worker_count": os.environ.get("CRASHSCOPE_WORKERS"),
        }
        merged = {k: v for k, v in env.items() if v is not None}
        if "port" in merged:
            merged["port"] = int(merged["port"])
        if "worker_count" in merged:
            merged["worker_count"] = int(merged["worker_count"])
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)


def parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    """Multipart/form-data fields by name; files come back as raw bytes."""
    if not content_type or "multipart/form-data" not in content_type:
        raise ValidationError("expected multipart/form-data", "Content-Type")
    preamble = f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n".encode()
    message = email.parser.BytesParser(policy=email.policy.default).parsebytes(preamble + body)
    if not message.is_multipart():
        raise ValidationError("malformed multipart body", "Content-Type")
    fields: dict[str, bytes] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name:
            fields[str(name)] = part.get_payload(decode=True) or b""
    return fields


def _strategies_from_selection(selection, seed: int) -> list[StrategyConfig]:
    labels = ALL_STRATEGY_LABELS if selection in (None, "all", ["all"]) else list(selection)
    configs = []
    for label in labels:
        config = StrategyConfig.parse(label)
        configs.append(
            StrategyConfig(
                config.traversal,
                config.text_mode,
                config.context_mode,
                strategy_seed(seed, config.traversal, config.text_mode, config.context_mode),
            )
        )
    return configs


def run_task(store: DocumentStore, task: dict, budget: ExplorationBudget) -> None:
    """Execute one claimed task: all selected strategies, artifacts, progress."""
    task_id = task["task_id"]
    started = time.monotonic()
    try:
        model = load_app_model(store.get_text("apps", task["app"]["model_ref"]))
        ir = load_app_ir(store.get_text("apps", task["app"]["ir_ref"]))
        from .analysis import extract_feature_map

        features = extract_feature_map(ir)
        configs = _strategies_from_selection(task.get("strategies"), task.get("seed", 0))
        crash_total = 0
        for done, config in enumerate(configs, start=1):
            result = explore_app(SimulatorPort(model), config, features, budget, task_id=task_id)
            persist_strategy_result(store, model, result, task_id=task_id)
            crash_total += len(result.crashes)

            def advance(doc, done=done, crash_total=crash_total, result=result):
                doc["progress"]["strategies_done"] = done
                doc["progress"]["events_executed"] += result.events_counted
                doc["stats"]["crash_count"] = crash_total
                doc["stats"]["running_time_seconds"] = round(time.monotonic() - started, 3)

            store.update_task(task_id, advance)

        def complete(doc):
            doc["status"] = TASK_COMPLETED
            doc["finished_at"] = time.time()
            doc["stats"]["running_time_seconds"] = round(time.monotonic() - started, 3)

        store.update_task(task_id, complete)
    except Exception as exc:
        log.exception("task %s failed", task_id)
        detail = f"{type(exc).__name__}: {exc}"

        def fail(doc):
            doc["status"] = TASK_FAILED
            doc["error"] = detail
            doc["finished_at"] = time.time()

        store.update_task(task_id, fail)


def worker_loop(store: DocumentStore, budget: ExplorationBudget, poll_interval: float, shutdown: threading.Event) -> None:
    """Poll for tasks until shutdown; a task failure never kills the worker."""
    while not shutdown.is_set():
        try:
            task = store.poll_task()
        except Exception:
            log.exception("poll failed; backing off")
            task = None
        if task is None:
            shutdown.wait(poll_interval)
            continue
        run_task(store, task, budget)


class TaskService:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = DocumentStore(config.store_path)
        self.shutdown_event = threading.Event()
        self.workers: list[threading.Thread] = []
        self.budget = ExplorationBudget(config.max_events, config.max_wall_time)
        self.dashboard_dir = Path(config.dashboard_dir) if config.dashboard_dir else None
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((config.host, config.port), handler)
        self._httpd_thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def start(self) -> None:
        requeued = self.store.recover_stale_tasks(LEASE_SECONDS)
        if requeued:
            log.info("re-queued stale tasks: %s", requeued)
        for i in range(self.config.worker_count):
            thread = threading.Thread(
                target=worker_loop,
                args=(self.store, self.budget, self.config.poll_interval_ms / 1000.0, self.shutdown_event),
                name=f"worker-{i}",
                daemon=True,
            )
            thread.start()
            self.workers.append(thread)
        self._httpd_thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._httpd_thread.start()
        log.info("listening on %s:%s with %d workers", self.config.host, self.port, self.config.worker_count)

    def stop(self) -> None:
        self.shutdown_event.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        for thread in self.workers:
            thread.join(timeout=5)

    def serve_forever(self) -> None:
        self.start()
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            self.stop()

    # -- request-level operations (exceptions map to HTTP statuses in the handler)

    def submit_task(self, fields: dict[str, bytes]) -> str:
        for required in ("app_model", "app_ir"):
            if required not in fields:
                raise ValidationError("missing upload field", required)
        model = load_app_model(fields["app_model"])
        ir = load_app_ir(fields["app_ir"])
        if ir.package != model.package:
            raise ValidationError(
                f"IR package {ir.package!r} does not match app package {model.package!r}",
                "app_ir.package",
            )
        raw_selection = fields.get("strategies", b"").decode("utf-8").strip()
        selection = "all"
        if raw_selection and raw_selection not in ("all", '"all"'):
            try:
                selection = json.loads(raw_selection)
            except json.JSONDecodeError:
                raise ValidationError(
                    "strategies must be 'all' or a JSON list of strategy labels", "strategies"
                )
            if not isinstance(selection, list) or not selection:
                raise ValidationError("strategies must be 'all' or a non-empty list", "strategies")
            for label in selection:
                StrategyConfig.parse(label)
        seed = int(fields.get("seed", b"0") or b"0")
        model_ref = "app-" + fnv1a_128(fields["app_model"])
        ir_ref = "ir-" + fnv1a_128(fields["app_ir"])
        self.store.put_text("apps", model_ref, fields["app_model"].decode("utf-8"))
        self.store.put_text("apps", ir_ref, fields["app_ir"].decode("utf-8"))
        strategies = ALL_STRATEGY_LABELS if selection == "all" else selection
        return self.store.enqueue_task(
            {
                "app": {
                    "app_id": model.app_id,
                    "name": model.name,
                    "version": model.version,
                    "package": model.package,
                    "model_ref": model_ref,
                    "ir_ref": ir_ref,
                },
                "strategies": strategies,
                "seed": seed,
                "stats": {
                    "running_time_seconds": 0.0,
                    "crash_count": 0,
                    "app_name": model.name,
                    "app_version": model.version,
                },
            }
        )

    def crashes_for_task(self, task_id: str) -> dict:
        self.store.get_task(task_id)  # 404 on unknown task
        crashes = self.store.list_by_task(task_id, "crashes")
        by_signature: dict[str, list[str]] = {}
        for crash in crashes:
            by_signature.setdefault(crash["signature"], []).append(crash["crash_id"])
        return {
            "task_id": task_id,
            "total": len(crashes),
            "deduplicated_count": len(by_signature),
            "signatures": [
                {"signature": sig, "count": len(ids), "crash_ids": ids}
                for sig, ids in sorted(by_signature.items())
            ],
            "crashes": crashes,
        }


def _make_handler(service: TaskService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

        def _send(self, status: int, body: bytes, content_type: str):
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _json(self, status: int, doc) -> None:
            self._send(status, (json.dumps(doc, sort_keys=True) + "\n").encode(), "application/json")

        def _error(self, status: int, message: str, path: str = ""):
            doc = {"error": message}
            if path:
                doc["path"] = path
            self._json(status, doc)

        def _store_ready(self) -> bool:
            if not service.store.root.exists():
                self._error(503, "store unavailable")
                return False
            return True

        def do_POST(self):
            if not self._store_ready():
                return
            route = urlparse(self.path).path
            if route != "/api/tasks":
                self._error(404, f"no such endpoint {route}")
                return
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length)
            try:
                fields = parse_multipart(self.headers.get("Content-Type", ""), body)
                task_id = service.submit_task(fields)
            except ValidationError as exc:
                self._error(400, exc.reason, exc.path)
                return
            except (json.JSONDecodeError, UnicodeDecodeError, ValueError) as exc:
                self._error(400, str(exc))
                return
            except Exception:
                log.exception("task submission failed")
                self._error(500, "internal error")
                return
            self._json(201, {"task_id": task_id})

        def do_GET(self):
            if not self._store_ready():
                return
            route = urlparse(self.path).path
            try:
                if route == "/api/tasks":
                    self._json(200, {"tasks": service.store.list_tasks()})
                elif route.startswith("/api/tasks/") and route.endswith("/crashes"):
                    task_id = route[len("/api/tasks/") : -len("/crashes")]
                    self._json(200, service.crashes_for_task(task_id))
                elif route.startswith("/api/tasks/"):
                    task_id = route[len("/api/tasks/") :]
                    self._json(200, service.store.get_task(task_id))
                elif route.startswith("/api/crashes/") and route.endswith("/report"):
                    crash_id = route[len("/api/crashes/") : -len("/report")]
                    html = service.store.get_text("reports", crash_id, ext=".html")
                    self._send(200, html.encode(), "text/html; charset=utf-8")
                elif route.startswith("/api/crashes/") and route.endswith("/script"):
                    crash_id = route[len("/api/crashes/") : -len("/script")]
                    text = service.store.get_text("scripts", crash_id)
                    self._send(200, text.encode(), "text/plain; charset=utf-8")
                elif route.startswith("/api/crashes/") and route.endswith("/trace"):
                    crash_id = route[len("/api/crashes/") : -len("/trace")]
                    crash = service.store.get_document("crashes", crash_id)
                    self._json(200, service.store.get_document("traces", crash["trace_id"]))
                else:
                    self._static(route)
            except NotFound as exc:
                self._error(404, f"not found: {exc.args[0]}")
            except Exception:
                log.exception("request failed: %s", route)
                self._error(500, "internal error")

        def _static(self, route: str):
            if route.startswith("/api/"):
                self._error(404, f"no such endpoint {route}")
                return
            name = route.lstrip("/") or "index.html"
            root = service.dashboard_dir
            if root is not None:
                candidate = (root / name).resolve()
                if str(candidate).startswith(str(root.resolve())) and candidate.is_file():
                    content_type = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
                    self._send(200, candidate.read_bytes(), content_type)
                    return
            if route == "/":
                body = (
                    b"<!DOCTYPE html><html><body><h1>Crash discovery service</h1>"
                    b"<p>No dashboard bundle is installed. The JSON API lives under /api/.</p>"
                    b"</body></html>"
                )
                self._send(200, body, "text/html; charset=utf-8")
                return
            self._error(404, f"no such file {route}")

    return Handler
