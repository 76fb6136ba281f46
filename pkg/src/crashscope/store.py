"""Embedded document store and task queue, backed by a plain directory tree.

Layout is `store/<collection>/<id>.json` (screenshots are `.svg`, scripts
`.cscript`, reports keep both `.json` and `.html`). Writes are atomic
whole-document replaces serialized by a per-collection lock (thread lock
plus flock, so separate processes sharing a store stay safe); reads need no
lock. A `_journal` file per collection preserves insertion order.
"""

from __future__ import annotations

import fcntl
import json
import os
import threading
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Optional

from .domain import SIGNATURE_ALGORITHM, CrashScopeError

COLLECTIONS = ("tasks", "apps", "traces", "crashes", "graphs", "screenshots", "reports", "scripts")

TASK_QUEUED = "QUEUED"
TASK_RUNNING = "RUNNING"
TASK_COMPLETED = "COMPLETED"
TASK_FAILED = "FAILED"

_EXTENSIONS = {"screenshots": ".svg", "scripts": ".cscript"}


class StoreError(CrashScopeError):
    pass


class NotFound(StoreError, KeyError):
    def __str__(self) -> str:  # KeyError would quote the message
        return f"not found: {self.args[0]}"


def canonical_json(doc: Any) -> str:
    """The one serialization used for every persisted document."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


class DocumentStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._thread_locks = {c: threading.Lock() for c in COLLECTIONS}
        for collection in COLLECTIONS:
            (self.root / collection).mkdir(exist_ok=True)
        meta_path = self.root / "_meta.json"
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            if meta.get("signature_algorithm") != SIGNATURE_ALGORITHM:
                raise StoreError(
                    f"store was written with signature algorithm "
                    f"{meta.get('signature_algorithm')!r}, this build uses {SIGNATURE_ALGORITHM!r}"
                )
        else:
            meta_path.write_text(
                canonical_json({"format": 1, "signature_algorithm": SIGNATURE_ALGORITHM})
            )

    # -- locking and low-level paths

    @contextmanager
    def _lock(self, collection: str):
        with self._thread_locks[collection]:
            lock_path = self.root / collection / "_lock"
            with open(lock_path, "w") as handle:
                fcntl.flock(handle, fcntl.LOCK_EX)
                try:
                    yield
                finally:
                    fcntl.flock(handle, fcntl.LOCK_UN)

    def _ext(self, collection: str) -> str:
        return _EXTENSIONS.get(collection, ".json")

    def path_for(self, collection: str, doc_id: str, ext: Optional[str] = None) -> Path:
        return self.root / collection / f"{doc_id}{ext or self._ext(collection)}"

    def _atomic_write(self, path: Path, data: str):
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(data, encoding="utf-8")
        os.replace(tmp, path)

    def _journal_append(self, collection: str, doc_id: str):
        with open(self.root / collection / "_journal", "a", encoding="utf-8") as handle:
            handle.write(doc_id + "\n")

    def _journal_ids(self, collection: str) -> list[str]:
        path = self.root / collection / "_journal"
        if not path.exists():
            return []
        seen = []
        known = set()
        for line in path.read_text(encoding="utf-8").splitlines():
            doc_id = line.strip()
            if doc_id and doc_id not in known:
                known.add(doc_id)
                seen.append(doc_id)
        return seen

    # -- generic documents

    def put_document(self, collection: str, doc_id: str, doc: dict) -> None:
        if collection not in COLLECTIONS:
            raise StoreError(f"unknown collection {collection!r}")
        with self._lock(collection):
            path = self.path_for(collection, doc_id)
            fresh = not path.exists()
            self._atomic_write(path, canonical_json(doc))
            if fresh:
                self._journal_append(collection, doc_id)

    def get_document(self, collection: str, doc_id: str) -> dict:
        path = self.path_for(collection, doc_id)
        if not path.exists():
            raise NotFound(f"{collection}/{doc_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def exists(self, collection: str, doc_id: str, ext: Optional[str] = None) -> bool:
        return self.path_for(collection, doc_id, ext).exists()

    def put_text(self, collection: str, doc_id: str, text: str, ext: Optional[str] = None) -> None:
        with self._lock(collection):
            path = self.path_for(collection, doc_id, ext)
            fresh = not path.exists()
            self._atomic_write(path, text)
            if fresh:
                self._journal_append(collection, doc_id)

    def get_text(self, collection: str, doc_id: str, ext: Optional[str] = None) -> str:
        path = self.path_for(collection, doc_id, ext)
        if not path.exists():
            raise NotFound(f"{collection}/{doc_id}")
        return path.read_text(encoding="utf-8")

    def list_ids(self, collection: str) -> list[str]:
        return self._journal_ids(collection)

    def list_by_task(self, task_id: str, collection: str) -> list[dict]:
        """All JSON documents of one collection belonging to a task, insertion order."""
        out = []
        for doc_id in self._journal_ids(collection):
            path = self.path_for(collection, doc_id)
            if not path.exists():
                continue
            doc = json.loads(path.read_text(encoding="utf-8"))
            if doc.get("task_id") == task_id:
                out.append(doc)
        return out

    # -- task queue

    def enqueue_task(self, doc: dict) -> str:
        for key in ("app", "strategies"):
            if key not in doc:
                raise StoreError(f"task document missing {key!r}")
        with self._lock("tasks"):
            seq_path = self.root / "tasks" / "_seq"
            seq = int(seq_path.read_text()) + 1 if seq_path.exists() else 1
            seq_path.write_text(str(seq))
            task_id = f"task-{seq:06d}"
            record = dict(doc)
            record["task_id"] = task_id
            record["status"] = TASK_QUEUED
            record.setdefault(
                "progress",
                {"strategies_done": 0, "strategies_total": len(doc["strategies"]), "events_executed": 0},
            )
            record.setdefault("stats", {"running_time_seconds": 0.0, "crash_count": 0})
            record["enqueued_at"] = time.time()
            record["claimed_at"] = None
            record["finished_at"] = None
            self._atomic_write(self.path_for("tasks", task_id), canonical_json(record))
            self._journal_append("tasks", task_id)
            return task_id

    def poll_task(self) -> Optional[dict]:
        """Atomically claim the oldest QUEUED task, or None. FIFO by enqueue order."""
        with self._lock("tasks"):
            for task_id in self._journal_ids("tasks"):
                path = self.path_for("tasks", task_id)
                if not path.exists():
                    continue
                doc = json.loads(path.read_text(encoding="utf-8"))
                if doc.get("status") == TASK_QUEUED:
                    doc["status"] = TASK_RUNNING
                    doc["claimed_at"] = time.time()
                    self._atomic_write(path, canonical_json(doc))
                    return doc
            return None

    def get_task(self, task_id: str) -> dict:
        return self.get_document("tasks", task_id)

    def list_tasks(self) -> list[dict]:
        out = []
        for task_id in self._journal_ids("tasks"):
            path = self.path_for("tasks", task_id)
            if path.exists():
                out.append(json.loads(path.read_text(encoding="utf-8")))
        return out

    def update_task(self, task_id: str, mutate: Callable[[dict], None]) -> dict:
        """Read-modify-write a task document under the collection lock."""
        with self._lock("tasks"):
            path = self.path_for("tasks", task_id)
            if not path.exists():
                raise NotFound(f"tasks/{task_id}")
            doc = json.loads(path.read_text(encoding="utf-8"))
            mutate(doc)
            self._atomic_write(path, canonical_json(doc))
            return doc

    def recover_stale_tasks(self, lease_seconds: float) -> list[str]:
        """Re-queue RUNNING tasks whose worker lease expired (crashed worker)."""
        requeued = []
        now = time.time()
        with self._lock("tasks"):
            for task_id in self._journal_ids("tasks"):
                path = self.path_for("tasks", task_id)
                if not path.exists():
                    continue
                doc = json.loads(path.read_text(encoding="utf-8"))
                claimed = doc.get("claimed_at")
                if doc.get("status") == TASK_RUNNING and claimed and now - claimed > lease_seconds:
                    doc["status"] = TASK_QUEUED
                    doc["claimed_at"] = None
                    self._atomic_write(path, canonical_json(doc))
                    requeued.append(task_id)
        return requeued
