// View models derived from API responses. The dashboard never invents data:
// each derived field is a direct copy or a pure reformatting of one API field.

import type { CrashListResponse, CrashRecord, TaskDoc } from "./types.js";

export const FRAMELESS_PREFIX = "frameless:";

export interface TaskRow {
  taskId: string;
  appName: string;
  appVersion: string;
  status: string;
  strategiesDone: number;
  strategiesTotal: number;
  eventsExecuted: number;
  crashCount: number;
  runningTimeSeconds: number;
  error?: string;
}

export interface CrashRow {
  crashId: string;
  exceptionType: string;
  message: string;
  signature: string;
  frameless: boolean;
  steps: number;
  orientation: string;
  resolution: string;
}

export interface CrashListView {
  taskId: string;
  total: number;
  dedupCount: number;
  groups: { signature: string; count: number; frameless: boolean }[];
  crashes: CrashRow[];
}

export function taskRow(doc: TaskDoc): TaskRow {
  return {
    taskId: doc.task_id,
    appName: doc.stats.app_name ?? doc.app.name,
    appVersion: doc.stats.app_version ?? doc.app.version,
    status: doc.status,
    strategiesDone: doc.progress.strategies_done,
    strategiesTotal: doc.progress.strategies_total,
    eventsExecuted: doc.progress.events_executed,
    crashCount: doc.stats.crash_count,
    runningTimeSeconds: doc.stats.running_time_seconds,
    error: doc.error,
  };
}

export function splitTasks(tasks: TaskDoc[]): { active: TaskRow[]; finished: TaskRow[] } {
  const rows = tasks.map(taskRow);
  return {
    active: rows.filter((row) => row.status === "QUEUED" || row.status === "RUNNING"),
    finished: rows.filter((row) => row.status === "COMPLETED" || row.status === "FAILED"),
  };
}

function crashRow(record: CrashRecord): CrashRow {
  return {
    crashId: record.crash_id,
    exceptionType: record.stack_trace.exception_type,
    message: record.stack_trace.message,
    signature: record.signature,
    frameless: record.signature.startsWith(FRAMELESS_PREFIX),
    steps: record.crash_step_index,
    orientation: record.orientation,
    resolution: record.resolution,
  };
}

export function crashListView(response: CrashListResponse): CrashListView {
  const view: CrashListView = {
    taskId: response.task_id,
    total: response.total,
    dedupCount: response.deduplicated_count,
    groups: response.signatures.map((group) => ({
      signature: group.signature,
      count: group.count,
      frameless: group.signature.startsWith(FRAMELESS_PREFIX),
    })),
    crashes: response.crashes.map(crashRow),
  };
  if (view.groups.length !== view.dedupCount) {
    throw new Error(
      `API reported ${view.dedupCount} unique signatures but listed ${view.groups.length}`,
    );
  }
  return view;
}
