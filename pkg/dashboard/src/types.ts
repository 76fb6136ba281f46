// Mirrors of the service's JSON responses. Every field rendered by the
// dashboard maps 1:1 onto one of these; nothing is synthesized client-side.

export interface TaskProgress {
  strategies_done: number;
  strategies_total: number;
  events_executed: number;
}

export interface TaskStats {
  running_time_seconds: number;
  crash_count: number;
  app_name?: string;
  app_version?: string;
}

export interface TaskAppRef {
  app_id: string;
  name: string;
  version: string;
  package: string;
  model_ref: string;
  ir_ref: string;
}

export type TaskStatus = "QUEUED" | "RUNNING" | "COMPLETED" | "FAILED";

export interface TaskDoc {
  task_id: string;
  app: TaskAppRef;
  strategies: string[];
  seed?: number;
  status: TaskStatus;
  progress: TaskProgress;
  stats: TaskStats;
  error?: string;
}

export interface TaskListResponse {
  tasks: TaskDoc[];
}

export interface CrashRecord {
  crash_id: string;
  trace_id: string;
  crash_step_index: number;
  signature: string;
  orientation: string;
  resolution: string;
  dialog_only?: boolean;
  stack_trace: { exception_type: string; message: string };
}

export interface SignatureGroup {
  signature: string;
  count: number;
  crash_ids: string[];
}

export interface CrashListResponse {
  task_id: string;
  total: number;
  deduplicated_count: number;
  signatures: SignatureGroup[];
  crashes: CrashRecord[];
}

export interface NewTaskInput {
  appModel: Blob;
  appModelName: string;
  appIr: Blob;
  appIrName: string;
  strategies: string[] | "all";
  seed: number;
}
