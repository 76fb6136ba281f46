// Thin fetch layer over the service REST API. Works in the browser and in
// node tests (both provide fetch/FormData/Blob).

import type { CrashListResponse, NewTaskInput, TaskDoc, TaskListResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public path?: string,
  ) {
    super(message);
  }
}

async function failFrom(response: Response): Promise<never> {
  let message = `HTTP ${response.status}`;
  let path: string | undefined;
  try {
    const body = (await response.json()) as { error?: string; path?: string };
    if (body.error) message = body.error;
    path = body.path;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, message, path);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async listTasks(): Promise<TaskDoc[]> {
    const response = await fetch(this.url("/api/tasks"));
    if (!response.ok) await failFrom(response);
    return ((await response.json()) as TaskListResponse).tasks;
  }

  async getTask(taskId: string): Promise<TaskDoc> {
    const response = await fetch(this.url(`/api/tasks/${taskId}`));
    if (!response.ok) await failFrom(response);
    return (await response.json()) as TaskDoc;
  }

  async getCrashes(taskId: string): Promise<CrashListResponse> {
    const response = await fetch(this.url(`/api/tasks/${taskId}/crashes`));
    if (!response.ok) await failFrom(response);
    return (await response.json()) as CrashListResponse;
  }

  reportUrl(crashId: string): string {
    return this.url(`/api/crashes/${crashId}/report`);
  }

  scriptUrl(crashId: string): string {
    return this.url(`/api/crashes/${crashId}/script`);
  }

  async getReportHtml(crashId: string): Promise<string> {
    const response = await fetch(this.reportUrl(crashId));
    if (!response.ok) await failFrom(response);
    return await response.text();
  }

  async getScript(crashId: string): Promise<Uint8Array> {
    const response = await fetch(this.scriptUrl(crashId));
    if (!response.ok) await failFrom(response);
    return new Uint8Array(await response.arrayBuffer());
  }

  async submitTask(input: NewTaskInput): Promise<string> {
    const form = new FormData();
    form.append("app_model", input.appModel, input.appModelName);
    form.append("app_ir", input.appIr, input.appIrName);
    form.append("strategies", JSON.stringify(input.strategies));
    form.append("seed", String(input.seed));
    const response = await fetch(this.url("/api/tasks"), { method: "POST", body: form });
    if (!response.ok) await failFrom(response);
    const body = (await response.json()) as { task_id: string };
    return body.task_id;
  }
}
