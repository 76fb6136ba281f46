// Thin fetch layer over the service REST API. Works in the browser and in
// node tests (both provide fetch/FormData/Blob).
export class ApiError extends Error {
    status;
    path;
    constructor(status, message, path) {
        super(message);
        this.status = status;
        this.path = path;
    }
}
async function failFrom(response) {
    let message = `HTTP ${response.status}`;
    let path;
    try {
        const body = (await response.json());
        if (body.error)
            message = body.error;
        path = body.path;
    }
    catch {
        // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, message, path);
}
export class ApiClient {
    baseUrl;
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    url(path) {
        return this.baseUrl + path;
    }
    async listTasks() {
        const response = await fetch(this.url("/api/tasks"));
        if (!response.ok)
            await failFrom(response);
        return (await response.json()).tasks;
    }
    async getTask(taskId) {
        const response = await fetch(this.url(`/api/tasks/${taskId}`));
        if (!response.ok)
            await failFrom(response);
        return (await response.json());
    }
    async getCrashes(taskId) {
        const response = await fetch(this.url(`/api/tasks/${taskId}/crashes`));
        if (!response.ok)
            await failFrom(response);
        return (await response.json());
    }
    reportUrl(crashId) {
        return this.url(`/api/crashes/${crashId}/report`);
    }
    scriptUrl(crashId) {
        return this.url(`/api/crashes/${crashId}/script`);
    }
    async getReportHtml(crashId) {
        const response = await fetch(this.reportUrl(crashId));
        if (!response.ok)
            await failFrom(response);
        return await response.text();
    }
    async getScript(crashId) {
        const response = await fetch(this.scriptUrl(crashId));
        if (!response.ok)
            await failFrom(response);
        return new Uint8Array(await response.arrayBuffer());
    }
    async submitTask(input) {
        const form = new FormData();
        form.append("app_model", input.appModel, input.appModelName);
        form.append("app_ir", input.appIr, input.appIrName);
        form.append("strategies", JSON.stringify(input.strategies));
        form.append("seed", String(input.seed));
        const response = await fetch(this.url("/api/tasks"), { method: "POST", body: form });
        if (!response.ok)
            await failFrom(response);
        const body = (await response.json());
        return body.task_id;
    }
}
