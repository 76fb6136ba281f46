// Pure HTML renderers. Strings in, strings out, so node tests can snapshot
// them without a browser.

import type { CrashListView, TaskRow } from "./viewmodel.js";

export const TRAVERSALS = ["TOP_DOWN", "BOTTOM_UP"] as const;
export const TEXT_MODES = ["NONE", "EXPECTED", "UNEXPECTED"] as const;
export const CONTEXT_MODES = ["NORMAL", "ADVERSE"] as const;

export function allStrategyLabels(): string[] {
  const labels: string[] = [];
  for (const traversal of TRAVERSALS)
    for (const text of TEXT_MODES)
      for (const context of CONTEXT_MODES) labels.push(`${traversal},${text},${context}`);
  return labels;
}

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderNewTaskForm(): string {
  const grid = allStrategyLabels()
    .map(
      (label) => `
      <label class="strategy-cell">
        <input type="checkbox" name="strategy" value="${esc(label)}" checked>
        <span>${esc(label)}</span>
      </label>`,
    )
    .join("");
  return `
<section class="card">
  <h2>New Task</h2>
  <form id="new-task-form">
    <div class="field"><label>App model (JSON) <input type="file" name="app_model" required></label></div>
    <div class="field"><label>App IR (JSON) <input type="file" name="app_ir" required></label></div>
    <div class="field"><label>Seed <input type="number" name="seed" value="0"></label></div>
    <fieldset>
      <legend>Strategies (traversal &times; text &times; context)</legend>
      <div class="strategy-grid">${grid}</div>
    </fieldset>
    <p class="form-error" id="form-error" hidden></p>
    <button type="submit">Submit task</button>
  </form>
</section>`;
}

function progressBar(row: TaskRow): string {
  const total = Math.max(row.strategiesTotal, 1);
  const percent = Math.round((100 * row.strategiesDone) / total);
  return `
    <div class="progress" role="progressbar" aria-valuenow="${percent}">
      <div class="progress-fill" style="width:${percent}%"></div>
      <span>${row.strategiesDone}/${row.strategiesTotal} strategies, ${row.eventsExecuted} events</span>
    </div>`;
}

export function renderActiveTasks(rows: TaskRow[]): string {
  if (!rows.length) return `<p class="empty">No tasks are running.</p>`;
  const items = rows
    .map(
      (row) => `
    <tr>
      <td><a href="#/task/${esc(row.taskId)}">${esc(row.taskId)}</a></td>
      <td>${esc(row.appName)} ${esc(row.appVersion)}</td>
      <td>${esc(row.status)}</td>
      <td>${progressBar(row)}</td>
    </tr>`,
    )
    .join("");
  return `
  <table class="tasks">
    <thead><tr><th>Task</th><th>App</th><th>Status</th><th>Progress</th></tr></thead>
    <tbody>${items}</tbody>
  </table>`;
}

export function renderFinishedTasks(rows: TaskRow[]): string {
  if (!rows.length) return `<p class="empty">No completed tasks yet.</p>`;
  const items = rows
    .map(
      (row) => `
    <tr class="${row.status === "FAILED" ? "failed" : ""}">
      <td><a href="#/task/${esc(row.taskId)}">${esc(row.taskId)}</a></td>
      <td>${esc(row.appName)} ${esc(row.appVersion)}</td>
      <td>${esc(row.status)}${row.error ? ` <span class="error">${esc(row.error)}</span>` : ""}</td>
      <td>${esc(row.crashCount)}</td>
      <td>${esc(row.runningTimeSeconds)} s</td>
    </tr>`,
    )
    .join("");
  return `
  <table class="tasks">
    <thead><tr><th>Task</th><th>App</th><th>Status</th><th># Crashes</th><th>Running time</th></tr></thead>
    <tbody>${items}</tbody>
  </table>`;
}

export function renderDashboardPage(active: TaskRow[], finished: TaskRow[]): string {
  return `
<section class="card">
  <h2>Completed Tasks</h2>
  ${renderFinishedTasks(finished)}
</section>
<section class="card">
  <h2>Running Tasks</h2>
  ${renderActiveTasks(active)}
</section>`;
}

export function renderCrashList(view: CrashListView): string {
  const groups = view.groups
    .map(
      (group) => `
    <li><code>${esc(group.signature)}</code> &times; ${group.count}
      ${group.frameless ? '<span class="badge frameless">frameless</span>' : ""}</li>`,
    )
    .join("");
  const rows = view.crashes
    .map(
      (crash) => `
    <tr>
      <td><a href="#/crash/${esc(crash.crashId)}">${esc(crash.crashId)}</a></td>
      <td>${esc(crash.exceptionType)}</td>
      <td>${esc(crash.steps)}</td>
      <td><code>${esc(crash.signature)}</code>
        ${crash.frameless ? '<span class="badge frameless">frameless</span>' : ""}</td>
    </tr>`,
    )
    .join("");
  return `
<section class="card">
  <h2>Crashes for ${esc(view.taskId)}</h2>
  <p>${view.dedupCount} unique signature(s) across ${view.total} crash record(s).</p>
  <ul class="signatures">${groups}</ul>
  <table class="crashes">
    <thead><tr><th>Crash</th><th>Exception</th><th>Steps</th><th>Signature</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

export function renderCrashPage(crashId: string, reportUrl: string, scriptUrl: string, frameless: boolean): string {
  return `
<section class="card">
  <h2>Crash Report</h2>
  <p>
    <code>${esc(crashId)}</code>
    ${frameless ? '<span class="badge frameless">frameless</span>' : ""}
    <a class="download" href="${esc(scriptUrl)}" download="${esc(crashId)}.cscript">Download reproduction script</a>
  </p>
  <iframe class="report-frame" src="${esc(reportUrl)}" title="Crash report ${esc(crashId)}"></iframe>
</section>`;
}

export function renderError(message: string): string {
  return `<section class="card error"><p>${esc(message)}</p></section>`;
}
