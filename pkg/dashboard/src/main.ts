// Browser entry point: hash routing plus a 2 s polling loop for live tasks.

import { ApiClient, ApiError } from "./api.js";
import {
  renderCrashList,
  renderCrashPage,
  renderDashboardPage,
  renderError,
  renderNewTaskForm,
} from "./render.js";
import { crashListView, splitTasks } from "./viewmodel.js";

const POLL_MS = 2000;
const api = new ApiClient("");
const root = document.getElementById("app")!;
let pollTimer: number | undefined;

function setActiveNav(): void {
  const hash = location.hash || "#/";
  document.querySelectorAll("nav a").forEach((a) => {
    a.classList.toggle("active", a.getAttribute("href") === hash.replace(/\/.+$/, "/") || a.getAttribute("href") === hash);
  });
}

async function showDashboard(): Promise<void> {
  const tasks = await api.listTasks();
  const { active, finished } = splitTasks(tasks);
  root.innerHTML = renderDashboardPage(active, finished);
  if (active.length && (location.hash === "" || location.hash === "#/")) {
    pollTimer = window.setTimeout(() => void route(), POLL_MS);
  }
}

async function showTask(taskId: string): Promise<void> {
  const view = crashListView(await api.getCrashes(taskId));
  const task = await api.getTask(taskId);
  root.innerHTML = renderCrashList(view);
  if (task.status === "QUEUED" || task.status === "RUNNING") {
    pollTimer = window.setTimeout(() => void route(), POLL_MS);
  }
}

function showCrash(crashId: string): void {
  root.innerHTML = renderCrashPage(crashId, api.reportUrl(crashId), api.scriptUrl(crashId), false);
}

function showNewTask(): void {
  root.innerHTML = renderNewTaskForm();
  const form = document.getElementById("new-task-form") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit(form);
  });
}

async function submit(form: HTMLFormElement): Promise<void> {
  const errorBox = document.getElementById("form-error") as HTMLElement;
  errorBox.hidden = true;
  const strategies = Array.from(
    form.querySelectorAll<HTMLInputElement>('input[name="strategy"]:checked'),
  ).map((input) => input.value);
  if (strategies.length === 0) {
    errorBox.textContent = "Select at least one strategy.";
    errorBox.hidden = false;
    return;
  }
  const modelInput = form.querySelector<HTMLInputElement>('input[name="app_model"]')!;
  const irInput = form.querySelector<HTMLInputElement>('input[name="app_ir"]')!;
  const seedInput = form.querySelector<HTMLInputElement>('input[name="seed"]')!;
  if (!modelInput.files?.length || !irInput.files?.length) {
    errorBox.textContent = "Both the app model and the app IR file are required.";
    errorBox.hidden = false;
    return;
  }
  try {
    const taskId = await api.submitTask({
      appModel: modelInput.files[0],
      appModelName: modelInput.files[0].name,
      appIr: irInput.files[0],
      appIrName: irInput.files[0].name,
      strategies: strategies.length === 12 ? "all" : strategies,
      seed: Number(seedInput.value || "0"),
    });
    location.hash = `#/task/${taskId}`;
  } catch (error) {
    errorBox.textContent =
      error instanceof ApiError
        ? `Submission rejected: ${error.message}${error.path ? ` (${error.path})` : ""}`
        : String(error);
    errorBox.hidden = false;
  }
}

async function route(): Promise<void> {
  if (pollTimer !== undefined) {
    clearTimeout(pollTimer);
    pollTimer = undefined;
  }
  setActiveNav();
  const hash = location.hash || "#/";
  try {
    if (hash === "#/" || hash === "#") await showDashboard();
    else if (hash === "#/new") showNewTask();
    else if (hash.startsWith("#/task/")) await showTask(hash.slice("#/task/".length));
    else if (hash.startsWith("#/crash/")) showCrash(hash.slice("#/crash/".length));
    else root.innerHTML = renderError(`Unknown page ${hash}`);
  } catch (error) {
    root.innerHTML = renderError(
      error instanceof ApiError ? `${error.status}: ${error.message}` : String(error),
    );
  }
}

window.addEventListener("hashchange", () => void route());
void route();
