import assert from "node:assert/strict";
import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { test } from "node:test";

import {
  allStrategyLabels,
  renderCrashList,
  renderCrashPage,
  renderDashboardPage,
  renderNewTaskForm,
} from "../src/render.js";
import type { CrashListResponse, TaskListResponse } from "../src/types.js";
import { crashListView, splitTasks } from "../src/viewmodel.js";

function fixture<T>(name: string): T {
  const url = new URL(`../../test/fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

function checkSnapshot(name: string, rendered: string): void {
  const dir = new URL("../../test/snapshots/", import.meta.url);
  const file = new URL(`../../test/snapshots/${name}`, import.meta.url);
  if (process.env.UPDATE_SNAPSHOTS || !existsSync(file)) {
    mkdirSync(dir, { recursive: true });
    writeFileSync(file, rendered);
  }
  assert.equal(rendered, readFileSync(file, "utf-8"), `snapshot ${name} drifted`);
}

const tasks = fixture<TaskListResponse>("tasks.json").tasks;
const crashes = fixture<CrashListResponse>("crashes.json");

test("new task form holds the full 2x3x2 strategy grid", () => {
  const html = renderNewTaskForm();
  const labels = allStrategyLabels();
  assert.equal(labels.length, 12);
  for (const label of labels) assert.ok(html.includes(label), label);
  assert.ok(html.includes('type="file"'));
  checkSnapshot("new-task-form.html", html);
});

test("dashboard page shows every API-reported stat verbatim", () => {
  const { active, finished } = splitTasks(tasks);
  const html = renderDashboardPage(active, finished);
  for (const doc of tasks) {
    assert.ok(html.includes(doc.task_id));
    assert.ok(html.includes(String(doc.stats.crash_count)));
    assert.ok(html.includes(String(doc.stats.running_time_seconds)));
    assert.ok(html.includes(doc.stats.app_name ?? doc.app.name));
  }
  checkSnapshot("dashboard-page.html", html);
});

test("crash list renders the deduplicated count and each signature", () => {
  const view = crashListView(crashes);
  const html = renderCrashList(view);
  assert.ok(html.includes(`${view.dedupCount} unique signature(s)`));
  for (const group of view.groups) assert.ok(html.includes(group.signature));
  for (const crash of view.crashes) assert.ok(html.includes(crash.crashId));
  checkSnapshot("crash-list.html", html);
});

test("crash page embeds the report and links the script download", () => {
  const html = renderCrashPage(
    "crash-1",
    "/api/crashes/crash-1/report",
    "/api/crashes/crash-1/script",
    true,
  );
  assert.ok(html.includes('src="/api/crashes/crash-1/report"'));
  assert.ok(html.includes('href="/api/crashes/crash-1/script"'));
  assert.ok(html.includes("frameless"));
  assert.ok(html.includes("download"));
});

test("renderers escape hostile labels", () => {
  const view = crashListView({
    ...crashes,
    crashes: [
      {
        ...crashes.crashes[0],
        stack_trace: { exception_type: "<script>alert(1)</script>", message: "m" },
      },
    ],
  });
  const html = renderCrashList(view);
  assert.ok(!html.includes("<script>alert(1)</script>"));
  assert.ok(html.includes("&lt;script&gt;"));
});
