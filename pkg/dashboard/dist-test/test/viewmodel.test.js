import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { test } from "node:test";
import { crashListView, splitTasks, taskRow } from "../src/viewmodel.js";
function fixture(name) {
    const url = new URL(`../../test/fixtures/${name}`, import.meta.url);
    return JSON.parse(readFileSync(url, "utf-8"));
}
const task = fixture("task.json");
const crashes = fixture("crashes.json");
test("task row copies fields verbatim", () => {
    const row = taskRow(task);
    assert.equal(row.taskId, task.task_id);
    assert.equal(row.appName, task.stats.app_name);
    assert.equal(row.crashCount, task.stats.crash_count);
    assert.equal(row.strategiesDone, task.progress.strategies_done);
    assert.equal(row.strategiesTotal, task.progress.strategies_total);
    assert.equal(row.runningTimeSeconds, task.stats.running_time_seconds);
});
test("splitTasks separates terminal from active states", () => {
    const queued = { ...task, task_id: "task-x", status: "QUEUED" };
    const { active, finished } = splitTasks([task, queued]);
    assert.deepEqual(finished.map((row) => row.taskId), [task.task_id]);
    assert.deepEqual(active.map((row) => row.taskId), ["task-x"]);
});
test("crash list view preserves the deduplicated count", () => {
    const view = crashListView(crashes);
    assert.equal(view.dedupCount, crashes.deduplicated_count);
    assert.equal(view.total, crashes.total);
    assert.equal(view.crashes.length, crashes.crashes.length);
    assert.equal(view.groups.length, crashes.deduplicated_count);
});
test("crash list view rejects inconsistent API payloads", () => {
    const broken = { ...crashes, deduplicated_count: crashes.deduplicated_count + 1 };
    assert.throws(() => crashListView(broken), /unique signatures/);
});
test("frameless signatures are flagged", () => {
    const frameless = {
        ...crashes,
        signatures: [{ signature: "frameless:ab12", count: 1, crash_ids: ["c1"] }],
        deduplicated_count: 1,
        crashes: [{ ...crashes.crashes[0], signature: "frameless:ab12" }],
    };
    const view = crashListView(frameless);
    assert.equal(view.groups[0].frameless, true);
    assert.equal(view.crashes[0].frameless, true);
});
