// Spawns a real crashquery service on fixture seed 1 for the e2e tests.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const BASE_URL = "http://127.0.0.1:8977";

let proc: ChildProcess | undefined;
let workDir: string | undefined;

export default async function setup(): Promise<() => void> {
  workDir = mkdtempSync(join(tmpdir(), "cq-console-"));
  const dataDir = join(workDir, "data");
  execFileSync("crashquery", ["fixture", "--out", dataDir, "--seed", "1"], {
    stdio: "inherit",
  });
  proc = spawn("crashquery", ["serve", "--data", dataDir, "--port", "8977"], {
    stdio: ["ignore", "inherit", "inherit"],
  });

  const deadline = Date.now() + 90_000;
  for (;;) {
    try {
      const resp = await fetch(`${BASE_URL}/health`);
      if (resp.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error("crashquery service did not come up on :8977");
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }

  return () => {
    proc?.kill();
    if (workDir) rmSync(workDir, { recursive: true, force: true });
  };
}
