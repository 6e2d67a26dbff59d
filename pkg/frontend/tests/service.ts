/** Spawns the Python session service for end-to-end tests. */

import { ChildProcess, spawn } from "node:child_process";
import { once } from "node:events";
import path from "node:path";
import { fileURLToPath } from "node:url";

export interface RunningService {
  baseUrl: string;
  stop(): Promise<void>;
}

const REPO_ROOT = path.resolve(fileURLToPath(import.meta.url), "../../..");

async function waitReady(baseUrl: string, proc: ChildProcess): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) {
      throw new Error(`service exited early with code ${proc.exitCode}`);
    }
    try {
      const res = await fetch(`${baseUrl}/openapi.json`);
      if (res.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not become ready within 30s");
}

export async function spawnService(port: number): Promise<RunningService> {
  const proc = spawn(
    "python3",
    [
      "-m",
      "uvicorn",
      "--factory",
      "gesturekit.service:create_app",
      "--port",
      String(port),
      "--log-level",
      "warning",
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "ignore", "pipe"] },
  );
  let stderr = "";
  proc.stderr.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  const baseUrl = `http://127.0.0.1:${port}`;
  try {
    await waitReady(baseUrl, proc);
  } catch (err) {
    proc.kill("SIGKILL");
    throw new Error(`${String(err)}\n${stderr}`);
  }
  return {
    baseUrl,
    async stop() {
      if (proc.exitCode === null) {
        proc.kill("SIGTERM");
        await Promise.race([once(proc, "exit"), new Promise((r) => setTimeout(r, 5000))]);
        if (proc.exitCode === null) proc.kill("SIGKILL");
      }
    },
  };
}
