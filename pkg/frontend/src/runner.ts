/**
 * Process plumbing: every binding call shells out to the native CLI and
 * exchanges files in a throwaway temp directory.  Errors from the native
 * side surface as exceptions carrying the CLI's diagnostic.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

const PYTHON = process.env.CENTERHEAD_PYTHON ?? "python3";
// repo layout: <repo>/frontend/dist/src/runner.js -> <repo>/src
const REPO_SRC = path.resolve(__dirname, "..", "..", "..", "src");

export function runCli(args: string[]): string {
  const env = { ...process.env };
  env.PYTHONPATH = env.CENTERHEAD_PYTHONPATH ?? `${REPO_SRC}${path.delimiter}${env.PYTHONPATH ?? ""}`;
  const proc = spawnSync(PYTHON, ["-m", "centerhead.cli", ...args], {
    encoding: "utf-8",
    env,
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`failed to launch native CLI: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const diag = (proc.stderr ?? "").trim().split("\n").filter((l) => !l.startsWith("config:"));
    throw new Error(`native CLI exited with ${proc.status}: ${diag.join(" | ")}`);
  }
  return proc.stdout ?? "";
}

export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(path.join(tmpdir(), "centerhead-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
