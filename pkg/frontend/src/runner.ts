import { spawnSync } from "node:child_process";
import type { ChainDoc, RenderOutput } from "./chain.js";

// The primary is reached solely through its CLI; FRAMEQL_PYTHON overrides
// the interpreter when python3 is not the one frameql is installed into.
const PYTHON = process.env.FRAMEQL_PYTHON ?? "python3";

export function renderChain(doc: ChainDoc): RenderOutput {
  const proc = spawnSync(PYTHON, ["-m", "frameql.cli", "render", "--chain", "-"], {
    input: JSON.stringify(doc),
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`could not run ${PYTHON}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr ?? "").trim().split("\n").pop() ?? "";
    throw new Error(`frameql render failed (exit ${proc.status}): ${detail}`);
  }
  return JSON.parse(proc.stdout) as RenderOutput;
}
