/** Locates and invokes the flareforge CLI. */

import { spawnSync } from "node:child_process";

export class EngineError extends Error {
  readonly errorKind: string;

  constructor(kind: string, message: string) {
    super(message);
    this.name = "EngineError";
    this.errorKind = kind;
  }
}

function probe(command: string[]): boolean {
  const result = spawnSync(command[0], [...command.slice(1), "--version"], {
    encoding: "utf8",
  });
  return result.status === 0;
}

/** Resolution order: explicit argument, $FLAREFORGE_CMD, `flareforge` on
 *  PATH, `python3 -m flareforge`. */
export function resolveCommand(explicit?: string[]): string[] {
  if (explicit && explicit.length > 0) {
    return explicit;
  }
  const env = process.env.FLAREFORGE_CMD;
  if (env) {
    return env.split(/\s+/).filter((part) => part.length > 0);
  }
  for (const candidate of [["flareforge"], ["python3", "-m", "flareforge"]]) {
    if (probe(candidate)) {
      return candidate;
    }
  }
  throw new EngineError(
    "EngineNotFound",
    "flareforge CLI not found; install the engine or set FLAREFORGE_CMD",
  );
}

/** Runs one CLI invocation, translating error JSON into EngineError. */
export function runEngine(command: string[], args: string[]): string {
  const result = spawnSync(command[0], [...command.slice(1), ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.error) {
    throw new EngineError("SpawnError", String(result.error));
  }
  if (result.status !== 0) {
    const line = (result.stderr ?? "").trim().split("\n").pop() ?? "";
    try {
      const parsed = JSON.parse(line) as { error_kind: string; message: string };
      throw new EngineError(parsed.error_kind, parsed.message);
    } catch (err) {
      if (err instanceof EngineError) {
        throw err;
      }
      throw new EngineError(
        "EngineFailure",
        `exit ${result.status}: ${result.stderr || result.stdout}`,
      );
    }
  }
  return result.stdout;
}
