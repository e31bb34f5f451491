// Compile-and-run harness for generated counting programs.
//
// The counter is used strictly through its command-line interface:
// `emit` produces C++ source against include/counter_runtime.hpp,
// `count` provides the reference value for differential checks.

import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

const here = fileURLToPath(new URL(".", import.meta.url));
export const runtimeDir = resolve(here, "..");
export const includeDir = join(runtimeDir, "include");
export const instancesDir = resolve(runtimeDir, "..", "instances");

function fomc(args: string[]): string {
  return execFileSync("python3", ["-m", "fomc", ...args], {
    encoding: "utf-8",
    cwd: resolve(runtimeDir, ".."),
    timeout: 60_000,
  });
}

export interface Emitted {
  source: string;
  /** domain names in the order the binary expects its arguments */
  argumentOrder: string[];
}

export function emit(instanceFile: string): Emitted {
  const source = fomc(["emit", instanceFile]);
  const match = source.match(/\/\/ arguments: (.*)/);
  if (!match) throw new Error("emitted source lacks the argument-order comment");
  const order = match[1].trim();
  return { source, argumentOrder: order === "(none)" ? [] : order.split(" ") };
}

export function count(instanceFile: string, sizes: Record<string, number>): string {
  const args = ["count", instanceFile];
  for (const [domain, n] of Object.entries(sizes)) args.push("--size", `${domain}=${n}`);
  return fomc(args).trim();
}

export function compile(source: string, name: string): string {
  const dir = mkdtempSync(join(tmpdir(), "fomc-"));
  const cpp = join(dir, `${name}.cpp`);
  const bin = join(dir, name);
  writeFileSync(cpp, source);
  execFileSync(
    "g++",
    ["-std=c++17", "-O2", `-I${includeDir}`, cpp, "-o", bin, "-lgmpxx", "-lgmp"],
    { timeout: 60_000 },
  );
  return bin;
}

export function run(binary: string, args: number[] | string[]): { code: number; stdout: string } {
  const out = spawnSync(binary, args.map(String), { encoding: "utf-8", timeout: 60_000 });
  if (out.error) throw out.error;
  return { code: out.status ?? -1, stdout: out.stdout.trim() };
}

/** deterministic PRNG so the differential vectors are reproducible */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
