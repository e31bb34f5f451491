import { describe, expect, it } from "vitest";
import { join } from "node:path";

import { compile, count, emit, instancesDir, mulberry32, run } from "../src/harness";

const BENCHMARKS = [
  "bijections",
  "functions",
  "friends_smokers",
  "skolem_pair",
] as const;

const VECTORS = 20;
const MAX_SIZE = 30;

describe.each(BENCHMARKS)("%s", (name) => {
  const file = join(instancesDir, `${name}.fo`);

  it("matches the evaluator on random size vectors", () => {
    const { source, argumentOrder } = emit(file);
    const binary = compile(source, name);
    const rand = mulberry32(0xf0c0 + BENCHMARKS.indexOf(name));
    for (let i = 0; i < VECTORS; i++) {
      const sizes: Record<string, number> = {};
      for (const domain of argumentOrder) {
        sizes[domain] = Math.floor(rand() * (MAX_SIZE + 1));
      }
      const args = argumentOrder.map((d) => sizes[d]);
      const got = run(binary, args);
      expect(got.code).toBe(0);
      expect(got.stdout).toBe(count(file, sizes));
    }
  });

  it("emits byte-identical source on repeat", () => {
    expect(emit(file).source).toBe(emit(file).source);
  });
});

describe("bijections binary", () => {
  const file = join(instancesDir, "bijections.fo");

  it("prints 8! for two domains of size 8", () => {
    const { source, argumentOrder } = emit(file);
    const binary = compile(source, "bijections_88");
    expect(argumentOrder).toHaveLength(2);
    const got = run(binary, [8, 8]);
    expect(got.code).toBe(0);
    expect(got.stdout).toBe("40320");
  });

  it("rejects a wrong argument count with exit code 2", () => {
    const { source } = emit(file);
    const binary = compile(source, "bijections_badargs");
    expect(run(binary, [1, 2, 3]).code).toBe(2);
    expect(run(binary, []).code).toBe(2);
    expect(run(binary, ["x", "2"]).code).toBe(2);
  });
});
