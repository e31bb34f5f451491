import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // each benchmark test compiles C++ and shells out repeatedly
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
