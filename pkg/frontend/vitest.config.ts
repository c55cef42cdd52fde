import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // The live test trains a small checkpoint and boots the real service,
    // which takes a while on a loaded machine.
    testTimeout: 120_000,
    hookTimeout: 600_000,
    // Sessions on the live service are stateful; keep files sequential.
    fileParallelism: false,
  },
});
