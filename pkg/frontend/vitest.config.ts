import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // parity tests spawn the real service and wait on its health check
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
