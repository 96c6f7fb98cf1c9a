import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    projects: [
      {
        test: {
          name: "unit",
          include: ["tests/**/*.test.ts"],
          exclude: ["tests/integration.test.ts"],
          environment: "node",
        },
      },
      {
        test: {
          name: "integration",
          include: ["tests/integration.test.ts"],
          environment: "node",
          testTimeout: 180_000,
          hookTimeout: 60_000,
          // one spawned server; keep the suite serial
          pool: "forks",
          maxConcurrency: 1,
        },
      },
    ],
  },
});
