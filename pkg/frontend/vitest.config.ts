import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the equivalence suite boots real gateway processes
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
