import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the walkthrough builds a site and spawns the service
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
