import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globals: true,
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    globalSetup: process.env.CRASHQUERY_NO_SERVICE
      ? []
      : ["tests/integration/service.setup.ts"],
    testTimeout: 30_000,
    hookTimeout: 120_000,
  },
});
