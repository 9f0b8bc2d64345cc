import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["test/**/*.test.ts"],
    exclude: process.env.SCOPE_API ? [] : ["test/acceptance.test.ts"],
  },
});
