import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'happy-dom',
    include: ['test/**/*.test.ts'],
    // the round-trip suite boots the real annotation service
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
