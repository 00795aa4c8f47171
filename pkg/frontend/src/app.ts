// Session loop: fetch a batch, collect answers, submit, repeat until the
// server has nothing left for this worker.  Holds no state across batches
// beyond the worker id; a lock conflict (409) simply refetches.

import { Api, ApiError, Batch, FetchLike } from './api.js';
import { emptyForm, toSubmitRequest } from './form.js';
import { pauseForRetry, Submitter } from './queue.js';
import { renderBatch, renderDone, renderFatal, setStatus } from './view.js';

export interface AppOptions {
  root: HTMLElement;
  base: string;
  worker: string;
  fetchFn?: FetchLike;
  retryMs?: number;
}

export interface App {
  start(): Promise<void>;
}

export function createApp(options: AppOptions): App {
  const { root, worker } = options;
  const retryMs = options.retryMs ?? 3000;
  const api = new Api(options.base, options.fetchFn);
  const submitter = new Submitter(api, {
    retryMs,
    onStatus: note => setStatus(root, note),
  });

  // HTTP errors are final (403 means this worker cannot annotate at all);
  // only transport failures get the retry banner
  async function nextBatch(): Promise<Batch | null> {
    for (let attempt = 1; ; attempt++) {
      try {
        const batch = await api.batch(worker);
        setStatus(root, null);
        return batch;
      } catch (err) {
        if (err instanceof ApiError) throw err;
        setStatus(root, `cannot reach the server — retrying (attempt ${attempt})`);
        await pauseForRetry(retryMs);
      }
    }
  }

  async function runBatch(batch: Batch): Promise<void> {
    const form = emptyForm();
    await new Promise<void>(resolve => {
      renderBatch(root, batch, form, { onSubmit: resolve });
    });
    // 'conflict' (stale lock or duplicate) falls through to a refetch
    await submitter.send(toSubmitRequest(form, batch));
  }

  async function start(): Promise<void> {
    try {
      for (;;) {
        const batch = await nextBatch();
        if (batch === null) break;
        await runBatch(batch);
      }
      let progress = null;
      try {
        progress = await api.progress();
      } catch {
        // the done screen's readout is best-effort
      }
      renderDone(root, progress);
    } catch (err) {
      renderFatal(root, err instanceof Error ? err.message : String(err));
    }
  }

  return { start };
}
