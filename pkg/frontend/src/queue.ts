// Delivery of one submission with retry.  A network failure (fetch
// rejecting) must not lose the worker's answers: the request is held and
// re-sent until the server answers, immediately on the browser's 'online'
// event or after a fixed delay otherwise.
//
// Server verdicts are final: 2xx resolves 'accepted', 409 resolves
// 'conflict' (lock expired or already recorded — the caller refetches the
// batch), any other HTTP error rejects.  Only transport errors retry, so at
// most one submission is ever in flight per tab.

import { Api, ApiError, SubmitRequest } from './api.js';

export type Delivery = 'accepted' | 'conflict';

// Sleep that also wakes early when connectivity returns.
export function pauseForRetry(ms: number): Promise<void> {
  return new Promise(resolve => {
    const timer = setTimeout(done, ms);
    function done() {
      clearTimeout(timer);
      window.removeEventListener('online', done);
      resolve();
    }
    window.addEventListener('online', done);
  });
}

export interface SubmitterOptions {
  retryMs?: number;
  // called with a human-readable note while offline, and with null once
  // delivery is settled
  onStatus?: (note: string | null) => void;
}

export class Submitter {
  private retryMs: number;
  private onStatus: (note: string | null) => void;
  private inFlight = false;

  constructor(private api: Api, options: SubmitterOptions = {}) {
    this.retryMs = options.retryMs ?? 3000;
    this.onStatus = options.onStatus ?? (() => {});
  }

  async send(request: SubmitRequest): Promise<Delivery> {
    if (this.inFlight) throw new Error('a submission is already pending');
    this.inFlight = true;
    try {
      for (let attempt = 1; ; attempt++) {
        try {
          await this.api.submit(request);
          this.onStatus(null);
          return 'accepted';
        } catch (err) {
          if (err instanceof ApiError) {
            if (err.status === 409) {
              this.onStatus(null);
              return 'conflict';
            }
            this.onStatus(null);
            throw err;
          }
          // transport failure: keep the answers and try again
          this.onStatus(`offline — answers saved, retrying (attempt ${attempt})`);
          await pauseForRetry(this.retryMs);
        }
      }
    } finally {
      this.inFlight = false;
    }
  }
}
