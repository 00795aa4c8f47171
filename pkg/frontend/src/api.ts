// Typed client for the annotation service JSON API (see docs/api.md in the
// main repository).  Field names here must match the server exactly.

export type Label = 'yes' | 'no' | 'incomprehensible';

export const LABELS: Label[] = ['yes', 'no', 'incomprehensible'];

export interface PremiseView {
  sentence: string;
  placeholders: string[];
  examples: string[][]; // [slot A names, slot B names], each possibly empty
  fallback: boolean;
}

export interface Question {
  cand: string;
  sentence: string;
  question: string;
  fallback: boolean;
}

export interface Batch {
  batch_id: string;
  worker: string;
  expires: number;
  premise: PremiseView;
  questions: Question[];
}

export interface Answer {
  cand: string;
  label: Label;
}

export interface SubmitRequest {
  worker: string;
  batch_id: string;
  premise_flagged: boolean;
  answers: Answer[];
}

export interface Progress {
  candidates: number;
  gold: number;
  premise_excluded: number;
  needs_more: number;
  records: number;
  workers: number;
  excluded_workers: string[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function asJson(response: Response): Promise<any> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === 'string') detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return response.json();
}

export class Api {
  private fetchFn: FetchLike;

  constructor(readonly base: string, fetchFn?: FetchLike) {
    // wrap instead of storing `fetch` directly: an unbound fetch reference
    // throws "Illegal invocation" in browsers
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  // null batch_id means the queue holds no more work for this worker
  async batch(worker: string): Promise<Batch | null> {
    const response = await this.fetchFn(
      `${this.base}/batch?worker=${encodeURIComponent(worker)}`,
    );
    const payload = await asJson(response);
    return payload.batch_id === null ? null : (payload as Batch);
  }

  async submit(request: SubmitRequest): Promise<number> {
    const response = await this.fetchFn(`${this.base}/submit`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(request),
    });
    const payload = await asJson(response);
    return payload.accepted as number;
  }

  async progress(): Promise<Progress> {
    const response = await this.fetchFn(`${this.base}/progress`);
    return (await asJson(response)) as Progress;
  }
}
