// End-to-end against the real annotation service: a scripted browser
// session answers the fixture's 3-hypothesis batch and the server's record
// log must mirror the form state exactly; five such sessions drive every
// candidate to an aggregated gold label.

import { afterAll, beforeAll, describe, expect, it, vi } from 'vitest';
import type { Label } from '../src/api.js';
import { createApp } from '../src/app.js';
import { ServiceHandle, startService } from './server.js';

let service: ServiceHandle;

beforeAll(async () => {
  service = await startService();
  // the service serves this page in production; adopt its origin so the
  // browser environment treats the API as same-origin
  await (window as any).happyDOM.setURL(`${service.base}/`);
});

afterAll(async () => {
  await service.stop();
});

const PATTERN: Label[] = ['yes', 'no', 'yes']; // by question position

async function scriptedSession(worker: string): Promise<Map<string, Label>> {
  const root = document.createElement('div');
  document.body.append(root);
  const app = createApp({ root, base: service.base, worker, retryMs: 100 });
  const session = app.start();

  await vi.waitFor(() => {
    expect(root.querySelectorAll('.question')).toHaveLength(3);
  });
  const rows = Array.from(root.querySelectorAll<HTMLElement>('.question'));
  const answered = new Map<string, Label>();
  rows.forEach((row, i) => {
    row.querySelector<HTMLInputElement>(`input[value=${PATTERN[i]}]`)!.click();
    answered.set(row.dataset.cand!, PATTERN[i]);
  });
  (root.querySelector('#submit') as HTMLButtonElement).click();

  await session; // one premise in the fixture, so the session drains
  expect(root.querySelector('.done')).not.toBeNull();
  root.remove();
  return answered;
}

describe('round trip through the live service', () => {
  it('one session: the record log mirrors the submitted form exactly', async () => {
    const root = document.createElement('div');
    document.body.append(root);
    const app = createApp({ root, base: service.base, worker: 'w1', retryMs: 100 });
    const session = app.start();

    await vi.waitFor(() => {
      expect(root.querySelectorAll('.question')).toHaveLength(3);
    });
    const submit = root.querySelector('#submit') as HTMLButtonElement;
    expect(submit.disabled).toBe(true);

    // first answer via the keyboard shortcut, the rest by clicking
    document.dispatchEvent(new KeyboardEvent('keydown', { key: 'y', bubbles: true }));
    const rows = Array.from(root.querySelectorAll<HTMLElement>('.question'));
    rows[1].querySelector<HTMLInputElement>('input[value=no]')!.click();
    expect(submit.disabled).toBe(true); // one question still open
    rows[2].querySelector<HTMLInputElement>('input[value=yes]')!.click();
    expect(submit.disabled).toBe(false);

    const expected = new Map<string, Label>([
      [rows[0].dataset.cand!, 'yes'],
      [rows[1].dataset.cand!, 'no'],
      [rows[2].dataset.cand!, 'yes'],
    ]);
    submit.click();
    await session;
    root.remove();

    const records = service.readRecords();
    expect(records).toHaveLength(3);
    expect(new Map(records.map(r => [r.cand, r.label as Label]))).toEqual(expected);
    for (const record of records) {
      expect(record.worker).toBe('w1');
      expect(record.premise_flagged).toBe(false);
    }
  });

  it('five sessions yield an aggregated gold label for every candidate', async () => {
    const firstForm = new Map(service.readRecords().map(r => [r.cand, r.label as Label]));
    for (const worker of ['w2', 'w3', 'w4', 'w5']) {
      const answered = await scriptedSession(worker);
      expect(answered).toEqual(firstForm); // same queue order for everyone
    }

    const progress = await (await fetch(`${service.base}/progress`)).json();
    expect(progress.records).toBe(15); // 5 workers × 3 candidates
    expect(progress.gold).toBe(3);
    expect(progress.needs_more).toBe(0);
    expect(progress.excluded_workers).toEqual([]);

    const tsv = await (await fetch(`${service.base}/export.tsv`)).text();
    const [header, ...lines] = tsv.trim().split('\n');
    const cols = header.split('\t');
    const at = (line: string[], name: string) => line[cols.indexOf(name)];
    expect(lines).toHaveLength(3);

    const byPath = new Map(
      lines.map(l => l.split('\t')).map(l => [at(l, 'hypothesis_path'), at(l, 'gold')]),
    );
    // unanimous votes: yes/no/yes by fixture row order
    expect(byPath.get('nsubj--invade--dobj')).toBe('entailment');
    expect(byPath.get('nsubj--attack--dobj')).toBe('non-entailment');
    expect(byPath.get('nsubj--occupy--dobj')).toBe('entailment');
    for (const line of lines) {
      expect(at(line.split('\t'), 'disagreements')).toBe('0');
    }

    // queue drained: a sixth worker gets nothing
    const empty = await (await fetch(`${service.base}/batch?worker=w6`)).json();
    expect(empty.batch_id).toBeNull();
  });
});
