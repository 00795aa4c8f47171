// DOM for one annotation batch: the premise rendered as a fact (with
// example entities), an "incomprehensible" checkbox for the premise, and a
// yes / no / incomprehensible radio group per hypothesis.  Questions appear
// exactly in server order.  The submit button only ever becomes clickable
// when the form is complete or the premise is flagged, so an incomplete
// submission cannot be produced through this UI.

import type { Batch, Label, Progress } from './api.js';
import { LABELS } from './api.js';
import { FormState, isComplete, setAnswer, unanswered } from './form.js';

export interface BatchHandlers {
  onSubmit(): void;
}

interface Layout {
  status: HTMLElement;
  work: HTMLElement;
}

const keyHandlers = new WeakMap<HTMLElement, (ev: KeyboardEvent) => void>();

function layoutOf(root: HTMLElement): Layout {
  let status = root.querySelector<HTMLElement>('.status');
  let work = root.querySelector<HTMLElement>('.work');
  if (!status) {
    status = document.createElement('div');
    status.className = 'status';
    root.append(status);
  }
  if (!work) {
    work = document.createElement('div');
    work.className = 'work';
    root.append(work);
  }
  return { status, work };
}

export function setStatus(root: HTMLElement, note: string | null): void {
  const { status } = layoutOf(root);
  status.textContent = note ?? '';
  status.classList.toggle('visible', note !== null);
}

function dropKeyHandler(root: HTMLElement): void {
  const old = keyHandlers.get(root);
  if (old) {
    document.removeEventListener('keydown', old);
    keyHandlers.delete(root);
  }
}

function premiseSection(batch: Batch): { section: HTMLElement; flag: HTMLInputElement } {
  const section = document.createElement('section');
  section.className = 'premise';

  const heading = document.createElement('h2');
  heading.textContent = 'Fact';
  section.append(heading);

  const sentence = document.createElement('p');
  sentence.className = 'premise-sentence';
  sentence.textContent = batch.premise.sentence;
  if (batch.premise.fallback) {
    const hint = document.createElement('span');
    hint.className = 'fallback-hint';
    hint.textContent = ' (wording may be off)';
    sentence.append(hint);
  }
  section.append(sentence);

  // example entities per slot, e.g. "location[A]: france, germany"
  batch.premise.examples.forEach((names, slot) => {
    if (!names.length) return;
    const line = document.createElement('p');
    line.className = 'premise-examples';
    line.textContent = `${batch.premise.placeholders[slot]} — for example: ${names.join(', ')}`;
    section.append(line);
  });

  const flagLabel = document.createElement('label');
  flagLabel.className = 'premise-flag';
  const flag = document.createElement('input');
  flag.type = 'checkbox';
  flag.id = 'premise-flag';
  flagLabel.append(flag, ' This fact is incomprehensible');
  section.append(flagLabel);

  return { section, flag };
}

function questionRow(batch: Batch, index: number): HTMLLIElement {
  const q = batch.questions[index];
  const row = document.createElement('li');
  row.className = 'question';
  row.dataset.cand = q.cand;

  const text = document.createElement('p');
  text.className = 'question-text';
  text.textContent = q.question;
  if (q.fallback) {
    const hint = document.createElement('span');
    hint.className = 'fallback-hint';
    hint.textContent = ' (wording may be off)';
    text.append(hint);
  }
  row.append(text);

  for (const label of LABELS) {
    const wrap = document.createElement('label');
    const radio = document.createElement('input');
    radio.type = 'radio';
    radio.name = `answer-${q.cand}`;
    radio.value = label;
    wrap.append(radio, ` ${label}`);
    row.append(wrap);
  }
  return row;
}

export function renderBatch(
  root: HTMLElement,
  batch: Batch,
  form: FormState,
  handlers: BatchHandlers,
): void {
  const { work } = layoutOf(root);
  dropKeyHandler(root);
  work.textContent = '';

  const { section, flag } = premiseSection(batch);
  work.append(section);

  const list = document.createElement('ol');
  list.className = 'questions';
  batch.questions.forEach((_, i) => list.append(questionRow(batch, i)));
  work.append(list);

  const submit = document.createElement('button');
  submit.id = 'submit';
  submit.textContent = 'Submit answers';
  submit.disabled = true;
  work.append(submit);

  const radios = Array.from(list.querySelectorAll<HTMLInputElement>('input[type=radio]'));

  const refresh = () => {
    form.premiseFlagged = flag.checked;
    for (const radio of radios) radio.disabled = flag.checked;
    list.classList.toggle('muted', flag.checked);
    submit.disabled = !isComplete(form, batch);
  };

  list.addEventListener('change', ev => {
    const radio = ev.target as HTMLInputElement;
    if (radio.type !== 'radio' || !radio.checked) return;
    const cand = radio.closest<HTMLElement>('.question')?.dataset.cand;
    if (cand) setAnswer(form, cand, radio.value as Label);
    refresh();
  });
  flag.addEventListener('change', refresh);

  submit.addEventListener('click', () => {
    if (submit.disabled) return;
    submit.disabled = true; // one delivery per batch
    handlers.onSubmit();
  });

  // y / n answer the first open question and move on
  const shortcut: Record<string, Label> = { y: 'yes', n: 'no' };
  const onKey = (ev: KeyboardEvent) => {
    if (ev.altKey || ev.ctrlKey || ev.metaKey) return;
    const label = shortcut[ev.key.toLowerCase()];
    if (!label || form.premiseFlagged) return;
    const open = unanswered(form, batch);
    if (!open.length) return;
    const radio = list.querySelector<HTMLInputElement>(
      `input[name="answer-${open[0]}"][value=${label}]`,
    );
    if (!radio) return;
    radio.checked = true;
    setAnswer(form, open[0], label);
    refresh();
  };
  keyHandlers.set(root, onKey);
  document.addEventListener('keydown', onKey);
}

export function renderDone(root: HTMLElement, progress: Progress | null): void {
  const { work } = layoutOf(root);
  dropKeyHandler(root);
  work.textContent = '';

  const done = document.createElement('section');
  done.className = 'done';
  const note = document.createElement('p');
  note.textContent = 'No more batches for you right now — thank you!';
  done.append(note);
  if (progress) {
    const line = document.createElement('p');
    line.className = 'progress-line';
    line.textContent =
      `${progress.gold} of ${progress.candidates} candidates finished, ` +
      `${progress.records} answers from ${progress.workers} workers.`;
    done.append(line);
  }
  work.append(done);
}

export function renderFatal(root: HTMLElement, message: string): void {
  const { work } = layoutOf(root);
  dropKeyHandler(root);
  work.textContent = '';
  const box = document.createElement('section');
  box.className = 'fatal';
  box.textContent = `${message} — reload the page to try again.`;
  work.append(box);
}
