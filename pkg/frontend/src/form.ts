// Form state for one batch, kept separate from the DOM so the completeness
// rule ("every question answered, or the premise flagged") is testable on
// its own.  Nothing here survives past the batch except through submit().

import type { Batch, Label, SubmitRequest } from './api.js';

export interface FormState {
  answers: Map<string, Label>;
  premiseFlagged: boolean;
}

export function emptyForm(): FormState {
  return { answers: new Map(), premiseFlagged: false };
}

export function setAnswer(state: FormState, cand: string, label: Label): void {
  state.answers.set(cand, label);
}

export function unanswered(state: FormState, batch: Batch): string[] {
  if (state.premiseFlagged) return [];
  return batch.questions.filter(q => !state.answers.has(q.cand)).map(q => q.cand);
}

export function isComplete(state: FormState, batch: Batch): boolean {
  return unanswered(state, batch).length === 0;
}

// Build the POST /submit body.  Answers follow the server's question order;
// refusing incomplete state here is the last line of defence behind the
// disabled submit button.
export function toSubmitRequest(state: FormState, batch: Batch): SubmitRequest {
  if (!isComplete(state, batch)) {
    throw new Error(`unanswered questions: ${unanswered(state, batch).join(', ')}`);
  }
  return {
    worker: batch.worker,
    batch_id: batch.batch_id,
    premise_flagged: state.premiseFlagged,
    answers: state.premiseFlagged
      ? []
      : batch.questions.map(q => ({ cand: q.cand, label: state.answers.get(q.cand)! })),
  };
}
