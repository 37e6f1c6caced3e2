import { PendingTask } from './types.js';

/** Per-task selection draft. A draft "exists" (and submit becomes possible)
 *  once at least one hypothesis is chosen or "none correct" is toggled. */
export interface Draft {
  chosen: string[];
  noneCorrect: boolean;
}

export function emptyDraft(): Draft {
  return { chosen: [], noneCorrect: false };
}

export function toggleHypothesis(draft: Draft, id: string): Draft {
  const chosen = draft.chosen.includes(id)
    ? draft.chosen.filter((c) => c !== id)
    : [...draft.chosen, id];
  // picking a hypothesis contradicts "none correct"
  return { chosen, noneCorrect: false };
}

export function toggleNoneCorrect(draft: Draft): Draft {
  return draft.noneCorrect ? emptyDraft() : { chosen: [], noneCorrect: true };
}

export function canSubmit(draft: Draft): boolean {
  return draft.noneCorrect || draft.chosen.length > 0;
}

/** Optimistic removal for submission; returns the new list plus what is
 *  needed to roll back on a failed POST. */
export interface RemovedTask {
  remaining: PendingTask[];
  removed: PendingTask;
  index: number;
}

export function removeTask(pending: PendingTask[], taskId: string): RemovedTask | null {
  const index = pending.findIndex((t) => t.task_id === taskId);
  if (index < 0) return null;
  return {
    remaining: [...pending.slice(0, index), ...pending.slice(index + 1)],
    removed: pending[index],
    index,
  };
}

export function restoreTask(pending: PendingTask[], removed: PendingTask, index: number): PendingTask[] {
  const at = Math.min(index, pending.length);
  return [...pending.slice(0, at), removed, ...pending.slice(at)];
}

/** Polling backoff: doubles on consecutive failures, capped, resets on success. */
export function nextPollDelay(baseMs: number, failures: number, capMs = 30000): number {
  return Math.min(baseMs * 2 ** Math.min(failures, 10), capMs);
}
