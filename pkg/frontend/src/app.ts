import { ApiError, createApi, ReviewApi } from './api.js';
import { renderExample } from './render.js';
import {
  canSubmit,
  Draft,
  emptyDraft,
  nextPollDelay,
  removeTask,
  restoreTask,
  toggleHypothesis,
  toggleNoneCorrect,
} from './state.js';
import { PendingTask, RunInfo } from './types.js';

const POLL_MS = 2000;
const TOAST_MS = 5000;

interface AppState {
  runs: RunInfo[];
  activeRun: string | null;
  pending: PendingTask[];
  drafts: Map<string, Draft>;
  failures: number;
}

function defaultApi(): ReviewApi {
  return createApi('', (input, init) => fetch(input, init));
}

export function startApp(root: HTMLElement, api: ReviewApi = defaultApi()): void {
  const doc = root.ownerDocument;
  const state: AppState = {
    runs: [],
    activeRun: null,
    pending: [],
    drafts: new Map(),
    failures: 0,
  };
  let pollTimer: number | undefined;

  function defaultAnnotator(): string {
    return 'browser';
  }

  function draftFor(taskId: string): Draft {
    return state.drafts.get(taskId) ?? emptyDraft();
  }

  function toast(message: string): void {
    const el = doc.createElement('div');
    el.className = 'toast';
    el.setAttribute('role', 'alert');
    el.textContent = message;
    root.appendChild(el);
    setTimeout(() => el.remove(), TOAST_MS);
  }

  async function refresh(): Promise<void> {
    try {
      state.runs = await api.listRuns();
      if (!state.activeRun && state.runs.length) {
        state.activeRun = state.runs[0].run_id;
      }
      state.pending = state.activeRun ? await api.listPending(state.activeRun) : [];
      state.failures = 0;
      render();
    } catch (err) {
      state.failures += 1;
      renderError(err instanceof Error ? err.message : String(err));
    }
    const delay =
      state.failures === 0 ? POLL_MS : nextPollDelay(POLL_MS, state.failures);
    pollTimer = setTimeout(refresh, delay) as unknown as number;
  }

  async function submit(task: PendingTask): Promise<void> {
    const draft = draftFor(task.task_id);
    if (!canSubmit(draft) || !state.activeRun) return;
    const removal = removeTask(state.pending, task.task_id);
    if (!removal) return;
    state.pending = removal.remaining;
    render();
    try {
      await api.submitSelection({
        run_id: state.activeRun,
        task_id: task.task_id,
        annotator: defaultAnnotator(),
        chosen_hypothesis_ids: draft.noneCorrect ? [] : draft.chosen,
      });
      state.drafts.delete(task.task_id);
    } catch (err) {
      // roll back the optimistic removal and surface the API code verbatim
      state.pending = restoreTask(state.pending, removal.removed, removal.index);
      const text = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      toast(text);
      render();
    }
  }

  function renderError(message: string): void {
    let banner = root.querySelector<HTMLElement>('.error-banner');
    if (!banner) {
      banner = doc.createElement('div');
      banner.className = 'error-banner';
      banner.setAttribute('role', 'alert');
      root.prepend(banner);
    }
    banner.textContent = `Connection problem: ${message} — retrying…`;
  }

  function renderTaskCard(task: PendingTask): HTMLElement {
    const card = doc.createElement('section');
    card.className = 'card';
    card.dataset.taskId = task.task_id;

    const heading = doc.createElement('h2');
    heading.textContent = `${task.task_id} (${task.domain})`;
    card.appendChild(heading);

    const examples = doc.createElement('div');
    examples.className = 'examples';
    task.train.forEach((ex, i) => examples.appendChild(renderExample(doc, ex, i)));
    card.appendChild(examples);

    const draft = draftFor(task.task_id);
    const list = doc.createElement('fieldset');
    const legend = doc.createElement('legend');
    legend.textContent = 'Which hypotheses describe the transformation?';
    list.appendChild(legend);

    for (const hyp of task.hypotheses) {
      const row = doc.createElement('label');
      row.className = 'hypothesis';
      const box = doc.createElement('input');
      box.type = 'checkbox';
      box.checked = draft.chosen.includes(hyp.id);
      box.addEventListener('change', () => {
        state.drafts.set(task.task_id, toggleHypothesis(draftFor(task.task_id), hyp.id));
        render();
      });
      row.appendChild(box);
      const text = doc.createElement('span');
      text.textContent = hyp.text; // verbatim, never truncated
      row.appendChild(text);
      list.appendChild(row);
    }

    const noneRow = doc.createElement('label');
    noneRow.className = 'hypothesis none-correct';
    const noneBox = doc.createElement('input');
    noneBox.type = 'checkbox';
    noneBox.checked = draft.noneCorrect;
    noneBox.addEventListener('change', () => {
      state.drafts.set(task.task_id, toggleNoneCorrect(draftFor(task.task_id)));
      render();
    });
    noneRow.appendChild(noneBox);
    const noneText = doc.createElement('span');
    noneText.textContent = 'None of these are correct';
    noneRow.appendChild(noneText);
    list.appendChild(noneRow);
    card.appendChild(list);

    const button = doc.createElement('button');
    button.textContent = 'Submit selection';
    button.disabled = !canSubmit(draft);
    button.addEventListener('click', () => void submit(task));
    card.appendChild(button);
    return card;
  }

  function render(): void {
    root.textContent = '';
    const header = doc.createElement('header');
    const title = doc.createElement('h1');
    title.textContent = 'Hypothesis review';
    header.appendChild(title);

    if (state.runs.length > 1) {
      const select = doc.createElement('select');
      select.setAttribute('aria-label', 'Run');
      for (const run of state.runs) {
        const opt = doc.createElement('option');
        opt.value = run.run_id;
        opt.textContent = `${run.run_id} (${run.pending_reviews} pending)`;
        opt.selected = run.run_id === state.activeRun;
        select.appendChild(opt);
      }
      select.addEventListener('change', () => {
        state.activeRun = select.value;
        void refresh();
      });
      header.appendChild(select);
    }
    root.appendChild(header);

    if (!state.pending.length) {
      const done = doc.createElement('p');
      done.className = 'all-caught-up';
      done.textContent = 'All caught up — nothing awaiting review.';
      root.appendChild(done);
      return;
    }
    for (const task of state.pending) {
      root.appendChild(renderTaskCard(task));
    }
  }

  void refresh();

  // expose a stop hook for tests
  (root as HTMLElement & { __stopPolling?: () => void }).__stopPolling = () => {
    if (pollTimer !== undefined) clearTimeout(pollTimer);
  };
}
