import { PendingTask, RunInfo, SelectionSubmission } from './types.js';

/** Error carrying the server's error code verbatim for display. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export interface ReviewApi {
  listRuns(): Promise<RunInfo[]>;
  listPending(runId: string): Promise<PendingTask[]>;
  submitSelection(body: SelectionSubmission): Promise<void>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function toApiError(resp: Response): Promise<ApiError> {
  let code = `HTTP ${resp.status}`;
  let message = code;
  try {
    const doc = await resp.json();
    if (doc?.error?.code) {
      code = doc.error.code;
      message = doc.error.message ?? code;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, code, message);
}

export function createApi(baseUrl: string, fetchFn: FetchLike): ReviewApi {
  const base = baseUrl.replace(/\/$/, '');

  async function getJson<T>(path: string): Promise<T> {
    const resp = await fetchFn(`${base}${path}`);
    if (!resp.ok) throw await toApiError(resp);
    return (await resp.json()) as T;
  }

  return {
    listRuns: () => getJson<RunInfo[]>('/runs'),
    listPending: (runId) =>
      getJson<PendingTask[]>(`/runs/${encodeURIComponent(runId)}/pending`),
    async submitSelection(body) {
      const resp = await fetchFn(`${base}/selections`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      });
      if (resp.status !== 201) throw await toApiError(resp);
    },
  };
}
