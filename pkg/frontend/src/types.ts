export type CellValue = 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9;

/** Train-pair values as the API transmits them: grids are int matrices,
 *  strings stay strings, list tasks are int arrays. */
export type TaskValue = number[][] | number[] | string;

export interface TrainExample {
  input: TaskValue;
  output: TaskValue;
}

export interface HypothesisRow {
  id: string;
  text: string;
}

export interface PendingTask {
  task_id: string;
  domain: string;
  train: TrainExample[];
  hypotheses: HypothesisRow[];
}

export interface RunInfo {
  run_id: string;
  mode: string;
  progress: { done: number; total: number };
  pending_reviews: number;
}

export interface SelectionSubmission {
  run_id: string;
  task_id: string;
  annotator: string;
  chosen_hypothesis_ids: string[];
}
