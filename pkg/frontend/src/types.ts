/** Wire types mirroring the annotation server's JSON payloads. */

export interface RelationCell {
  relation: string;
  score: number;
  noisy_label: 0 | 1;
}

export interface BatchEntry {
  pair_id: string;
  head: string;
  tail: string;
  sentences: string[];
  relations: RelationCell[];
}

export interface MetricReport {
  source: string;
  p_at_k: Record<string, number>;
  r_at_k: Record<string, number>;
  curve: { recall: number[]; precision: number[] };
}

export interface HistoryEntry {
  iteration: number;
  batch_size: number;
  p_at_k: Record<string, number>;
  r_at_k: Record<string, number>;
}

export interface SessionView {
  session_id: string;
  iteration: number;
  budget_remaining: number;
  budget_initial: number;
  done: boolean;
  ks: number[];
  relations: string[];
  batch_id: string;
  batch: BatchEntry[];
  metrics: MetricReport;
  history: HistoryEntry[];
}

export type LabelMap = Record<string, Record<string, 0 | 1>>;
