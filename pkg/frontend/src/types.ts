/** Wire types for the review service's JSON API. */

export type Label = 'SUPPORTED' | 'REFUTED' | 'NOT_ENOUGH_INFO';

export type ReviewStatus = 'pending' | 'accepted' | 'rejected';

export type Decision = 'accepted' | 'rejected';

/** One sentence id as [page title, line number]. */
export type SentencePair = [string, number];

export interface ReviewItem {
  instance_id: string;
  claim: string;
  source_claim: string;
  rule_id: string;
  class: string;
  label: Label;
  status: ReviewStatus;
  rejection_reason: string | null;
  in_queue: boolean;
  /** Gold evidence: alternative combinations of sentence ids. */
  evidence: SentencePair[][];
  /** Sentence text keyed "page:line"; present with include_evidence=true. */
  evidence_text?: Record<string, string>;
}

export interface ItemsPage {
  items: ReviewItem[];
  next_cursor: string | null;
  total: number;
}

export interface Counts {
  pending: number;
  accepted: number;
  rejected: number;
  total: number;
}

export interface Progress extends Counts {
  reviewed: number;
  r_accept: number | null;
  projected_r_accept: number;
  queue_size: number;
  r_accept_is_estimate: boolean;
}

export interface DecisionResponse {
  item: ReviewItem;
  counts: Counts;
}

export interface SystemPreview {
  system_id: string;
  fever_score: number | null;
}

export interface LeaderboardPreview {
  breaker_id: string;
  r_accept: number | null;
  projected_r_accept: number;
  reviewed: number;
  pending: number;
  potency: number | null;
  adjusted_potency: number | null;
  systems: SystemPreview[];
}

export interface ItemFilters {
  status?: ReviewStatus;
  class?: string;
  rule_id?: string;
  queue?: boolean;
  include_evidence?: boolean;
}
