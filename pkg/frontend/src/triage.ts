/** Per-rule acceptance breakdown: surfaces systematic rule defects by
 * sorting rules on rejection rate. */

import type { ReviewItem } from './types.js';

export interface TriageRow {
  ruleId: string;
  items: number;
  reviewed: number;
  accepted: number;
  rejected: number;
  /** rejected / reviewed; 0 while a rule has no decisions. */
  rejectionRate: number;
  /** Rejection reasons seen for this rule, in first-seen order. */
  reasons: string[];
}

/** Rows sorted by rejection rate descending (ties: more rejections first,
 * then rule id ascending, so an evenly-spread table stays id-ordered). */
export function buildTriage(items: ReviewItem[]): TriageRow[] {
  const byRule = new Map<string, TriageRow>();
  for (const item of items) {
    let row = byRule.get(item.rule_id);
    if (row === undefined) {
      row = {
        ruleId: item.rule_id,
        items: 0,
        reviewed: 0,
        accepted: 0,
        rejected: 0,
        rejectionRate: 0,
        reasons: [],
      };
      byRule.set(item.rule_id, row);
    }
    row.items += 1;
    if (item.status === 'accepted') {
      row.reviewed += 1;
      row.accepted += 1;
    } else if (item.status === 'rejected') {
      row.reviewed += 1;
      row.rejected += 1;
      if (item.rejection_reason && !row.reasons.includes(item.rejection_reason)) {
        row.reasons.push(item.rejection_reason);
      }
    }
  }
  const rows = [...byRule.values()];
  for (const row of rows) {
    row.rejectionRate = row.reviewed > 0 ? row.rejected / row.reviewed : 0;
  }
  rows.sort(
    (a, b) =>
      b.rejectionRate - a.rejectionRate ||
      b.rejected - a.rejected ||
      (a.ruleId < b.ruleId ? -1 : a.ruleId > b.ruleId ? 1 : 0),
  );
  return rows;
}

/** True once any decision exists; the dashboard shows an empty state until
 * then. */
export function hasDecisions(rows: TriageRow[]): boolean {
  return rows.some((row) => row.reviewed > 0);
}
