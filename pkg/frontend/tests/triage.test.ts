import { describe, expect, it } from 'vitest';

import { buildTriage, hasDecisions } from '../src/triage.js';
import type { ReviewItem, ReviewStatus } from '../src/types.js';

function item(
  id: string,
  ruleId: string,
  status: ReviewStatus,
  reason?: string,
): ReviewItem {
  return {
    instance_id: id,
    claim: `claim ${id}`,
    source_claim: `source ${id}`,
    rule_id: ruleId,
    class: 'preserving',
    label: 'SUPPORTED',
    status,
    rejection_reason: status === 'rejected' ? (reason ?? null) : null,
    in_queue: true,
    evidence: [[['Page', 0]]],
  };
}

describe('buildTriage', () => {
  it('ranks a rule with 21 of 30 rejections first', () => {
    // 10 rules x 30 items; rule r07 collects 21 rejections, nine other
    // rules one rejection each (30 total), everything else accepted.
    const items: ReviewItem[] = [];
    const singles = new Set([0, 11, 22, 33, 44, 55, 66, 88, 99]);
    let defectRejections = 0;
    for (let i = 0; i < 300; i++) {
      const ruleId = `r${String(i % 10).padStart(2, '0')}`;
      let status: ReviewStatus = 'accepted';
      if (ruleId === 'r07' && defectRejections < 21) {
        status = 'rejected';
        defectRejections += 1;
      } else if (singles.has(i)) {
        status = 'rejected';
      }
      items.push(item(`s${String(i).padStart(3, '0')}#${ruleId}`, ruleId, status));
    }
    expect(items.filter((x) => x.status === 'rejected')).toHaveLength(30);

    const rows = buildTriage(items);
    expect(rows).toHaveLength(10);
    expect(rows[0]?.ruleId).toBe('r07');
    expect(rows[0]?.rejected).toBe(21);
    expect(rows[0]?.items).toBe(30);
    expect(rows[0]?.rejectionRate).toBeCloseTo(21 / 30, 12);
    // every other rule sits at 1/30
    for (const row of rows.slice(1)) {
      expect(row.rejectionRate).toBeCloseTo(1 / 30, 12);
    }
  });

  it('puts the only rule with rejections first even at low volume', () => {
    const items = [
      item('a#r1', 'r1', 'accepted'),
      item('b#r1', 'r1', 'accepted'),
      item('c#r2', 'r2', 'rejected', 'ungrammatical'),
      item('d#r2', 'r2', 'accepted'),
      item('e#r3', 'r3', 'accepted'),
    ];
    const rows = buildTriage(items);
    expect(rows[0]?.ruleId).toBe('r2');
    expect(rows[0]?.rejectionRate).toBe(0.5);
  });

  it('breaks rate ties by rejection count, then rule id', () => {
    const items = [
      // r1: 2/4 rejected, r2: 1/2 rejected — same rate, r1 has more
      item('a#r1', 'r1', 'rejected'),
      item('b#r1', 'r1', 'rejected'),
      item('c#r1', 'r1', 'accepted'),
      item('d#r1', 'r1', 'accepted'),
      item('e#r2', 'r2', 'rejected'),
      item('f#r2', 'r2', 'accepted'),
      // r3/r4: no decisions — equal, so id order
      item('g#r4', 'r4', 'pending'),
      item('h#r3', 'r3', 'pending'),
    ];
    const rows = buildTriage(items);
    expect(rows.map((r) => r.ruleId)).toEqual(['r1', 'r2', 'r3', 'r4']);
  });

  it('counts pending items toward items but not the rate', () => {
    const items = [
      item('a#r1', 'r1', 'rejected'),
      item('b#r1', 'r1', 'pending'),
      item('c#r1', 'r1', 'pending'),
    ];
    const rows = buildTriage(items);
    expect(rows[0]?.items).toBe(3);
    expect(rows[0]?.reviewed).toBe(1);
    expect(rows[0]?.rejectionRate).toBe(1);
  });

  it('collects distinct rejection reasons in first-seen order', () => {
    const items = [
      item('a#r1', 'r1', 'rejected', 'ungrammatical'),
      item('b#r1', 'r1', 'rejected', 'label flipped'),
      item('c#r1', 'r1', 'rejected', 'ungrammatical'),
      item('d#r1', 'r1', 'rejected'),
    ];
    const rows = buildTriage(items);
    expect(rows[0]?.reasons).toEqual(['ungrammatical', 'label flipped']);
  });
});

describe('hasDecisions', () => {
  it('is false for an all-pending queue', () => {
    const rows = buildTriage([
      item('a#r1', 'r1', 'pending'),
      item('b#r2', 'r2', 'pending'),
    ]);
    expect(hasDecisions(rows)).toBe(false);
  });

  it('is true once any item is decided', () => {
    const rows = buildTriage([
      item('a#r1', 'r1', 'pending'),
      item('b#r2', 'r2', 'accepted'),
    ]);
    expect(hasDecisions(rows)).toBe(true);
  });

  it('is false for no items at all', () => {
    expect(hasDecisions(buildTriage([]))).toBe(false);
  });
});
