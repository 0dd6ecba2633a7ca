/** Sequential review session over the service's queue.
 *
 * The session is the single code path for decisions: the keyboard UI and
 * scripted runs both call accept/reject/skip here. Counts shown to the
 * reviewer are never computed locally — after every decision the session
 * re-reads progress() (and the leaderboard preview, when enabled) so the
 * rendered numbers always match the service's view.
 */

import { ReviewApi } from './api.js';
import type {
  LeaderboardPreview,
  Progress,
  ReviewItem,
} from './types.js';

export interface SessionFilters {
  class?: string;
  rule_id?: string;
}

export interface ViewModel {
  phase: 'reviewing' | 'done';
  current: ReviewItem | null;
  /** 1-based position of the current item within the queue. */
  position: number;
  total: number;
  progress: Progress;
  preview: LeaderboardPreview | null;
}

export class ReviewSession {
  private items: ReviewItem[];
  private index: number;
  private progressSnapshot: Progress;
  private previewSnapshot: LeaderboardPreview | null = null;
  private evidenceText: Map<string, Record<string, string>> | null = null;

  private constructor(
    private readonly api: ReviewApi,
    items: ReviewItem[],
    progress: Progress,
    private readonly withPreview: boolean,
  ) {
    this.items = items;
    this.progressSnapshot = progress;
    this.index = this.firstPendingFrom(0);
  }

  /** Load the review queue; a reload lands back on the first pending item. */
  static async open(
    api: ReviewApi,
    filters: SessionFilters = {},
    withPreview = true,
  ): Promise<ReviewSession> {
    const items = await api.listItems({ ...filters, queue: true });
    const progress = await api.progress();
    const session = new ReviewSession(api, items, progress, withPreview);
    if (withPreview) {
      session.previewSnapshot = await api.leaderboardPreview();
    }
    return session;
  }

  private firstPendingFrom(start: number): number {
    for (let i = 0; i < this.items.length; i++) {
      const pos = (start + i) % this.items.length;
      if (this.items[pos]?.status === 'pending') {
        return pos;
      }
    }
    return -1;
  }

  get current(): ReviewItem | null {
    return this.index >= 0 ? (this.items[this.index] ?? null) : null;
  }

  get isComplete(): boolean {
    return this.index < 0;
  }

  get progress(): Progress {
    return this.progressSnapshot;
  }

  get preview(): LeaderboardPreview | null {
    return this.previewSnapshot;
  }

  viewModel(): ViewModel {
    return {
      phase: this.isComplete ? 'done' : 'reviewing',
      current: this.current,
      position: this.index >= 0 ? this.index + 1 : 0,
      total: this.items.length,
      progress: this.progressSnapshot,
      preview: this.previewSnapshot,
    };
  }

  async accept(): Promise<void> {
    await this.decideCurrent('accepted');
  }

  async reject(reason?: string): Promise<void> {
    await this.decideCurrent('rejected', reason);
  }

  /** Move on without deciding; the item stays pending and comes around again. */
  skip(): void {
    if (this.index < 0) {
      return;
    }
    this.index = this.firstPendingFrom(this.index + 1);
  }

  private async decideCurrent(
    decision: 'accepted' | 'rejected',
    reason?: string,
  ): Promise<void> {
    const item = this.current;
    if (item === null) {
      return;
    }
    // Optimistic: the response's item replaces ours; the authoritative
    // counts come from progress(), not from local arithmetic.
    const response = await this.api.decide(item.instance_id, decision, reason);
    this.items[this.index] = response.item;
    await this.refresh();
    this.index = this.firstPendingFrom(this.index + 1);
  }

  /** Re-read server state (used after decisions and by the retry banner). */
  async refresh(): Promise<void> {
    this.progressSnapshot = await this.api.progress();
    if (this.withPreview) {
      this.previewSnapshot = await this.api.leaderboardPreview();
    }
  }

  /** All queue items in their current state (feeds the triage table). */
  allItems(): ReviewItem[] {
    return [...this.items];
  }

  /** Evidence sentence text for one item, fetched on demand and cached. */
  async evidenceFor(instanceId: string): Promise<Record<string, string>> {
    if (this.evidenceText === null) {
      const withText = await this.api.listItems({
        queue: true,
        include_evidence: true,
      });
      this.evidenceText = new Map(
        withText.map((item) => [item.instance_id, item.evidence_text ?? {}]),
      );
    }
    return this.evidenceText.get(instanceId) ?? {};
  }
}
