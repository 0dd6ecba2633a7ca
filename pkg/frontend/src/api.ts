/** Thin fetch client for the review service. All state lives server-side;
 * the client only ever reads it back. */

import type {
  Decision,
  DecisionResponse,
  ItemFilters,
  ItemsPage,
  LeaderboardPreview,
  Progress,
  ReviewItem,
} from './types.js';

const PAGE_LIMIT = 500;

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = 'ApiError';
  }
}

async function requireOk(response: Response): Promise<Response> {
  if (response.ok) {
    return response;
  }
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) {
      detail = body.detail;
    }
  } catch {
    // keep the status text
  }
  throw new ApiError(`${response.status}: ${detail}`, response.status);
}

export class ReviewApi {
  constructor(readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path);
    } catch (err) {
      throw new ApiError(`service unreachable (${String(err)})`);
    }
    return (await requireOk(response)).json() as Promise<T>;
  }

  async itemsPage(filters: ItemFilters, cursor: string | null): Promise<ItemsPage> {
    const params = new URLSearchParams();
    params.set('limit', String(PAGE_LIMIT));
    if (filters.status) params.set('status', filters.status);
    if (filters.class) params.set('class', filters.class);
    if (filters.rule_id) params.set('rule_id', filters.rule_id);
    if (filters.queue) params.set('queue', 'true');
    if (filters.include_evidence) params.set('include_evidence', 'true');
    if (cursor !== null) params.set('cursor', cursor);
    return this.get<ItemsPage>(`/items?${params.toString()}`);
  }

  /** Every matching item, walking cursor pagination to the end. */
  async listItems(filters: ItemFilters = {}): Promise<ReviewItem[]> {
    const items: ReviewItem[] = [];
    let cursor: string | null = null;
    for (;;) {
      const page: ItemsPage = await this.itemsPage(filters, cursor);
      items.push(...page.items);
      if (page.next_cursor === null) {
        return items;
      }
      cursor = page.next_cursor;
    }
  }

  /** Instance ids contain '#', so the path segment must be percent-encoded. */
  async decide(
    instanceId: string,
    decision: Decision,
    reason?: string,
  ): Promise<DecisionResponse> {
    const body: { decision: Decision; reason?: string } = { decision };
    if (decision === 'rejected' && reason) {
      body.reason = reason;
    }
    let response: Response;
    try {
      response = await fetch(
        `${this.baseUrl}/items/${encodeURIComponent(instanceId)}/decision`,
        {
          method: 'POST',
          headers: { 'Content-Type': 'application/json' },
          body: JSON.stringify(body),
        },
      );
    } catch (err) {
      throw new ApiError(`service unreachable (${String(err)})`);
    }
    return (await requireOk(response)).json() as Promise<DecisionResponse>;
  }

  async progress(): Promise<Progress> {
    return this.get<Progress>('/progress');
  }

  async leaderboardPreview(): Promise<LeaderboardPreview> {
    return this.get<LeaderboardPreview>('/leaderboard/preview');
  }
}
