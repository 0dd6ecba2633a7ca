/** DOM rendering and the keyboard-first review flow.
 *
 * Keys: a = accept, r = reject (opens the reason box; Enter saves,
 * Escape cancels), s = skip, e = toggle evidence, t = toggle triage view.
 */

import { ApiError, ReviewApi } from './api.js';
import { ReviewSession } from './session.js';
import { buildTriage, hasDecisions } from './triage.js';
import type { ReviewItem } from './types.js';

function pct(value: number | null | undefined): string {
  return value === null || value === undefined
    ? '—'
    : `${(value * 100).toFixed(2)}%`;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

type View = 'review' | 'triage';

export class App {
  private session: ReviewSession | null = null;
  private view: View = 'review';
  private showEvidence = false;
  private rejecting = false;
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ReviewApi,
  ) {}

  async start(): Promise<void> {
    this.root.textContent = 'Loading queue…';
    try {
      this.session = await ReviewSession.open(this.api);
    } catch (err) {
      this.renderBanner(err);
      return;
    }
    document.addEventListener('keydown', (event) => {
      void this.onKey(event);
    });
    await this.render();
  }

  private renderBanner(err: unknown): void {
    const message = err instanceof ApiError ? err.message : String(err);
    this.root.replaceChildren();
    const banner = el('div', 'banner');
    banner.append(
      el('p', 'banner-title', 'Review service unreachable'),
      el('p', 'banner-detail', message),
    );
    const retry = el('button', 'retry', 'Retry');
    retry.addEventListener('click', () => {
      void this.start();
    });
    banner.append(retry);
    this.root.append(banner);
  }

  private async onKey(event: KeyboardEvent): Promise<void> {
    if (this.busy || this.session === null) {
      return;
    }
    if (this.rejecting) {
      return; // the reason box handles its own keys
    }
    switch (event.key) {
      case 'a':
        await this.guard(() => this.session!.accept());
        break;
      case 'r':
        this.rejecting = true;
        await this.render();
        break;
      case 's':
        this.session.skip();
        await this.render();
        break;
      case 'e':
        this.showEvidence = !this.showEvidence;
        await this.render();
        break;
      case 't':
        this.view = this.view === 'review' ? 'triage' : 'review';
        await this.render();
        break;
    }
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    this.busy = true;
    try {
      await action();
      this.rejecting = false;
      this.showEvidence = false;
      await this.render();
    } catch (err) {
      this.renderBanner(err);
    } finally {
      this.busy = false;
    }
  }

  private async render(): Promise<void> {
    if (this.session === null) {
      return;
    }
    this.root.replaceChildren();
    this.root.append(this.renderHeader());
    if (this.view === 'triage') {
      this.root.append(this.renderTriage());
      return;
    }
    const vm = this.session.viewModel();
    if (vm.phase === 'done') {
      this.root.append(this.renderSummary());
      return;
    }
    this.root.append(await this.renderItem(vm.current!, vm.position, vm.total));
  }

  private renderHeader(): HTMLElement {
    const session = this.session!;
    const progress = session.progress;
    const preview = session.preview;
    const header = el('header', 'stats');
    const stats: Array<[string, string]> = [
      ['reviewed', `${progress.reviewed} / ${progress.total}`],
      [
        progress.r_accept_is_estimate ? 'r_accept (queue estimate)' : 'r_accept',
        pct(progress.r_accept),
      ],
      ['projected r_accept', pct(progress.projected_r_accept)],
    ];
    if (preview !== null && preview.potency !== null) {
      stats.push(['potency', pct(preview.potency)]);
      stats.push(['adjusted potency', pct(preview.adjusted_potency)]);
    }
    for (const [name, value] of stats) {
      const cell = el('div', 'stat');
      cell.append(el('span', 'stat-name', name), el('span', 'stat-value', value));
      header.append(cell);
    }
    const hint = el('div', 'hint');
    hint.textContent =
      this.view === 'review'
        ? '[a] accept · [r] reject · [s] skip · [e] evidence · [t] triage'
        : '[t] back to review';
    header.append(hint);
    return header;
  }

  private async renderItem(
    item: ReviewItem,
    position: number,
    total: number,
  ): Promise<HTMLElement> {
    const card = el('section', 'card');
    card.append(el('div', 'position', `${position} / ${total}`));

    const claim = el('div', 'claim');
    claim.append(
      el('span', `label label-${item.label.toLowerCase()}`, item.label),
      el('p', 'claim-text', item.claim),
    );
    card.append(claim);

    const source = el('div', 'source');
    source.append(
      el('span', 'field-name', 'source claim'),
      el('p', 'source-text', item.source_claim),
    );
    card.append(source);

    const meta = el('div', 'meta');
    meta.append(
      el('span', 'rule-id', item.rule_id),
      el('span', 'class-tag', item.class),
    );
    card.append(meta);

    if (this.showEvidence) {
      card.append(await this.renderEvidence(item));
    }

    card.append(this.rejecting ? this.renderReasonBox() : this.renderControls());
    return card;
  }

  private renderControls(): HTMLElement {
    const controls = el('div', 'controls');
    const accept = el('button', 'accept', 'Accept (a)');
    accept.addEventListener('click', () => {
      void this.guard(() => this.session!.accept());
    });
    const reject = el('button', 'reject', 'Reject (r)');
    reject.addEventListener('click', () => {
      this.rejecting = true;
      void this.render();
    });
    const skip = el('button', 'skip', 'Skip (s)');
    skip.addEventListener('click', () => {
      this.session!.skip();
      void this.render();
    });
    controls.append(accept, reject, skip);
    return controls;
  }

  private renderReasonBox(): HTMLElement {
    const box = el('div', 'reason-box');
    const input = el('input', 'reason-input');
    input.placeholder = 'Reason (optional) — Enter saves, Escape cancels';
    input.addEventListener('keydown', (event) => {
      event.stopPropagation();
      if (event.key === 'Enter') {
        const reason = input.value.trim();
        void this.guard(() =>
          this.session!.reject(reason.length > 0 ? reason : undefined),
        );
      } else if (event.key === 'Escape') {
        this.rejecting = false;
        void this.render();
      }
    });
    box.append(input);
    queueMicrotask(() => input.focus());
    return box;
  }

  private async renderEvidence(item: ReviewItem): Promise<HTMLElement> {
    const panel = el('div', 'evidence');
    panel.append(el('span', 'field-name', 'gold evidence'));
    let text: Record<string, string> = {};
    try {
      text = await this.session!.evidenceFor(item.instance_id);
    } catch {
      // sentence text is optional; ids alone still render
    }
    for (const combo of item.evidence) {
      const list = el('ul', 'combo');
      for (const [page, line] of combo) {
        const key = `${page}:${line}`;
        const sentence = text[key];
        list.append(
          el('li', 'sentence', sentence ? `${key} — ${sentence}` : key),
        );
      }
      panel.append(list);
    }
    if (item.evidence.length === 0) {
      panel.append(el('p', 'no-evidence', 'No gold evidence (NEI).'));
    }
    return panel;
  }

  private renderSummary(): HTMLElement {
    const progress = this.session!.progress;
    const summary = el('section', 'summary');
    summary.append(
      el('h2', undefined, 'Queue complete'),
      el(
        'p',
        'summary-line',
        `${progress.accepted} accepted, ${progress.rejected} rejected — ` +
          `final r_accept ${pct(progress.r_accept)}`,
      ),
    );
    return summary;
  }

  private renderTriage(): HTMLElement {
    const rows = buildTriage(this.session!.allItems());
    const section = el('section', 'triage');
    section.append(el('h2', undefined, 'Rule triage'));
    if (!hasDecisions(rows)) {
      section.append(
        el('p', 'empty-state', 'No decisions yet — nothing to triage.'),
      );
      return section;
    }
    const table = el('table', 'triage-table');
    const head = el('tr');
    for (const name of ['rule', 'rejection rate', 'rejected', 'reviewed', 'items', 'reasons']) {
      head.append(el('th', undefined, name));
    }
    table.append(head);
    for (const row of rows) {
      const tr = el('tr');
      tr.append(
        el('td', 'rule-id', row.ruleId),
        el('td', undefined, pct(row.rejectionRate)),
        el('td', undefined, String(row.rejected)),
        el('td', undefined, String(row.reviewed)),
        el('td', undefined, String(row.items)),
        el('td', 'reasons', row.reasons.join('; ')),
      );
      table.append(tr);
    }
    section.append(table);
    return section;
  }
}
