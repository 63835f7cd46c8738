// Compose view: a query editor wired to the suggestion endpoint.
//
// Two timing hazards are handled here. Keystrokes are debounced so a
// burst of typing issues one request, and every request is tagged with
// a revision taken at send time; a response only touches the DOM if its
// revision is still the latest. Without the tag, a slow response to an
// old prefix can arrive after the fast response to the current one and
// overwrite it with stale completions.

import { Completion, CqmsClient } from "./api.js";

export interface ComposeOptions {
  debounceMs?: number;
  limit?: number;
}

export class ComposeView {
  private revision = 0;
  private timer: ReturnType<typeof setTimeout> | undefined;
  private readonly debounceMs: number;
  private readonly limit: number;

  // observable by tests; the view itself only appends
  requestsSent = 0;

  constructor(
    private readonly input: HTMLTextAreaElement,
    private readonly list: HTMLElement,
    private client: CqmsClient,
    opts: ComposeOptions = {},
  ) {
    this.debounceMs = opts.debounceMs ?? 150;
    this.limit = opts.limit ?? 8;
    this.input.addEventListener("input", () => this.schedule());
    this.list.addEventListener("click", (ev) => this.insert(ev));
  }

  setClient(client: CqmsClient): void {
    this.client = client;
  }

  private schedule(): void {
    if (this.timer !== undefined) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = undefined;
      void this.refresh();
    }, this.debounceMs);
  }

  async refresh(): Promise<void> {
    const text = this.input.value;
    const rev = ++this.revision;
    if (!text.trim()) {
      this.render([]);
      return;
    }
    this.requestsSent += 1;
    let completions: Completion[];
    try {
      const resp = await this.client.suggest(text, undefined, this.limit);
      completions = resp.completions;
    } catch {
      if (rev === this.revision) this.render([]);
      return;
    }
    if (rev !== this.revision) return; // a newer keystroke owns the list
    this.render(completions);
  }

  private render(completions: Completion[]): void {
    this.list.textContent = "";
    for (const c of completions) {
      const item = document.createElement("li");
      item.dataset.name = c.name;
      item.dataset.kind = c.kind;
      item.dataset.tier = String(c.tier);
      item.className = "completion tier-" + c.tier;

      const name = document.createElement("span");
      name.className = "completion-name";
      name.textContent = c.name;
      item.appendChild(name);

      const meta = document.createElement("span");
      meta.className = "completion-meta";
      meta.textContent = `${c.kind} · ${c.score.toFixed(2)}`;
      item.appendChild(meta);

      this.list.appendChild(item);
    }
  }

  private insert(ev: Event): void {
    const target = ev.target instanceof Element ? ev.target.closest("li") : null;
    if (!target || !target.dataset.name) return;
    const text = this.input.value;
    // continue the current token instead of duplicating what is typed
    const tail = text.match(/[A-Za-z_][A-Za-z0-9_]*$/);
    const base = tail ? text.slice(0, text.length - tail[0].length) : text;
    this.input.value = base + target.dataset.name + " ";
    this.input.focus();
    this.schedule();
  }
}
