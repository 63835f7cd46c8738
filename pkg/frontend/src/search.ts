// Log search view: keyword, partial-query, or raw meta-query JSON.

import { CqmsClient, SearchResult } from "./api.js";

export type SearchMode = "keyword" | "partial" | "json";

export class SearchView {
  constructor(
    private readonly modeSelect: HTMLSelectElement,
    private readonly queryInput: HTMLTextAreaElement,
    private readonly results: HTMLElement,
    private client: CqmsClient,
  ) {}

  setClient(client: CqmsClient): void {
    this.client = client;
  }

  async run(): Promise<void> {
    const mode = this.modeSelect.value as SearchMode;
    const text = this.queryInput.value.trim();
    this.results.textContent = "";
    if (!text) return;
    try {
      const resp =
        mode === "keyword"
          ? await this.client.searchKeyword(text.split(/\s+/))
          : mode === "partial"
            ? await this.client.searchPartial(text)
            : await this.client.search(this.parseBody(text));
      this.render(resp.results);
    } catch (err) {
      const msg = document.createElement("p");
      msg.className = "error";
      msg.textContent = err instanceof Error ? err.message : String(err);
      this.results.appendChild(msg);
    }
  }

  private parseBody(text: string): Record<string, unknown> {
    const parsed: unknown = JSON.parse(text);
    if (!parsed || typeof parsed !== "object" || Array.isArray(parsed)) {
      throw new Error("meta-query body must be a JSON object");
    }
    return parsed as Record<string, unknown>;
  }

  private render(rows: SearchResult[]): void {
    if (!rows.length) {
      this.results.textContent = "no matches";
      return;
    }
    const table = document.createElement("table");
    table.className = "results";
    const head = document.createElement("tr");
    for (const col of ["qid", "query", "certainty", "score", "owner"]) {
      const th = document.createElement("th");
      th.textContent = col;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of rows) {
      const tr = document.createElement("tr");
      tr.dataset.result = "";
      tr.dataset.qid = row.qid;
      tr.dataset.certainty = row.certainty;

      const qid = document.createElement("td");
      qid.textContent = row.qid;
      tr.appendChild(qid);

      const preview = document.createElement("td");
      const code = document.createElement("code");
      code.textContent = row.preview;
      preview.appendChild(code);
      tr.appendChild(preview);

      const certainty = document.createElement("td");
      const badge = document.createElement("span");
      badge.className = "badge " + row.certainty;
      badge.textContent = row.certainty;
      certainty.appendChild(badge);
      tr.appendChild(certainty);

      const score = document.createElement("td");
      score.textContent = row.score.toFixed(3);
      tr.appendChild(score);

      const owner = document.createElement("td");
      owner.textContent = row.owner;
      tr.appendChild(owner);

      table.appendChild(tr);
    }
    this.results.appendChild(table);
  }
}
