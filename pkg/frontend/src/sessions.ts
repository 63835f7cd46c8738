// Session browser: renders a user's exploration trail as a graph of
// query nodes joined by labeled edit-script edges.

import { CqmsClient, SessionView } from "./api.js";

export function renderSessionGraph(container: HTMLElement, session: SessionView): void {
  const box = document.createElement("section");
  box.className = "session";
  box.dataset.sessionId = session.session_id;

  const head = document.createElement("h3");
  head.textContent = `session ${session.session_id}`;
  box.appendChild(head);

  const bySource = new Map<string, typeof session.edges>();
  for (const edge of session.edges) {
    const peers = bySource.get(edge.from) ?? [];
    peers.push(edge);
    bySource.set(edge.from, peers);
  }

  const ordered = [...session.nodes].sort((a, b) => a.submitted_at - b.submitted_at);
  for (const node of ordered) {
    const el = document.createElement("div");
    el.className = "qnode";
    el.dataset.node = "";
    el.dataset.qid = node.qid;

    const tag = document.createElement("span");
    tag.className = "qid";
    tag.textContent = "#" + node.qid;
    el.appendChild(tag);

    const preview = document.createElement("code");
    preview.className = "preview";
    preview.textContent = node.preview;
    preview.title = node.raw_text;
    el.appendChild(preview);

    box.appendChild(el);

    for (const edge of bySource.get(node.qid) ?? []) {
      const arrow = document.createElement("div");
      arrow.className = "qedge " + edge.type;
      arrow.dataset.edge = "";
      arrow.dataset.from = edge.from;
      arrow.dataset.to = edge.to;

      const kind = document.createElement("span");
      kind.className = "edge-type";
      kind.textContent = `${edge.type} → #${edge.to}`;
      arrow.appendChild(kind);

      const labels = document.createElement("ul");
      labels.className = "edge-labels";
      for (const label of edge.labels) {
        const li = document.createElement("li");
        li.textContent = label;
        labels.appendChild(li);
      }
      arrow.appendChild(labels);

      box.appendChild(arrow);
    }
  }

  container.appendChild(box);
}

export class SessionBrowser {
  constructor(
    private readonly userInput: HTMLInputElement,
    private readonly container: HTMLElement,
    private client: CqmsClient,
  ) {}

  setClient(client: CqmsClient): void {
    this.client = client;
  }

  async load(): Promise<void> {
    const user = this.userInput.value.trim();
    this.container.textContent = "";
    if (!user) return;
    try {
      const resp = await this.client.sessions(user);
      if (!resp.sessions.length) {
        this.container.textContent = `no sessions for ${user}`;
        return;
      }
      for (const session of resp.sessions) {
        renderSessionGraph(this.container, session);
      }
    } catch (err) {
      const msg = document.createElement("p");
      msg.className = "error";
      msg.textContent = err instanceof Error ? err.message : String(err);
      this.container.appendChild(msg);
    }
  }
}
