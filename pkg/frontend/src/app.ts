// Page bootstrap: builds one client from the connection form and wires
// the three views to it. Changing any connection field rebuilds the
// client in place.

import { CqmsClient } from "./api.js";
import { ComposeView } from "./editor.js";
import { SessionBrowser } from "./sessions.js";
import { SearchView } from "./search.js";

function need<T extends Element>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing page element #${id}`);
  return el as unknown as T;
}

function buildClient(): CqmsClient {
  const base = need<HTMLInputElement>("conn-base").value || "http://127.0.0.1:8080";
  const principal = need<HTMLInputElement>("conn-principal").value || "guest";
  const groups = need<HTMLInputElement>("conn-groups")
    .value.split(",")
    .map((g) => g.trim())
    .filter(Boolean);
  return new CqmsClient({ baseUrl: base, principal, groups });
}

export function boot(): void {
  let client = buildClient();

  // compose
  const compose = new ComposeView(
    need<HTMLTextAreaElement>("compose-input"),
    need<HTMLElement>("compose-completions"),
    client,
  );

  // sessions
  const browser = new SessionBrowser(
    need<HTMLInputElement>("session-user"),
    need<HTMLElement>("session-graph"),
    client,
  );
  need<HTMLButtonElement>("session-load").addEventListener("click", () => void browser.load());

  // search
  const search = new SearchView(
    need<HTMLSelectElement>("search-mode"),
    need<HTMLTextAreaElement>("search-query"),
    need<HTMLElement>("search-results"),
    client,
  );
  need<HTMLButtonElement>("search-run").addEventListener("click", () => void search.run());

  for (const id of ["conn-base", "conn-principal", "conn-groups"]) {
    need<HTMLInputElement>(id).addEventListener("change", () => {
      client = buildClient();
      compose.setClient(client);
      browser.setClient(client);
      search.setClient(client);
    });
  }

  // tabs
  const tabs = Array.from(document.querySelectorAll<HTMLButtonElement>("[data-tab]"));
  for (const tab of tabs) {
    tab.addEventListener("click", () => {
      for (const other of tabs) other.classList.toggle("active", other === tab);
      for (const panel of document.querySelectorAll<HTMLElement>("[data-panel]")) {
        panel.hidden = panel.dataset.panel !== tab.dataset.tab;
      }
    });
  }
}

if (typeof document !== "undefined" && document.getElementById("conn-base")) {
  boot();
}
