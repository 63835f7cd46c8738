// Typed client for the cqms HTTP service. Every call goes through one
// request helper so auth headers and error mapping stay uniform.

export interface Completion {
  kind: "relation" | "attribute";
  name: string;
  score: number;
  tier: number;
}

export interface SuggestResponse {
  completions: Completion[];
}

export interface SearchResult {
  qid: string;
  score: number;
  certainty: "definite" | "possible";
  preview: string;
  owner: string;
  validity: string;
  cluster?: string;
}

export interface SearchResponse {
  results: SearchResult[];
}

export interface SessionNode {
  qid: string;
  preview: string;
  raw_text: string;
  submitted_at: number;
}

export interface SessionEdge {
  from: string;
  to: string;
  type: string;
  labels: string[];
}

export interface SessionView {
  session_id: string;
  nodes: SessionNode[];
  edges: SessionEdge[];
}

export interface SessionsResponse {
  user: string;
  sessions: SessionView[];
}

export interface Recommendation {
  qid: string;
  score: number;
  components: Record<string, number>;
  preview: string;
}

export interface RecommendResponse {
  recommendations: Recommendation[];
}

export interface QueryView {
  qid: string;
  raw_text: string;
  owner: string;
  visibility: string;
  validity: string;
  submitted_at: number;
  annotations: { author: string; text: string; span: [number, number] | null }[];
  [extra: string]: unknown;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

// injectable so tests can substitute a scripted transport
export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl: string;
  principal: string;
  groups?: string[];
  fetchFn?: FetchLike;
}

export class CqmsClient {
  private readonly base: string;
  private readonly principal: string;
  private readonly groups: string[];
  private readonly fetchFn: FetchLike;

  constructor(opts: ClientOptions) {
    this.base = opts.baseUrl.replace(/\/+$/, "");
    this.principal = opts.principal;
    this.groups = opts.groups ?? [];
    this.fetchFn = opts.fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {
      "X-Principal": this.principal,
      "X-Groups": this.groups.join(","),
    };
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.base + path, init);
    const text = await res.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!res.ok) {
      const detail =
        payload && typeof payload === "object" && "error" in payload
          ? String((payload as { error: unknown }).error)
          : `request failed with status ${res.status}`;
      throw new ApiError(res.status, detail);
    }
    return payload as T;
  }

  suggest(partial: string, kind?: "relation" | "attribute", limit = 8): Promise<SuggestResponse> {
    const params = new URLSearchParams({ partial, limit: String(limit) });
    if (kind) params.set("kind", kind);
    return this.request<SuggestResponse>("GET", `/suggest?${params.toString()}`);
  }

  searchPartial(partial: string, limit = 20): Promise<SearchResponse> {
    return this.request<SearchResponse>("POST", "/search", { partial, limit });
  }

  search(body: Record<string, unknown>): Promise<SearchResponse> {
    return this.request<SearchResponse>("POST", "/search", body);
  }

  searchKeyword(terms: string[], limit = 20): Promise<SearchResponse> {
    return this.search({ type: "keyword", terms, limit });
  }

  sessions(user: string): Promise<SessionsResponse> {
    return this.request<SessionsResponse>("GET", `/sessions/${encodeURIComponent(user)}`);
  }

  recommend(recent: string[], k = 5): Promise<RecommendResponse> {
    const params = new URLSearchParams({ recent: recent.join(","), k: String(k) });
    return this.request<RecommendResponse>("GET", `/recommend?${params.toString()}`);
  }

  getQuery(qid: string): Promise<QueryView> {
    return this.request<QueryView>("GET", `/queries/${encodeURIComponent(qid)}`);
  }

  submit(record: Record<string, unknown>): Promise<{ qid: string }> {
    return this.request<{ qid: string }>("POST", "/queries", record);
  }

  annotate(qid: string, text: string, span?: [number, number]): Promise<{ ok: boolean }> {
    const body: Record<string, unknown> = { qid, text };
    if (span) body.span = span;
    return this.request<{ ok: boolean }>("POST", "/annotations", body);
  }

  report(): Promise<Record<string, unknown>> {
    return this.request<Record<string, unknown>>("GET", "/admin/report");
  }
}
