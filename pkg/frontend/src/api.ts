import type { BacklinksView, RowView, SearchResponse, StatsView } from "./types.js";

export type FetchLike = (url: string) => Promise<Response>;

// The UI is served from /ui, the API from the same origin's root.
const defaultFetch: FetchLike = (url) => fetch(url);

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(doFetch: FetchLike, url: string): Promise<T> {
  const response = await doFetch(url);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private doFetch: FetchLike = defaultFetch) {}

  search(query: string, seed = 0): Promise<SearchResponse> {
    return getJson(this.doFetch, `/search?q=${encodeURIComponent(query)}&seed=${seed}`);
  }

  row(link: string): Promise<RowView> {
    return getJson(this.doFetch, link);
  }

  backlinks(link: string): Promise<BacklinksView> {
    return getJson(this.doFetch, link);
  }

  stats(): Promise<StatsView> {
    return getJson(this.doFetch, "/stats");
  }
}
