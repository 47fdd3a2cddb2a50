import type { ApiClient } from "./api.js";
import type { SearchResponse } from "./types.js";

// Serializes search requests: when queries overlap, only the most recent
// one is allowed to render, no matter the order responses arrive in.
export class SearchController {
  private token = 0;

  constructor(
    private api: Pick<ApiClient, "search">,
    private onResponse: (response: SearchResponse) => void,
    private onError: (err: unknown) => void = () => undefined,
  ) {}

  async search(query: string, seed = 0): Promise<void> {
    const token = ++this.token;
    try {
      const response = await this.api.search(query, seed);
      if (token === this.token) this.onResponse(response);
    } catch (err) {
      if (token === this.token) this.onError(err);
    }
  }
}
