import { ApiClient, ApiError } from "./api.js";
import { SearchController } from "./controller.js";
import {
  Handlers,
  renderBacklinks,
  renderError,
  renderResults,
  renderRowPanel,
  renderStats,
} from "./render.js";

const api = new ApiClient();

const queryInput = document.getElementById("query") as HTMLInputElement;
const searchForm = document.getElementById("search-form") as HTMLFormElement;
const toolbar = document.getElementById("toolbar") as HTMLElement;
const tree = document.getElementById("results") as HTMLElement;
const rowPanel = document.getElementById("row-panel") as HTMLElement;
const statsBar = document.getElementById("stats") as HTMLElement;

const handlers: Handlers = {
  openRow: (link) => {
    void openRow(link);
  },
  openBacklinks: (link) => {
    void openBacklinks(link);
  },
};

// Responses for superseded queries are discarded by the controller's token.
const controller = new SearchController(
  api,
  (response) => renderResults(toolbar, tree, response, handlers),
  (err) => {
    const message = err instanceof ApiError ? err.message : "search failed";
    renderError(tree, message);
    toolbar.textContent = "";
  },
);

async function openRow(link: string): Promise<void> {
  try {
    const row = await api.row(link);
    renderRowPanel(rowPanel, row, handlers);
  } catch (err) {
    const message = err instanceof ApiError && err.status === 404
      ? "row not found"
      : "failed to load row";
    renderError(rowPanel, message);
  }
}

async function openBacklinks(link: string): Promise<void> {
  const target = rowPanel.querySelector<HTMLElement>(".backlinks-target");
  if (!target) return;
  try {
    const view = await api.backlinks(link);
    renderBacklinks(target, view, handlers);
  } catch {
    renderError(target, "failed to load backlinks");
  }
}

searchForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const query = queryInput.value.trim();
  if (query) void controller.search(query);
});

void api.stats().then(
  (stats) => renderStats(statsBar, stats),
  () => undefined,
);
