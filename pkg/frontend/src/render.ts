// Pure view layer: builds DOM from API responses. Ranking, ordering and
// scoring all come from the server; these functions must render trails in
// exactly the order the response lists them.

import type { BacklinksView, RowView, SearchResponse, StatsView, TrailNode } from "./types.js";

export interface Handlers {
  openRow: (link: string) => void;
  openBacklinks: (link: string) => void;
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

/** Render "**marked**" snippet segments as <mark> elements. */
export function snippetFragment(snippet: string): DocumentFragment {
  const fragment = document.createDocumentFragment();
  const parts = snippet.split(/\*\*(.+?)\*\*/g);
  parts.forEach((part, i) => {
    if (part === "") return;
    if (i % 2 === 1) {
      fragment.appendChild(el("mark", undefined, part));
    } else {
      fragment.appendChild(document.createTextNode(part));
    }
  });
  return fragment;
}

function nodeAnchor(node: TrailNode, handlers: Handlers): HTMLAnchorElement {
  const anchor = el("a", "node-link", node.title);
  anchor.href = node.link;
  anchor.dataset.nodeId = String(node.node_id);
  anchor.dataset.table = node.table;
  anchor.title = node.snippet; // enhanced tooltip: the query-biased summary
  anchor.addEventListener("click", (event) => {
    event.preventDefault();
    handlers.openRow(node.link);
  });
  return anchor;
}

/** Navigation toolbar: the nodes of the rank-1 trail, in sequence. */
export function renderToolbar(
  container: HTMLElement,
  response: SearchResponse,
  handlers: Handlers,
): void {
  container.textContent = "";
  container.classList.add("toolbar");
  if (response.trails.length === 0) return;
  const best = response.trails[0];
  best.nodes.forEach((node, i) => {
    if (i > 0) container.appendChild(el("span", "hop", " → "));
    container.appendChild(nodeAnchor(node, handlers));
  });
}

/** Navigation tree window: every trail, expandable, in response order. */
export function renderTrailTree(
  container: HTMLElement,
  response: SearchResponse,
  handlers: Handlers,
): void {
  container.textContent = "";
  container.classList.add("trail-tree");
  if (response.trails.length === 0) {
    container.appendChild(el("p", "empty-state", "No results."));
    return;
  }
  for (const trail of response.trails) {
    const details = el("details", "trail");
    details.dataset.rank = String(trail.rank);
    if (trail.rank === 1) details.open = true;
    const summary = el("summary");
    summary.appendChild(el("span", "rank", `#${trail.rank}`));
    summary.appendChild(
      el("span", "trail-terms", ` ${trail.terms_matched.join(", ")} `),
    );
    summary.appendChild(el("span", "trail-score", trail.trail_score.toFixed(4)));
    details.appendChild(summary);

    const list = el("ol", "trail-nodes");
    for (const node of trail.nodes) {
      const item = el("li", `node table-${node.table}`);
      item.appendChild(el("span", "table-tag", node.table));
      item.appendChild(nodeAnchor(node, handlers));
      if (node.matched_terms.length > 0) {
        item.appendChild(el("span", "matched", ` [${node.matched_terms.join(", ")}]`));
      }
      const snippet = el("div", "snippet");
      snippet.appendChild(snippetFragment(node.snippet));
      item.appendChild(snippet);
      list.appendChild(item);
    }
    details.appendChild(list);
    container.appendChild(details);
  }
}

export function renderResults(
  toolbar: HTMLElement,
  tree: HTMLElement,
  response: SearchResponse,
  handlers: Handlers,
): void {
  renderToolbar(toolbar, response, handlers);
  renderTrailTree(tree, response, handlers);
}

/** Row viewer: all columns, FK outlinks, and a backlinks control. */
export function renderRowPanel(
  container: HTMLElement,
  row: RowView,
  handlers: Handlers,
): void {
  container.textContent = "";
  container.classList.add("row-panel");
  container.appendChild(el("h3", "row-title", `${row.table} / ${row.pk.join(" / ")}`));

  const table = el("table", "row-values");
  for (const [column, value] of Object.entries(row.values)) {
    const tr = el("tr");
    tr.appendChild(el("th", undefined, column.toUpperCase()));
    const td = el("td", value === null ? "null-value" : "value");
    const outlink = row.outlinks.find((o) => o.column === column);
    if (outlink) {
      const anchor = el("a", "outlink", outlink.value);
      anchor.href = outlink.link;
      anchor.addEventListener("click", (event) => {
        event.preventDefault();
        handlers.openRow(outlink.link);
      });
      td.appendChild(anchor);
    } else {
      td.textContent = value === null ? "" : value;
    }
    tr.appendChild(td);
    table.appendChild(tr);
  }
  container.appendChild(table);

  const backlinksButton = el("button", "backlinks-button", "backlinks");
  backlinksButton.addEventListener("click", () =>
    handlers.openBacklinks(row.backlinks_link),
  );
  container.appendChild(backlinksButton);
  container.appendChild(el("div", "backlinks-target"));
}

export function renderBacklinks(
  container: HTMLElement,
  view: BacklinksView,
  handlers: Handlers,
): void {
  container.textContent = "";
  if (view.referrers.length === 0) {
    container.appendChild(el("p", "empty-state", "No referencing rows."));
    return;
  }
  const list = el("ul", "backlinks");
  for (const ref of view.referrers) {
    const item = el("li");
    const anchor = el("a", "backlink", `${ref.table} / ${ref.pk.join(" / ")}`);
    anchor.href = ref.link;
    anchor.addEventListener("click", (event) => {
      event.preventDefault();
      handlers.openRow(ref.link);
    });
    item.appendChild(anchor);
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderStats(container: HTMLElement, stats: StatsView): void {
  const tables = Object.entries(stats.tables)
    .map(([name, count]) => `${name} ${count}`)
    .join(", ");
  container.textContent =
    `${stats.nodes} rows, ${stats.links} links, ${stats.terms} terms (${tables})`;
}

export function renderError(container: HTMLElement, message: string): void {
  container.textContent = "";
  container.appendChild(el("p", "error", message));
}
