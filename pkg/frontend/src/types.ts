// Wire types for the dbtrail HTTP API. Versioned fixture responses live in
// fixtures/ and the contract tests run against them.

export interface TrailNode {
  node_id: number;
  table: string;
  pk: string[];
  title: string;
  snippet: string;
  score: number;
  matched_terms: string[];
  link: string;
}

export interface TrailView {
  rank: number;
  trail_score: number;
  terms_matched: string[];
  nodes: TrailNode[];
}

export interface SearchResponse {
  query: string;
  normalized_query: string;
  seed: number;
  k: number;
  trail_count: number;
  trails: TrailView[];
  timings: Record<string, number>;
  total_ms: number;
}

export interface RowOutlink {
  column: string;
  value: string;
  link: string;
}

export interface RowView {
  table: string;
  pk: string[];
  node_id: number | null;
  values: Record<string, string | null>;
  outlinks: RowOutlink[];
  backlinks_link: string;
}

export interface BacklinkRef {
  node_id: number;
  table: string;
  pk: string[];
  link: string;
}

export interface BacklinksView {
  table: string;
  pk: string[];
  referrers: BacklinkRef[];
}

export interface StatsView {
  nodes: number;
  documents: number;
  terms: number;
  pairs: number;
  links: number;
  tables: Record<string, number>;
}
