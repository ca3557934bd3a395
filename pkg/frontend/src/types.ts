// Wire types for the crashquery service responses.

export interface Target {
  entity: string;
  role: string;
}

export interface GeoReference {
  entity: string;
  role: string;
  name: string;
  resolved_location?: [number, number];
  candidates?: { name: string; location: [number, number] }[];
}

export interface SpatialConstraint {
  relation: string;
  target_role: string;
  reference_role: string;
  distance_m?: number | string;
}

export interface AttributeConstraint {
  target_role: string;
  field: string;
  operator: string;
  value?: unknown;
}

export interface Ranking {
  metric: string;
  target_role: string;
  order: string;
  top_n: number;
}

export interface Frame {
  supported: boolean;
  targets: Target[];
  references: GeoReference[];
  spatial_constraints: SpatialConstraint[];
  attribute_constraints: AttributeConstraint[];
  relations: unknown[];
  ranking?: Ranking;
}

export interface RepairAction {
  kind: "value_normalization" | "anchor_resolution" | "structural";
  path: string;
  before: unknown;
  after: unknown;
  rule_id: string;
}

export interface RepairReport {
  repaired: boolean;
  actions: RepairAction[];
  rejected: string | null;
}

export interface GraphNode {
  id: string;
  kind: string;
  params: Record<string, unknown>;
  inputs: string[];
}

export interface Graph {
  nodes: GraphNode[];
  outputs: string[];
}

export interface MapFeature {
  type: "Feature";
  id: string;
  geometry: { type: string; coordinates: unknown };
  properties: Record<string, unknown> & { role: string; entity: string };
}

export interface MapDocument {
  type: "FeatureCollection";
  metadata?: { bbox?: number[]; dataset_version?: string };
  features: MapFeature[];
}

export interface RankingRow {
  id: string;
  name: string;
  value: number;
}

export interface Provenance {
  node_id: string;
  kind: string;
  input_sizes: number[];
  output_size: number;
  elapsed_ms: number;
}

export interface QueryResponse {
  query: string;
  raw_frame: Frame;
  repaired_frame: Frame;
  repair_report: RepairReport;
  graph_audit_text: string;
  graph: Graph;
  result_counts: Record<string, number>;
  ranking: RankingRow[] | null;
  provenance: Provenance[];
  nl_summary: string;
  dataset_version: string;
  timings_ms: Record<string, number>;
  map: MapDocument;
  table_csv: string;
}

export interface CandidateGroup {
  reference: string;
  index: number;
  candidates: { name: string; location: [number, number] }[];
}
