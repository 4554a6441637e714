/** Wire types shared with the engine's HTTP API. */

export type OnOff = "on" | "off";

export type NodeKind = "explicit" | "centroid" | "conjugate_centroid";

export interface NetNode {
  id: string;
  kind: NodeKind;
  state: OnOff;
  coord?: number[];
}

export interface NetEdge {
  id: string;
  weight: number;
  state: OnOff;
  /** directed edges carry tail/head, undirected carry a/b */
  tail?: string;
  head?: string;
  a?: string;
  b?: string;
}

export interface NetworkJson {
  generator: string;
  nodes: NetNode[];
  edges: NetEdge[];
}

export interface PhiBreakdown {
  total: number;
  node_terms: Record<string, number>;
  edge_terms: Record<string, number>;
  in_weights: Record<string, number>;
  out_weights: Record<string, number>;
}

export type Direction = "forward" | "reverse";

export interface RuleMatch {
  rule: string;
  direction: Direction;
  nodes: string[];
  edges: string[];
  params: Record<string, unknown>;
}

export interface HistoryEntry {
  version: number;
  phi: number;
  rule: string | null;
  direction: string | null;
  residual: number;
}

export interface SessionInfo {
  session_id: string;
  generator: string;
  version: number;
  versions: number;
  network: NetworkJson;
  phi: number;
  breakdown: PhiBreakdown;
  history: HistoryEntry[];
}

export interface CreateResult {
  session_id: string;
  phi: number;
  breakdown: PhiBreakdown;
  network: NetworkJson;
}

export interface ApplyResult {
  new_version: number;
  phi_before: number;
  phi_after: number;
  residual: number;
  phi: number;
  breakdown: PhiBreakdown;
  network: NetworkJson;
}

export interface UndoResult {
  version: number;
  phi: number;
  breakdown: PhiBreakdown;
  network: NetworkJson;
}

export const RULE_IDS = [
  "Summation",
  "DeleteIsolated",
  "DeleteZeroWeight",
  "DeleteOffBetweenOff",
  "DeleteOnLoopOnNode",
  "OnOff1",
  "OnOff2",
  "Insertion1",
  "Insertion2",
  "Connection",
] as const;

export type RuleId = (typeof RULE_IDS)[number];

/** Endpoint pair of an edge regardless of orientation. */
export function edgeEndpoints(e: NetEdge): [string, string] {
  if (e.tail !== undefined && e.head !== undefined) return [e.tail, e.head];
  if (e.a !== undefined && e.b !== undefined) return [e.a, e.b];
  throw new Error(`edge ${e.id} has no endpoints`);
}

export function isDirected(e: NetEdge): boolean {
  return e.tail !== undefined;
}
