/** Client-side builders for the named starting networks. Only the topology is
 * built here; every value comes from the server. */

import type { NetEdge, NetNode, NetworkJson } from "./types.js";

export interface TemplateSpec {
  id: string;
  label: string;
  generator: string;
  build: () => NetworkJson;
}

function explicit(id: string, coord: number[], state: "on" | "off" = "on"): NetNode {
  return { id, kind: "explicit", state, coord };
}

function arrow(id: string, tail: string, head: string, weight: number): NetEdge {
  return { id, tail, head, weight, state: "on" };
}

function line(id: string, a: string, b: string, weight: number): NetEdge {
  return { id, a, b, weight, state: "on" };
}

export function bregmanTemplate(
  p: number[] = [1, 2],
  q: number[] = [0, 0],
  alpha = 1,
  generator = "quadratic",
): NetworkJson {
  return {
    generator,
    nodes: [explicit("p", p), explicit("q", q)],
    edges: [arrow("e", "p", "q", alpha)],
  };
}

export function symBregmanTemplate(
  p: number[] = [1, 0],
  q: number[] = [0, 0],
  alpha = 1,
  generator = "quadratic",
): NetworkJson {
  return {
    generator,
    nodes: [explicit("p", p), explicit("q", q)],
    edges: [line("l", "p", "q", alpha)],
  };
}

/** Weighted fan into a centroid, bridged to an explicit anchor placed at the
 * centroid's own coordinate. The bridge term vanishes (coincident endpoints),
 * so the value is still Sigma * J, while the centroid's in/out sums balance
 * and the ON-OFF rules are live at it. */
export function jensenTemplate(
  points: number[][] = [[0], [2]],
  weights: number[] = [0.5, 0.5],
  generator = "quadratic",
): NetworkJson {
  const total = weights.reduce((acc, w) => acc + w, 0);
  const dim = points[0]?.length ?? 1;
  const center = Array.from({ length: dim }, (_, mu) =>
    points.reduce((acc, pt, i) => acc + weights[i] * pt[mu], 0) / total,
  );
  const nodes: NetNode[] = points.map((c, i) => explicit(`p${i + 1}`, c));
  nodes.push({ id: "c", kind: "centroid", state: "on" });
  nodes.push(explicit("q", center));
  const edges = weights.map((w, i) => arrow(`e${i + 1}`, `p${i + 1}`, "c", w));
  edges.push(arrow("b", "c", "q", total));
  return { generator, nodes, edges };
}

export function conjJensenTemplate(
  points: number[][] = [[0], [2]],
  weights: number[] = [0.5, 0.5],
  generator = "quadratic",
): NetworkJson {
  const nodes: NetNode[] = points.map((c, i) => explicit(`p${i + 1}`, c));
  nodes.push({ id: "chat", kind: "conjugate_centroid", state: "on" });
  const edges = weights.map((w, i) => arrow(`e${i + 1}`, "chat", `p${i + 1}`, w));
  return { generator, nodes, edges };
}

/** Ratio-point fan: nodes at p_i/q_i with weights q_i; the centroid resolves
 * to 1 on the server. Needs a generator with F(1)=0. */
export function fnetTemplate(
  p: number[] = [0.5, 0.5],
  q: number[] = [0.25, 0.75],
  generator = "negative_entropy",
): NetworkJson {
  if (p.length !== q.length) throw new Error("mass vectors must align");
  const nodes: NetNode[] = p.map((pi, i) => explicit(`p${i + 1}`, [pi / q[i]]));
  nodes.push({ id: "c", kind: "centroid", state: "on" });
  const edges = q.map((qi, i) => arrow(`e${i + 1}`, `p${i + 1}`, "c", qi));
  return { generator, nodes, edges };
}

export const TEMPLATES: TemplateSpec[] = [
  {
    id: "bregman",
    label: "Two points, one arrow (Bregman)",
    generator: "quadratic",
    build: () => bregmanTemplate(),
  },
  {
    id: "symbregman",
    label: "Two points, one line (symmetric Bregman)",
    generator: "quadratic",
    build: () => symBregmanTemplate(),
  },
  {
    id: "jensen",
    label: "Fan into a centroid (Jensen)",
    generator: "quadratic",
    build: () => jensenTemplate(),
  },
  {
    id: "conjjensen",
    label: "Fan out of a conjugate centroid",
    generator: "quadratic",
    build: () => conjJensenTemplate(),
  },
  {
    id: "fnet",
    label: "Ratio fan over masses (f-divergence)",
    generator: "negative_entropy",
    build: () => fnetTemplate(),
  },
];

export function templateById(id: string): TemplateSpec {
  const found = TEMPLATES.find((t) => t.id === id);
  if (!found) throw new Error(`unknown template ${id}`);
  return found;
}
