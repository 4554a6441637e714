/** Pure string renderers for the graph canvas and side panels; the DOM layer
 * in main.ts only swaps innerHTML and delegates events. */

import type { Point } from "./layout.js";
import type {
  HistoryEntry,
  NetEdge,
  NetworkJson,
  PhiBreakdown,
  RuleMatch,
} from "./types.js";
import { edgeEndpoints, isDirected } from "./types.js";

const RESIDUAL_BADGE_TOL = 1e-9;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmtNumber(x: number | null | undefined): string {
  if (x === null || x === undefined || Number.isNaN(x)) return "–";
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 1e5 || abs < 1e-4) return x.toExponential(6);
  return x.toPrecision(9).replace(/\.?0+$/, "");
}

function nodeGlyph(kind: string, x: number, y: number, cls: string): string {
  if (kind === "centroid") {
    const d = 14;
    return `<path class="${cls}" d="M ${x} ${y - d} L ${x + d} ${y} L ${x} ${
      y + d
    } L ${x - d} ${y} Z"/>`;
  }
  if (kind === "conjugate_centroid") {
    return `<rect class="${cls}" x="${x - 11}" y="${y - 11}" width="22" height="22" rx="3"/>`;
  }
  return `<circle class="${cls}" cx="${x}" cy="${y}" r="12"/>`;
}

function edgePath(a: Point, b: Point, loop: boolean, index: number): string {
  if (loop) {
    const r = 18 + index * 8;
    return `M ${a.x} ${a.y - 10} C ${a.x - r} ${a.y - 10 - r}, ${a.x + r} ${
      a.y - 10 - r
    }, ${a.x} ${a.y - 10}`;
  }
  const mx = (a.x + b.x) / 2;
  const my = (a.y + b.y) / 2;
  const nx = -(b.y - a.y);
  const ny = b.x - a.x;
  const norm = Math.sqrt(nx * nx + ny * ny) || 1;
  const bend = index === 0 ? 0 : (index % 2 === 1 ? 1 : -1) * 14 * Math.ceil(index / 2);
  const cx = mx + (nx / norm) * bend;
  const cy = my + (ny / norm) * bend;
  return `M ${a.x} ${a.y} Q ${cx} ${cy} ${b.x} ${b.y}`;
}

export interface RenderOptions {
  width?: number;
  height?: number;
  selection?: ReadonlySet<string>;
  pending?: ReadonlySet<string>;
}

export function renderSvg(
  network: NetworkJson,
  positions: ReadonlyMap<string, Point>,
  options: RenderOptions = {},
): string {
  const width = options.width ?? 800;
  const height = options.height ?? 520;
  const selection = options.selection ?? new Set<string>();
  const pending = options.pending ?? new Set<string>();
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="net-canvas">`,
    `<defs><marker id="arrowhead" markerWidth="9" markerHeight="7" refX="8" refY="3.5" orient="auto">` +
      `<polygon points="0 0, 9 3.5, 0 7" class="arrowhead"/></marker></defs>`,
  );

  const seen = new Map<string, number>();
  for (const e of network.edges) {
    const [aId, bId] = edgeEndpoints(e);
    const a = positions.get(aId);
    const b = positions.get(bId);
    if (!a || !b) continue;
    const key = [aId, bId].sort().join("|");
    const index = seen.get(key) ?? 0;
    seen.set(key, index + 1);
    const classes = ["edge", e.state === "on" ? "on" : "off"];
    if (isDirected(e)) classes.push("directed");
    if (selection.has(e.id)) classes.push("selected");
    if (pending.has(e.id)) classes.push("pending");
    const marker = isDirected(e) ? ` marker-end="url(#arrowhead)"` : "";
    const path = edgePath(a, b, aId === bId, index);
    parts.push(
      `<g class="edge-group" data-id="${esc(e.id)}">` +
        `<path class="edge-hit" d="${path}"/>` +
        `<path class="${classes.join(" ")}" d="${path}"${marker}/>`,
    );
    const lx = aId === bId ? a.x : (a.x + b.x) / 2;
    const ly = aId === bId ? a.y - 34 - index * 8 : (a.y + b.y) / 2 - 6;
    parts.push(
      `<text class="edge-label" x="${lx}" y="${ly}">${esc(
        `${e.id}: ${fmtNumber(e.weight)}`,
      )}</text></g>`,
    );
  }

  for (const n of network.nodes) {
    const p = positions.get(n.id);
    if (!p) continue;
    const classes = ["node", n.state === "on" ? "on" : "off", n.kind];
    if (selection.has(n.id)) classes.push("selected");
    if (pending.has(n.id)) classes.push("pending");
    parts.push(
      `<g class="node-group" data-id="${esc(n.id)}">`,
      nodeGlyph(n.kind, p.x, p.y, classes.join(" ")),
      `<text class="node-label" x="${p.x}" y="${p.y + 26}">${esc(n.id)}</text>`,
    );
    if (n.coord) {
      parts.push(
        `<text class="coord-label" x="${p.x}" y="${p.y + 40}">(${n.coord
          .map((c) => fmtNumber(c))
          .join(", ")})</text>`,
      );
    }
    parts.push("</g>");
  }
  parts.push("</svg>");
  return parts.join("");
}

export function phiPanelHtml(
  phi: number | null,
  breakdown: PhiBreakdown | null,
  selection: ReadonlySet<string>,
): string {
  const rows: string[] = [];
  if (breakdown) {
    const term = (id: string, value: number, kind: string) => {
      const cls = selection.has(id) ? "term selected" : "term";
      rows.push(
        `<tr class="${cls}" data-id="${esc(id)}"><td>${kind}</td><td>${esc(
          id,
        )}</td><td class="num">${fmtNumber(value)}</td></tr>`,
      );
    };
    for (const [id, v] of Object.entries(breakdown.node_terms)) term(id, v, "node");
    for (const [id, v] of Object.entries(breakdown.edge_terms)) term(id, v, "edge");
  }
  return (
    `<div class="phi-total">Φ = <span class="phi-value">${fmtNumber(phi)}</span></div>` +
    `<table class="phi-terms"><thead><tr><th></th><th>element</th><th>term</th></tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>`
  );
}

export function matchListHtml(matches: RuleMatch[]): string {
  if (matches.length === 0) {
    return `<p class="empty">No applicable matches for the current selection.</p>`;
  }
  const items = matches.map((m, i) => {
    const anchors = [...m.nodes, ...m.edges].join(", ");
    const params = Object.entries(m.params)
      .filter(([k]) => k !== "sigma")
      .map(([k, v]) => `${k}=${String(v)}`)
      .join(" ");
    return (
      `<li><button class="apply-match" data-index="${i}">` +
      `<span class="rule">${esc(m.rule)}</span> <span class="dir">${m.direction}</span>` +
      `<span class="anchors">@ ${esc(anchors)}</span>` +
      (params ? `<span class="params">${esc(params)}</span>` : "") +
      `</button></li>`
    );
  });
  return `<ul class="match-list">${items.join("")}</ul>`;
}

export function timelineHtml(history: HistoryEntry[], version: number): string {
  const items = history.map((h) => {
    const active = h.version === version ? " active" : "";
    const future = h.version > version ? " future" : "";
    const badge =
      h.rule === null
        ? ""
        : h.residual <= RESIDUAL_BADGE_TOL
          ? `<span class="badge ok">Δ ${h.residual.toExponential(1)}</span>`
          : `<span class="badge bad">Δ ${h.residual.toExponential(1)}</span>`;
    const label = h.rule === null ? "initial" : `${h.rule} (${h.direction})`;
    return (
      `<li class="step${active}${future}">` +
      `<span class="version">v${h.version}</span> ${esc(label)} ` +
      `<span class="phi">Φ ${fmtNumber(h.phi)}</span> ${badge}</li>`
    );
  });
  return `<ol class="timeline">${items.join("")}</ol>`;
}

export function edgeTitle(e: NetEdge): string {
  const [a, b] = edgeEndpoints(e);
  const arrow = isDirected(e) ? "→" : "—";
  return `${e.id}: ${a} ${arrow} ${b} (${e.weight}, ${e.state})`;
}
