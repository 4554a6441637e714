/** Small force-directed layout. Positions from a previous layout are pinned
 * so rewrites move only the elements they introduce. */

import type { NetworkJson } from "./types.js";
import { edgeEndpoints } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

function hash32(text: string): number {
  let h = 2166136261 >>> 0;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 16777619) >>> 0;
  }
  return h;
}

/** Deterministic pseudo-random placement on a ring. */
export function seedPosition(id: string, width: number, height: number): Point {
  const h = hash32(id);
  const angle = ((h % 3600) / 3600) * 2 * Math.PI;
  const radius = 0.18 + (((h >>> 12) % 1000) / 1000) * 0.22;
  return {
    x: width / 2 + Math.cos(angle) * radius * width,
    y: height / 2 + Math.sin(angle) * radius * height,
  };
}

export function forceLayout(
  network: NetworkJson,
  previous: ReadonlyMap<string, Point> | null,
  width = 800,
  height = 520,
  iterations = 200,
): Map<string, Point> {
  const positions = new Map<string, Point>();
  const pinned = new Set<string>();
  for (const node of network.nodes) {
    const prev = previous?.get(node.id);
    if (prev) {
      positions.set(node.id, { ...prev });
      pinned.add(node.id);
    } else {
      positions.set(node.id, seedPosition(node.id, width, height));
    }
  }
  const free = network.nodes.map((n) => n.id).filter((id) => !pinned.has(id));
  if (free.length === 0) return positions;

  const springs: Array<[string, string]> = [];
  for (const e of network.edges) {
    const [a, b] = edgeEndpoints(e);
    if (a !== b) springs.push([a, b]);
  }
  const ids = network.nodes.map((n) => n.id);
  const k = Math.sqrt((width * height) / Math.max(ids.length, 1)) * 0.6;

  for (let it = 0; it < iterations; it++) {
    const temp = 0.1 * Math.min(width, height) * (1 - it / iterations) + 1;
    const force = new Map<string, Point>(
      free.map((id) => [id, { x: 0, y: 0 }]),
    );
    for (const id of free) {
      const p = positions.get(id)!;
      const f = force.get(id)!;
      for (const other of ids) {
        if (other === id) continue;
        const q = positions.get(other)!;
        let dx = p.x - q.x;
        let dy = p.y - q.y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-6) {
          dx = (hash32(id + other) % 7) - 3 || 1;
          dy = (hash32(other + id) % 7) - 3 || 2;
          d2 = dx * dx + dy * dy;
        }
        const rep = (k * k) / d2;
        f.x += dx * rep * 0.02;
        f.y += dy * rep * 0.02;
      }
      // gentle centering
      f.x += (width / 2 - p.x) * 0.003;
      f.y += (height / 2 - p.y) * 0.003;
    }
    for (const [a, b] of springs) {
      const pa = positions.get(a)!;
      const pb = positions.get(b)!;
      const dx = pb.x - pa.x;
      const dy = pb.y - pa.y;
      const dist = Math.sqrt(dx * dx + dy * dy) || 1;
      const pull = ((dist - k) / dist) * 0.05;
      if (!pinned.has(a)) {
        const f = force.get(a)!;
        f.x += dx * pull;
        f.y += dy * pull;
      }
      if (!pinned.has(b)) {
        const f = force.get(b)!;
        f.x -= dx * pull;
        f.y -= dy * pull;
      }
    }
    for (const id of free) {
      const p = positions.get(id)!;
      const f = force.get(id)!;
      const mag = Math.sqrt(f.x * f.x + f.y * f.y) || 1;
      const step = Math.min(mag, temp);
      p.x += (f.x / mag) * step;
      p.y += (f.y / mag) * step;
      p.x = Math.max(30, Math.min(width - 30, p.x));
      p.y = Math.max(30, Math.min(height - 30, p.y));
    }
  }
  return positions;
}
