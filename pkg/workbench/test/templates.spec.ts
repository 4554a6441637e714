import { describe, expect, it } from "vitest";

import {
  bregmanTemplate,
  conjJensenTemplate,
  fnetTemplate,
  jensenTemplate,
  symBregmanTemplate,
  TEMPLATES,
  templateById,
} from "../src/templates.js";
import { edgeEndpoints, isDirected } from "../src/types.js";

describe("templates", () => {
  it("registry covers the five named networks", () => {
    expect(TEMPLATES.map((t) => t.id)).toEqual([
      "bregman",
      "symbregman",
      "jensen",
      "conjjensen",
      "fnet",
    ]);
    expect(() => templateById("nope")).toThrow();
  });

  it("two-point arrow and line shapes", () => {
    const arrow = bregmanTemplate([1, 2], [0, 0], 1);
    expect(arrow.edges).toHaveLength(1);
    expect(isDirected(arrow.edges[0])).toBe(true);
    const line = symBregmanTemplate();
    expect(isDirected(line.edges[0])).toBe(false);
    expect(edgeEndpoints(line.edges[0])).toEqual(["p", "q"]);
  });

  it("fan template balances the centroid with a coincident-anchor bridge", () => {
    const net = jensenTemplate([[0], [2]], [0.5, 0.5]);
    const centroid = net.nodes.find((n) => n.kind === "centroid")!;
    let inw = 0;
    let outw = 0;
    for (const e of net.edges) {
      if (e.head === centroid.id) inw += e.weight;
      if (e.tail === centroid.id) outw += e.weight;
    }
    expect(inw).toBeCloseTo(outw, 12);
    const anchor = net.nodes.find((n) => n.id === "q")!;
    expect(anchor.coord).toEqual([1]); // the weighted mean of the points
  });

  it("conjugate fan points out of the derived node", () => {
    const net = conjJensenTemplate();
    const derived = net.nodes.find((n) => n.kind === "conjugate_centroid")!;
    for (const e of net.edges) expect(e.tail).toBe(derived.id);
  });

  it("mass template carries ratio coordinates and mass weights", () => {
    const net = fnetTemplate([0.5, 0.5], [0.25, 0.75]);
    const coords = net.nodes
      .filter((n) => n.kind === "explicit")
      .map((n) => n.coord![0]);
    expect(coords[0]).toBeCloseTo(2.0, 12);
    expect(coords[1]).toBeCloseTo(0.5 / 0.75, 12);
    expect(net.edges.map((e) => e.weight)).toEqual([0.25, 0.75]);
    expect(() => fnetTemplate([1], [0.5, 0.5])).toThrow();
  });
});
