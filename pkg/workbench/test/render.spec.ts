import { describe, expect, it } from "vitest";

import { forceLayout } from "../src/layout.js";
import {
  fmtNumber,
  matchListHtml,
  phiPanelHtml,
  renderSvg,
  timelineHtml,
} from "../src/render.js";
import { jensenTemplate, symBregmanTemplate } from "../src/templates.js";

describe("svg rendering", () => {
  it("renders every element with state styling", () => {
    const net = jensenTemplate();
    const svg = renderSvg(net, forceLayout(net, null));
    for (const n of net.nodes) expect(svg).toContain(`data-id="${n.id}"`);
    for (const e of net.edges) expect(svg).toContain(`data-id="${e.id}"`);
    expect(svg).toContain("arrowhead");
    expect(svg).toContain('class="node on centroid"');
  });

  it("marks selection and pending elements", () => {
    const net = jensenTemplate();
    const svg = renderSvg(net, forceLayout(net, null), {
      selection: new Set(["c"]),
      pending: new Set(["e1"]),
    });
    expect(svg).toMatch(/class="node on centroid selected"/);
    expect(svg).toMatch(/class="edge on directed pending"/);
  });

  it("draws lines without arrowheads", () => {
    const net = symBregmanTemplate();
    const svg = renderSvg(net, forceLayout(net, null));
    expect(svg).not.toContain("marker-end");
  });
});

describe("panels", () => {
  it("phi panel lists per-element terms", () => {
    const html = phiPanelHtml(
      0.5,
      {
        total: 0.5,
        node_terms: { p1: 0.25, c: 0.25 },
        edge_terms: { e1: 0 },
        in_weights: {},
        out_weights: {},
      },
      new Set(["c"]),
    );
    expect(html).toContain("0.5");
    expect(html).toContain('data-id="c"');
    expect(html).toMatch(/term selected/);
  });

  it("timeline shows residual badges and the active version", () => {
    const html = timelineHtml(
      [
        { version: 0, phi: 0.5, rule: null, direction: null, residual: 0 },
        { version: 1, phi: 0.5, rule: "OnOff1", direction: "forward", residual: 1e-16 },
        { version: 2, phi: 0.6, rule: "OnOff1", direction: "reverse", residual: 0.2 },
      ],
      1,
    );
    expect(html).toContain("badge ok");
    expect(html).toContain("badge bad");
    expect(html).toMatch(/step active/);
    expect(html).toMatch(/step future/);
  });

  it("match list renders apply buttons", () => {
    const html = matchListHtml([
      { rule: "OnOff1", direction: "forward", nodes: ["c"], edges: [], params: {} },
    ]);
    expect(html).toContain("apply-match");
    expect(html).toContain("OnOff1");
    expect(matchListHtml([])).toContain("No applicable matches");
  });
});

describe("number formatting", () => {
  it("keeps readable magnitudes fixed and extremes exponential", () => {
    expect(fmtNumber(0)).toBe("0");
    expect(fmtNumber(0.5)).toBe("0.5");
    expect(fmtNumber(2.5)).toBe("2.5");
    expect(fmtNumber(1.23456789e-7)).toContain("e-7");
    expect(fmtNumber(null)).toBe("–");
  });
});
