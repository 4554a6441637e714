/** End-to-end acceptance: the workbench flow against a live engine service.
 *
 * Flow: load the fan-into-centroid template (value 0.5 with the quadratic
 * generator), apply ON-OFF rule 1 at the centroid, undo, export; after every
 * step the displayed value must equal a fresh server evaluation.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DivnetClient } from "../src/api.js";
import { WorkbenchStore } from "../src/store.js";

const PORT = 18472;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess | null = null;

async function serviceUp(): Promise<boolean> {
  try {
    const resp = await fetch(`${BASE}/sessions/probe`);
    return resp.status === 404;
  } catch {
    return false;
  }
}

beforeAll(async () => {
  if (await serviceUp()) {
    throw new Error(
      `port ${PORT} already serves the API; kill the stale process first`,
    );
  }
  service = spawn(
    "python3",
    ["-m", "divnet.service", "--listen", `127.0.0.1:${PORT}`],
    { cwd: `${__dirname}/../..`, stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stderr?.on("data", () => undefined);
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    if (await serviceUp()) return;
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("engine service did not come up");
});

afterAll(() => {
  // pooled keep-alive connections defeat a graceful shutdown; be decisive
  service?.kill("SIGKILL");
});

describe("workbench against the live service", () => {
  it("load, apply at the centroid, undo, export — value mirrored throughout", async () => {
    const client = new DivnetClient(BASE);
    const store = new WorkbenchStore(client);

    const assertMirrored = async () => {
      const fresh = await client.getSession(store.state.sessionId!);
      expect(store.state.phi).toBe(fresh.phi);
      expect(store.state.version).toBe(fresh.version);
      expect(store.state.network).toEqual(fresh.network);
    };

    // load: the template evaluates to 0.5 server-side
    await store.loadTemplate("jensen", "quadratic");
    expect(store.state.phi).toBeCloseTo(0.5, 12);
    expect(store.state.breakdown?.total).toBeCloseTo(0.5, 12);
    await assertMirrored();

    // select the centroid; only matches anchored inside the selection remain
    store.toggleSelect("c");
    await store.fetchMatches("OnOff1");
    const applicable = store.matchesForSelection();
    expect(applicable.length).toBeGreaterThan(0);
    const match = applicable.find(
      (m) => m.direction === "forward" && m.nodes[0] === "c",
    );
    expect(match).toBeDefined();

    // apply: value must not move, the timeline gains a step with a residual
    await store.applyMatch(match!);
    expect(store.state.version).toBe(1);
    expect(store.state.phi).toBeCloseTo(0.5, 12);
    expect(store.state.lastResidual).not.toBeNull();
    expect(store.state.lastResidual!).toBeLessThanOrEqual(1e-9);
    expect(store.state.history).toHaveLength(2);
    expect(store.state.history[1].rule).toBe("OnOff1");
    const centroid = store.state.network!.nodes.find((n) => n.id === "c");
    expect(centroid?.state).toBe("off");
    expect(
      store.state.network!.edges.some((e) => e.tail === "c" && e.head === "c"),
    ).toBe(true);
    await assertMirrored();

    // undo restores version zero exactly
    await store.undo();
    expect(store.state.version).toBe(0);
    expect(store.state.phi).toBeCloseTo(0.5, 12);
    expect(
      store.state.network!.nodes.find((n) => n.id === "c")?.state,
    ).toBe("on");
    expect(store.canUndo()).toBe(false);
    await assertMirrored();

    // export both documents
    const asJson = JSON.parse(await store.exportAs("json"));
    expect(asJson.generator).toBe("quadratic");
    expect(asJson.nodes.map((n: { id: string }) => n.id)).toContain("c");
    const asDot = await store.exportAs("dot");
    expect(asDot.startsWith("digraph")).toBe(true);
    expect(asDot).toContain("solid");
  });

  it("server rejects a stale application with a conflict", async () => {
    const client = new DivnetClient(BASE);
    const store = new WorkbenchStore(client);
    await store.loadTemplate("jensen", "quadratic");
    await store.fetchMatches("OnOff1");
    const match = store.state.matches.find(
      (m) => m.direction === "forward" && m.nodes[0] === "c",
    )!;
    await store.applyMatch(match);
    await expect(store.applyMatch(match)).rejects.toMatchObject({
      status: 409,
    });
    expect(store.state.error).toMatch(/network changed/i);
    // the store resynced to the server's truth
    const fresh = await client.getSession(store.state.sessionId!);
    expect(store.state.version).toBe(fresh.version);
  });

  it("negative-control: an imbalanced anchor yields no matches", async () => {
    const client = new DivnetClient(BASE);
    const store = new WorkbenchStore(client);
    await store.loadTemplate("bregman", "quadratic");
    expect(store.state.phi).toBeCloseTo(2.5, 12);
    await store.fetchMatches("OnOff1");
    const forward = store.state.matches.filter((m) => m.direction === "forward");
    expect(forward).toHaveLength(0);
  });
});
