/** DOM wiring: binds the store to the page, renders on every change. */

import { DivnetClient } from "./api.js";
import { forceLayout, type Point } from "./layout.js";
import { matchListHtml, phiPanelHtml, renderSvg, timelineHtml } from "./render.js";
import { WorkbenchStore } from "./store.js";
import { TEMPLATES } from "./templates.js";
import { RULE_IDS, type RuleMatch } from "./types.js";

const client = new DivnetClient("");
const store = new WorkbenchStore(client);

let positions: Map<string, Point> | null = null;
let shownMatches: RuleMatch[] = [];

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function renderAll(): void {
  const state = store.state;
  const canvas = el<HTMLDivElement>("canvas");
  if (state.network) {
    positions = forceLayout(state.network, positions);
    canvas.innerHTML = renderSvg(state.network, positions, {
      selection: new Set(state.selection),
      pending: new Set(state.pending),
    });
  } else {
    canvas.innerHTML = `<p class="empty">Load a template to begin.</p>`;
  }
  el("phi-panel").innerHTML = phiPanelHtml(
    state.phi,
    state.breakdown,
    new Set(state.selection),
  );
  shownMatches = store.matchesForSelection();
  el("matches").innerHTML = matchListHtml(shownMatches);
  el("timeline").innerHTML = timelineHtml(state.history, state.version);
  el<HTMLButtonElement>("undo").disabled = !store.canUndo() || state.busy;
  el("status").textContent = state.busy
    ? "working…"
    : state.error
      ? state.error
      : state.lastResidual !== null
        ? `last application residual ${state.lastResidual.toExponential(2)}`
        : "ready";
  el("status").className = state.error ? "status error" : "status";
}

function download(name: string, content: string, type: string): void {
  const blob = new Blob([content], { type });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

function setupControls(): void {
  const templateSelect = el<HTMLSelectElement>("template");
  for (const t of TEMPLATES) {
    const opt = document.createElement("option");
    opt.value = t.id;
    opt.textContent = t.label;
    templateSelect.appendChild(opt);
  }
  const ruleSelect = el<HTMLSelectElement>("rule");
  for (const r of ["(all rules)", ...RULE_IDS]) {
    const opt = document.createElement("option");
    opt.value = r.startsWith("(") ? "" : r;
    opt.textContent = r;
    ruleSelect.appendChild(opt);
  }

  el("load").addEventListener("click", () => {
    positions = null;
    const generator = el<HTMLSelectElement>("generator").value;
    void store
      .loadTemplate(templateSelect.value, generator || undefined)
      .catch(() => undefined);
  });
  el("find-matches").addEventListener("click", () => {
    void store.fetchMatches(ruleSelect.value || null).catch(() => undefined);
  });
  el("undo").addEventListener("click", () => {
    void store.undo().catch(() => undefined);
  });
  el("clear-selection").addEventListener("click", () => store.clearSelection());
  el("export-json").addEventListener("click", () => {
    void store
      .exportAs("json")
      .then((text) => download("network.json", text, "application/json"));
  });
  el("export-dot").addEventListener("click", () => {
    void store
      .exportAs("dot")
      .then((text) => download("network.dot", text, "text/vnd.graphviz"));
  });
  el("export-derivation").addEventListener("click", () => {
    void store
      .exportAs("derivation")
      .then((text) => download("derivation.json", text, "application/json"));
  });

  el("canvas").addEventListener("click", (event) => {
    const target = (event.target as Element).closest("[data-id]");
    if (target) store.toggleSelect(target.getAttribute("data-id")!);
  });
  el("matches").addEventListener("click", (event) => {
    const button = (event.target as Element).closest(".apply-match");
    if (!button) return;
    const index = Number(button.getAttribute("data-index"));
    const match = shownMatches[index];
    if (match) void store.applyMatch(match).catch(() => undefined);
  });
}

store.subscribe(renderAll);
setupControls();
renderAll();
