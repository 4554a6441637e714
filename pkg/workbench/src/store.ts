/** Session state machine: template loading, selection, match filtering,
 * optimistic application reconciled against the server, undo, export.
 *
 * Invariants kept here: the rendered element set always mirrors the server's
 * current version (every mutation ends in a fresh GET), and the selection
 * only ever references live ids. */

import { DivnetClient } from "./api.js";
import { explain } from "./errors.js";
import { templateById } from "./templates.js";
import type {
  HistoryEntry,
  NetworkJson,
  PhiBreakdown,
  RuleMatch,
} from "./types.js";

export interface WorkbenchState {
  sessionId: string | null;
  generator: string;
  network: NetworkJson | null;
  phi: number | null;
  breakdown: PhiBreakdown | null;
  version: number;
  history: HistoryEntry[];
  matches: RuleMatch[];
  ruleFilter: string | null;
  selection: string[];
  /** anchors of an application awaiting server confirmation */
  pending: string[];
  busy: boolean;
  error: string | null;
  lastResidual: number | null;
}

const INITIAL: WorkbenchState = {
  sessionId: null,
  generator: "quadratic",
  network: null,
  phi: null,
  breakdown: null,
  version: 0,
  history: [],
  matches: [],
  ruleFilter: null,
  selection: [],
  pending: [],
  busy: false,
  error: null,
  lastResidual: null,
};

type Listener = (state: WorkbenchState) => void;

function liveIds(network: NetworkJson | null): Set<string> {
  const ids = new Set<string>();
  if (!network) return ids;
  for (const n of network.nodes) ids.add(n.id);
  for (const e of network.edges) ids.add(e.id);
  return ids;
}

export class WorkbenchStore {
  state: WorkbenchState = { ...INITIAL };
  private listeners: Listener[] = [];

  constructor(private readonly client: DivnetClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(partial: Partial<WorkbenchState>): void {
    this.state = { ...this.state, ...partial };
    const ids = liveIds(this.state.network);
    this.state.selection = this.state.selection.filter((id) => ids.has(id));
    for (const listener of this.listeners) listener(this.state);
  }

  async loadTemplate(templateId: string, generator?: string): Promise<void> {
    const template = templateById(templateId);
    await this.loadNetwork(template.build(), generator ?? template.generator);
  }

  async loadNetwork(network: NetworkJson, generator?: string): Promise<void> {
    this.update({ busy: true, error: null });
    try {
      const gen = generator ?? network.generator;
      const created = await this.client.createSession(
        { ...network, generator: gen },
        gen,
      );
      this.update({
        sessionId: created.session_id,
        generator: gen,
        network: created.network,
        phi: created.phi,
        breakdown: created.breakdown,
        version: 0,
        history: [],
        matches: [],
        selection: [],
        pending: [],
        lastResidual: null,
        busy: false,
      });
      await this.refresh();
    } catch (err) {
      this.update({ busy: false, error: explain(err) });
      throw err;
    }
  }

  /** Re-read the displayed version from the server; the displayed value is
   * never allowed to drift from a fresh evaluation. */
  async refresh(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId) return;
    const info = await this.client.getSession(sessionId);
    this.update({
      generator: info.generator,
      network: info.network,
      phi: info.phi,
      breakdown: info.breakdown,
      version: info.version,
      history: info.history,
      pending: [],
    });
  }

  toggleSelect(id: string): void {
    const selected = new Set(this.state.selection);
    if (selected.has(id)) selected.delete(id);
    else selected.add(id);
    this.update({ selection: [...selected] });
  }

  clearSelection(): void {
    this.update({ selection: [] });
  }

  async fetchMatches(rule?: string | null): Promise<RuleMatch[]> {
    const { sessionId } = this.state;
    if (!sessionId) return [];
    this.update({ busy: true, error: null, ruleFilter: rule ?? null });
    try {
      const matches = await this.client.matches(sessionId, rule ?? undefined);
      this.update({ matches, busy: false });
      return this.matchesForSelection();
    } catch (err) {
      this.update({ busy: false, error: explain(err) });
      throw err;
    }
  }

  /** Matches whose anchors all lie inside the selection (all matches when
   * nothing is selected). */
  matchesForSelection(): RuleMatch[] {
    const { matches, selection } = this.state;
    if (selection.length === 0) return matches;
    const chosen = new Set(selection);
    return matches.filter((m) =>
      [...m.nodes, ...m.edges].every((id) => chosen.has(id)),
    );
  }

  async applyMatch(match: RuleMatch): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId) throw new Error("no session loaded");
    // optimistic: mark the anchors as in-flight for immediate feedback,
    // then reconcile every field from the authoritative response
    this.update({
      busy: true,
      error: null,
      pending: [...match.nodes, ...match.edges],
    });
    try {
      const result = await this.client.apply(sessionId, match);
      this.update({
        network: result.network,
        phi: result.phi,
        breakdown: result.breakdown,
        version: result.new_version,
        lastResidual: result.residual,
        matches: [],
        busy: false,
        pending: [],
      });
      await this.refresh();
    } catch (err) {
      this.update({ busy: false, pending: [], error: explain(err) });
      await this.refresh();
      throw err;
    }
  }

  async undo(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId) throw new Error("no session loaded");
    this.update({ busy: true, error: null });
    try {
      const result = await this.client.undo(sessionId);
      this.update({
        network: result.network,
        phi: result.phi,
        breakdown: result.breakdown,
        version: result.version,
        matches: [],
        busy: false,
      });
      await this.refresh();
    } catch (err) {
      this.update({ busy: false, error: explain(err) });
      await this.refresh();
      throw err;
    }
  }

  canUndo(): boolean {
    return this.state.version > 0;
  }

  async exportAs(format: "json" | "dot" | "derivation"): Promise<string> {
    const { sessionId } = this.state;
    if (!sessionId) throw new Error("no session loaded");
    return this.client.exportSession(sessionId, format);
  }
}
