/** Human-readable explanations for machine error codes. */

import { ApiError } from "./api.js";

const EXPLANATIONS: Record<string, string> = {
  stale_match:
    "The network changed since this match was computed; refresh the matches and try again.",
  phi_violation:
    "Applying this rule here would change the network value, so the server rejected it.",
  at_origin: "Already at the first version; nothing to undo.",
  unknown_session: "This session no longer exists on the server.",
  bad_request: "The request was malformed.",
  domain_error: "A coordinate fell outside the generator's domain.",
  dual_domain_error:
    "A dual coordinate fell outside the range of the gradient map.",
  zero_centroid_weight: "A centroid's defining weights sum to zero.",
  centroid_cycle: "Centroid definitions form a cycle.",
  dangling_endpoint: "An edge references a node that does not exist.",
};

export function explain(err: unknown): string {
  if (err instanceof ApiError) {
    const hint = EXPLANATIONS[err.code];
    // the server message often carries specifics, e.g. which weight sums
    // are unbalanced for an ON-OFF rule
    return hint ? `${hint} (${err.message})` : err.message;
  }
  if (err instanceof Error) return err.message;
  return String(err);
}
