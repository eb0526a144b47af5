/**
 * Visit policy: the load-completion heuristic and capture caps.
 *
 * A page counts as loaded once the load event fired and the DOM stayed
 * quiet for `domQuietMs`, but no longer than `postLoadCapMs` after the
 * load event. Pages that never fire load are cut off at `hardTimeoutMs`
 * and marked as timed out.
 */

export interface VisitPolicy {
  domQuietMs: number;
  postLoadCapMs: number;
  hardTimeoutMs: number;
  htmlPrefixBytes: number;
  urlPrefix: string;
  frameCapBytes: number;
}

export const DEFAULT_POLICY: VisitPolicy = {
  domQuietMs: 2_000,
  postLoadCapMs: 5_000,
  hardTimeoutMs: 15_000,
  htmlPrefixBytes: 65_536,
  urlPrefix: "http://www.",
  frameCapBytes: 1_048_576,
};

export function validatePolicy(policy: VisitPolicy): void {
  if (!(policy.hardTimeoutMs > policy.postLoadCapMs && policy.postLoadCapMs > 0)) {
    throw new Error("policy requires hardTimeout > postLoadCap > 0");
  }
  if (policy.domQuietMs <= 0 || policy.htmlPrefixBytes <= 0) {
    throw new Error("policy timers and caps must be positive");
  }
}

/** Bare domains get the policy prefix; explicit URLs pass through. */
export function normalizeUrl(input: string, policy: VisitPolicy): string {
  const trimmed = input.trim();
  if (/^https?:\/\//i.test(trimmed)) {
    return trimmed;
  }
  return policy.urlPrefix + trimmed;
}

/** The domain column of the output record: the bare input name. */
export function domainOf(input: string): string {
  const trimmed = input.trim();
  const withoutScheme = trimmed.replace(/^https?:\/\//i, "");
  return withoutScheme.split("/")[0];
}
