/**
 * Batch runner: one record per input URL in input order, bounded tab
 * parallelism, per-URL errors embedded rather than fatal.
 */

import { writeFile } from "node:fs/promises";

import { BrowserEndpoint } from "./browser.js";
import { DEFAULT_POLICY, VisitPolicy, domainOf, normalizeUrl } from "./policy.js";
import { CaptureRecord, makeRecord, recordLine } from "./record.js";
import { visit } from "./visit.js";

export interface BatchResult {
  records: CaptureRecord[];
  failures: number;
}

export async function runBatch(
  inputs: string[],
  policy: VisitPolicy = DEFAULT_POLICY,
  tabs = 4,
  browser: BrowserEndpoint,
  outPath?: string,
): Promise<BatchResult> {
  const records: CaptureRecord[] = new Array(inputs.length);
  let cursor = 0;

  const worker = async () => {
    for (;;) {
      const index = cursor++;
      if (index >= inputs.length) return;
      const input = inputs[index];
      try {
        records[index] = await visit(browser, input, policy);
      } catch (err) {
        records[index] = makeRecord(domainOf(input),
          normalizeUrl(input, policy), "", policy.htmlPrefixBytes, [], [],
          "timeout", `NavigationError: ${String(err)}`);
      }
    }
  };

  const width = Math.max(1, Math.min(tabs, inputs.length));
  await Promise.all(Array.from({ length: width }, worker));

  if (outPath !== undefined) {
    await writeFile(outPath, records.map(recordLine).join(""), "utf8");
  }
  const failures = records.filter((r) => r.error !== null).length;
  return { records, failures };
}
