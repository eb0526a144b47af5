/**
 * CLI: capture --urls urls.txt --out captures.jsonl --tabs 4
 *              [--browser http://127.0.0.1:9222] [policy overrides]
 */

import { readFile } from "node:fs/promises";
import { parseArgs } from "node:util";

import { runBatch } from "./batch.js";
import { BrowserEndpoint } from "./browser.js";
import { DEFAULT_POLICY, VisitPolicy } from "./policy.js";

function usage(): never {
  console.error(
    "usage: capture --urls <file> --out <captures.jsonl> [--tabs 4]\n" +
    "               [--browser http://127.0.0.1:9222]\n" +
    "               [--hard-timeout ms] [--post-load-cap ms] [--dom-quiet ms]\n" +
    "               [--html-prefix bytes] [--url-prefix http://www.]",
  );
  process.exit(2);
}

export async function main(argv = process.argv.slice(2)): Promise<number> {
  let values: Record<string, string | undefined>;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        urls: { type: "string" },
        out: { type: "string" },
        tabs: { type: "string", default: "4" },
        browser: { type: "string", default: "http://127.0.0.1:9222" },
        "hard-timeout": { type: "string" },
        "post-load-cap": { type: "string" },
        "dom-quiet": { type: "string" },
        "html-prefix": { type: "string" },
        "url-prefix": { type: "string" },
      },
    }) as { values: Record<string, string | undefined> });
  } catch (err) {
    console.error(String(err));
    usage();
  }
  if (!values.urls || !values.out) {
    usage();
  }

  const policy: VisitPolicy = {
    ...DEFAULT_POLICY,
    hardTimeoutMs: values["hard-timeout"] ? Number(values["hard-timeout"]) : DEFAULT_POLICY.hardTimeoutMs,
    postLoadCapMs: values["post-load-cap"] ? Number(values["post-load-cap"]) : DEFAULT_POLICY.postLoadCapMs,
    domQuietMs: values["dom-quiet"] ? Number(values["dom-quiet"]) : DEFAULT_POLICY.domQuietMs,
    htmlPrefixBytes: values["html-prefix"] ? Number(values["html-prefix"]) : DEFAULT_POLICY.htmlPrefixBytes,
    urlPrefix: values["url-prefix"] ?? DEFAULT_POLICY.urlPrefix,
  };

  const text = await readFile(values.urls, "utf8");
  const inputs = text.split("\n").map((l) => l.trim()).filter(Boolean);
  const browser = new BrowserEndpoint(values.browser!);

  const result = await runBatch(inputs, policy, Number(values.tabs), browser,
    values.out);
  console.error(`captured ${result.records.length} record(s), ` +
    `${result.failures} with errors -> ${values.out}`);
  if (inputs.length > 0 && result.records.length === 0) {
    return 2;
  }
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("main.js") || entry.endsWith("capture")) {
  main().then(
    (code) => process.exit(code),
    (err) => {
      console.error(String(err));
      process.exit(2);
    },
  );
}
