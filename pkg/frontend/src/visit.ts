/**
 * Drive one page visit over the DevTools protocol: navigate, apply the
 * load-completion heuristic, dump compiled Wasm modules, record websocket
 * frames in both directions, and keep the final HTML prefix.
 */

import { BrowserEndpoint } from "./browser.js";
import { CdpConnection } from "./cdp.js";
import { DEFAULT_POLICY, VisitPolicy, domainOf, normalizeUrl, validatePolicy } from "./policy.js";
import { CaptureRecord, LoadState, WsFrame, makeRecord } from "./record.js";

export const DOM_CHANGE_BINDING = "__captureDomChange";

// Injected before any page script: a document-scope mutation observer that
// pings the binding on every DOM change.
const OBSERVER_SOURCE = `(() => {
  const ping = () => {
    if (typeof window.${DOM_CHANGE_BINDING} === "function") {
      window.${DOM_CHANGE_BINDING}("");
    }
  };
  const observer = new MutationObserver(ping);
  const start = () => {
    if (document.documentElement) {
      observer.observe(document.documentElement,
        { childList: true, subtree: true, attributes: true, characterData: true });
    }
  };
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", start);
  } else {
    start();
  }
})();`;

export async function visit(
  browser: BrowserEndpoint,
  input: string,
  policy: VisitPolicy = DEFAULT_POLICY,
): Promise<CaptureRecord> {
  validatePolicy(policy);
  const url = normalizeUrl(input, policy);
  const domain = domainOf(input);

  let targetId: string | null = null;
  let cdp: CdpConnection;
  try {
    const target = await browser.newTarget();
    targetId = target.id;
    cdp = await CdpConnection.connect(target.webSocketDebuggerUrl);
  } catch (err) {
    if (targetId) await browser.closeTarget(targetId);
    return makeRecord(domain, url, "", policy.htmlPrefixBytes, [], [],
      "timeout", `NavigationError: ${String(err)}`);
  }

  const wasmModules: Buffer[] = [];
  const wasmSeen = new Set<string>();
  const wasmFetches: Promise<void>[] = [];
  const frames: WsFrame[] = [];
  let loadFired = false;
  let finished = false;
  let loadState: LoadState = "timeout";
  let errorText: string | null = null;

  let hardTimer: NodeJS.Timeout | null = null;
  let quietTimer: NodeJS.Timeout | null = null;
  let capTimer: NodeJS.Timeout | null = null;
  const clearTimers = () => {
    for (const timer of [hardTimer, quietTimer, capTimer]) {
      if (timer) clearTimeout(timer);
    }
  };

  let settle: () => void = () => {};
  const done = new Promise<void>((resolve) => {
    settle = resolve;
  });
  const finish = (state: LoadState) => {
    if (finished) return;
    finished = true;
    loadState = state;
    clearTimers();
    settle();
  };

  const armQuietTimer = () => {
    if (quietTimer) clearTimeout(quietTimer);
    quietTimer = setTimeout(() => finish("loaded"), policy.domQuietMs);
  };

  cdp.on("Page.loadEventFired", () => {
    if (finished || loadFired) return;
    loadFired = true;
    armQuietTimer();
    capTimer = setTimeout(() => finish("loaded"), policy.postLoadCapMs);
  });

  cdp.on("Runtime.bindingCalled", (params) => {
    if (params.name === DOM_CHANGE_BINDING && loadFired && !finished) {
      armQuietTimer();
    }
  });

  cdp.on("Debugger.scriptParsed", (params) => {
    if (params.scriptLanguage !== "WebAssembly") return;
    const scriptId = String(params.scriptId);
    if (wasmSeen.has(scriptId)) return;
    wasmSeen.add(scriptId);
    wasmFetches.push(
      cdp.send("Debugger.getScriptSource", { scriptId })
        .then((result) => {
          if (result.bytecode) {
            wasmModules.push(Buffer.from(result.bytecode, "base64"));
          }
        })
        .catch(() => { /* target died before the dump finished */ }),
    );
  });

  const pushFrame = (direction: "sent" | "received", response: any) => {
    const opcode = response?.opcode;
    const data: string = response?.payloadData ?? "";
    let payload = opcode === 2
      ? Buffer.from(data, "base64")
      : Buffer.from(data, "utf8");
    if (payload.length > policy.frameCapBytes) {
      payload = payload.subarray(0, policy.frameCapBytes);
    }
    frames.push({
      direction,
      timestamp_ms: Date.now(),
      payload_b64: payload.toString("base64"),
    });
  };
  cdp.on("Network.webSocketFrameSent", (p) => pushFrame("sent", p.response));
  cdp.on("Network.webSocketFrameReceived", (p) => pushFrame("received", p.response));

  cdp.onClose(() => {
    if (!finished) {
      errorText = errorText ?? "NavigationError: connection lost";
      finish("timeout");
    }
  });

  try {
    await cdp.send("Page.enable");
    await cdp.send("Network.enable");
    await cdp.send("Runtime.enable");
    await cdp.send("Debugger.enable");
    await cdp.send("Runtime.addBinding", { name: DOM_CHANGE_BINDING });
    await cdp.send("Page.addScriptToEvaluateOnNewDocument", { source: OBSERVER_SOURCE });
  } catch (err) {
    errorText = `NavigationError: ${String(err)}`;
    finish("timeout");
  }

  if (!finished) {
    hardTimer = setTimeout(() => finish("timeout"), policy.hardTimeoutMs);
    try {
      const nav = await cdp.send("Page.navigate", { url });
      if (nav.errorText) {
        errorText = `NavigationError: ${nav.errorText}`;
        finish("timeout");
      }
    } catch (err) {
      errorText = errorText ?? `NavigationError: ${String(err)}`;
      finish("timeout");
    }
  }

  await done;

  let html = "";
  let finalUrl = url;
  if (!cdp.closed) {
    try {
      const evaluated = await cdp.send("Runtime.evaluate", {
        expression: "document.documentElement ? document.documentElement.outerHTML : \"\"",
        returnByValue: true,
      });
      html = String(evaluated.result?.value ?? "");
    } catch { /* keep empty html */ }
    try {
      const located = await cdp.send("Runtime.evaluate", {
        expression: "location.href",
        returnByValue: true,
      });
      finalUrl = String(located.result?.value ?? url);
    } catch { /* keep the navigated url */ }
  }
  await Promise.allSettled(wasmFetches);
  cdp.close();
  if (targetId) await browser.closeTarget(targetId);

  return makeRecord(domain, finalUrl, html, policy.htmlPrefixBytes,
    wasmModules, frames, loadState, errorText);
}
