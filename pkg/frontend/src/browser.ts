/**
 * Browser target management over the DevTools HTTP interface
 * (/json/new, /json/close). Each tab gets its own WebSocket.
 */

export interface TargetInfo {
  id: string;
  webSocketDebuggerUrl: string;
}

export class BrowserEndpoint {
  constructor(readonly baseUrl: string) {}

  async newTarget(): Promise<TargetInfo> {
    // Chrome switched /json/new to PUT; older builds answer GET
    let response = await fetch(`${this.baseUrl}/json/new`, { method: "PUT" });
    if (response.status === 405) {
      response = await fetch(`${this.baseUrl}/json/new`);
    }
    if (!response.ok) {
      throw new Error(`new target failed: HTTP ${response.status}`);
    }
    const info = (await response.json()) as TargetInfo;
    if (!info.webSocketDebuggerUrl) {
      throw new Error("target has no webSocketDebuggerUrl");
    }
    return info;
  }

  async closeTarget(id: string): Promise<void> {
    try {
      await fetch(`${this.baseUrl}/json/close/${id}`);
    } catch {
      /* browser already gone; nothing to clean up */
    }
  }

  async version(): Promise<Record<string, string>> {
    const response = await fetch(`${this.baseUrl}/json/version`);
    if (!response.ok) {
      throw new Error(`version probe failed: HTTP ${response.status}`);
    }
    return (await response.json()) as Record<string, string>;
  }
}
