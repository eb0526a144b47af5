/**
 * Capture record schema shared with the analysis pipeline. Field names are
 * fixed: domain, final_url, html_b64, wasm_modules, ws_frames, load_state.
 */

export type LoadState = "loaded" | "timeout";
export type FrameDirection = "sent" | "received";

export interface WsFrame {
  direction: FrameDirection;
  timestamp_ms: number;
  payload_b64: string;
}

export interface CaptureRecord {
  domain: string;
  final_url: string;
  html_b64: string;
  wasm_modules: string[];
  ws_frames: WsFrame[];
  load_state: LoadState;
  error: string | null;
}

/** Truncate a UTF-8 string to a byte budget without splitting code points. */
export function capBytes(text: string, maxBytes: number): Buffer {
  const raw = Buffer.from(text, "utf8");
  if (raw.length <= maxBytes) {
    return raw;
  }
  let end = maxBytes;
  while (end > 0 && (raw[end] & 0xc0) === 0x80) {
    end -= 1; // do not cut inside a multi-byte sequence
  }
  return raw.subarray(0, end);
}

export function makeRecord(
  domain: string,
  finalUrl: string,
  html: string,
  htmlCapBytes: number,
  wasmModules: Buffer[],
  wsFrames: WsFrame[],
  loadState: LoadState,
  error: string | null = null,
): CaptureRecord {
  return {
    domain,
    final_url: finalUrl,
    html_b64: capBytes(html, htmlCapBytes).toString("base64"),
    wasm_modules: wasmModules.map((m) => m.toString("base64")),
    ws_frames: wsFrames,
    load_state: loadState,
    error,
  };
}

export function recordLine(record: CaptureRecord): string {
  return JSON.stringify(record) + "\n";
}
