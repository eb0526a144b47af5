// tiny but well-formed wasm module: magic, version, one-function code section
export const WASM_FIXTURE = Buffer.from([
  0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00,
  0x0a, 0x05, 0x01, 0x03, 0x00, 0x01, 0x0b,
]);
