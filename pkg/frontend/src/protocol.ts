/** Line-frame grammar shared with the hub: `<symbol>|<payload>`. */

export const SYMBOLS = ["R", "S", "A", "E", "P", "T", "X", "H"] as const;
export type Symbol = (typeof SYMBOLS)[number];

export const MAX_PAYLOAD_BYTES = 65536;

export interface Frame {
  symbol: Symbol;
  payload: string;
}

export interface Envelope {
  turn: number;
  sender: string;
  text?: string;
  action?: string;
  status?: string;
  reason?: string;
  state?: string;
  role?: string;
  name?: string;
}

export class FrameError extends Error {}

/** Parse one frame line (no trailing newline). Throws FrameError on garbage. */
export function decodeFrame(line: string): Frame {
  const sep = line.indexOf("|");
  if (sep < 0) throw new FrameError(`missing separator: ${line.slice(0, 40)}`);
  const symbol = line.slice(0, sep);
  if (!SYMBOLS.includes(symbol as Symbol)) {
    throw new FrameError(`unknown prefix: ${symbol}`);
  }
  const payload = line.slice(sep + 1);
  if (Buffer.byteLength(payload, "utf8") > MAX_PAYLOAD_BYTES) {
    throw new FrameError("payload too long");
  }
  return { symbol: symbol as Symbol, payload };
}

export function encodeFrame(frame: Frame): string {
  if (frame.payload.includes("\n")) throw new FrameError("payload contains newline");
  return `${frame.symbol}|${frame.payload}`;
}

/** Parse the one-line JSON envelope; heartbeat frames may be empty. */
export function parseEnvelope(frame: Frame): Envelope | null {
  if (frame.payload.trim() === "") {
    if (frame.symbol === "H") return null;
    throw new FrameError("empty payload");
  }
  let body: unknown;
  try {
    body = JSON.parse(frame.payload);
  } catch {
    throw new FrameError("payload is not JSON");
  }
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    throw new FrameError("envelope is not an object");
  }
  const env = body as Envelope;
  if (typeof env.turn !== "number" || typeof env.sender !== "string") {
    throw new FrameError("envelope missing turn/sender");
  }
  return env;
}

export function registerFrame(name: string): string {
  return encodeFrame({
    symbol: "R",
    payload: JSON.stringify({ turn: 0, sender: name, role: "console", name }),
  });
}

export function injectionFrame(turn: number, sender: string, text: string): string {
  return encodeFrame({
    symbol: "T",
    payload: JSON.stringify({ turn, sender, text }),
  });
}
