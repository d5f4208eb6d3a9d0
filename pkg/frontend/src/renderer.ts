/** Pure rendering core: frames in, timeline entries + state badge out.
 *
 * No sockets here — the client feeds it lines in arrival order, tests feed
 * it recorded logs. It never fabricates state: everything rendered comes
 * from the observer stream or a local injection.
 */

import { decodeFrame, parseEnvelope, FrameError, type Envelope } from "./protocol.js";

export type EntryKind =
  | "robot-state"
  | "assistant"
  | "robot-action"
  | "prompt"
  | "end-flag"
  | "user-pending"
  | "user"
  | "injection"
  | "notice"
  | "gap"
  | "garbage";

export interface TimelineEntry {
  seq: number;
  kind: EntryKind;
  turn: number | null;
  text: string;
  arrivalMs: number;
  /** E-frame arrival minus the matching A/S arrival; client-side, approximate. */
  latencyMs?: number;
  confirmed?: boolean;
}

export class ConsoleRenderer {
  readonly maxEntries: number;
  entries: TimelineEntry[] = [];
  stateBadge = "unknown";
  connected = false;
  framesApplied = 0;
  /** Scrollback trimmed past maxEntries — surfaced, never silent. */
  overflowTrimmed = 0;

  private seq = 0;
  private pendingInjections: TimelineEntry[] = [];
  private commandArrivals = new Map<number, number>();

  constructor(maxEntries = 5000) {
    this.maxEntries = maxEntries;
  }

  get overflowed(): boolean {
    return this.overflowTrimmed > 0;
  }

  /** Apply one raw frame line in arrival order. Never throws. */
  apply(line: string, arrivalMs: number): void {
    let env: Envelope | null;
    let symbol: string;
    try {
      const frame = decodeFrame(line);
      symbol = frame.symbol;
      env = parseEnvelope(frame);
    } catch (err) {
      if (err instanceof FrameError) {
        this.push("garbage", null, `unparseable frame: ${String(err.message)}`, arrivalMs);
        return;
      }
      throw err;
    }
    this.framesApplied += 1;
    if (env === null) return; // bare heartbeat
    switch (symbol) {
      case "X":
        if (env.state !== undefined) {
          this.stateBadge = env.state;
          this.push("robot-state", env.turn, env.state, arrivalMs);
        } else {
          this.push("notice", env.turn, env.reason ?? "notice", arrivalMs);
        }
        break;
      case "S":
        this.commandArrivals.set(env.turn, arrivalMs);
        this.confirmPending(arrivalMs);
        this.push("assistant", env.turn, env.text ?? "", arrivalMs);
        break;
      case "A":
        this.commandArrivals.set(env.turn, arrivalMs);
        this.confirmPending(arrivalMs);
        this.push("robot-action", env.turn, env.action ?? "", arrivalMs);
        break;
      case "P":
        this.confirmPending(arrivalMs);
        this.push("prompt", env.turn, env.text ?? env.reason ?? "", arrivalMs);
        break;
      case "E": {
        const started = this.commandArrivals.get(env.turn);
        const entry = this.push("end-flag", env.turn, env.status ?? "", arrivalMs);
        if (started !== undefined) {
          entry.latencyMs = arrivalMs - started;
          this.commandArrivals.delete(env.turn);
        }
        break;
      }
      case "T":
        this.push("injection", env.turn, env.text ?? "", arrivalMs);
        break;
      case "H":
      case "R":
        break;
    }
  }

  /** Render a locally injected utterance as a pending user bubble. */
  injectPending(text: string, arrivalMs: number): TimelineEntry {
    const entry = this.push("user-pending", null, text, arrivalMs);
    this.pendingInjections.push(entry);
    return entry;
  }

  markConnected(arrivalMs: number): void {
    this.connected = true;
    this.push("gap", null, "connected", arrivalMs);
  }

  markDisconnected(arrivalMs: number): void {
    this.connected = false;
    this.push("gap", null, "disconnected", arrivalMs);
  }

  /** The oldest pending bubble is confirmed by the next pipeline outcome. */
  private confirmPending(arrivalMs: number): void {
    const pending = this.pendingInjections.shift();
    if (pending) {
      pending.kind = "user";
      pending.confirmed = true;
      pending.latencyMs = arrivalMs - pending.arrivalMs;
    }
  }

  private push(kind: EntryKind, turn: number | null, text: string, arrivalMs: number): TimelineEntry {
    const entry: TimelineEntry = { seq: this.seq++, kind, turn, text, arrivalMs };
    this.entries.push(entry);
    if (this.entries.length > this.maxEntries) {
      const excess = this.entries.length - this.maxEntries;
      this.entries.splice(0, excess);
      this.overflowTrimmed += excess;
    }
    return entry;
  }
}
