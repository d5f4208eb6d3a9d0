import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import { ConsoleRenderer } from "../src/renderer.js";
import { decodeFrame, encodeFrame, parseEnvelope } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtureLines = readFileSync(join(here, "fixtures", "session.log"), "utf8")
  .trim()
  .split("\n");
const meta = JSON.parse(
  readFileSync(join(here, "fixtures", "session.meta.json"), "utf8"),
);

describe("recorded 200-frame session replay", () => {
  it("renders every frame in arrival order with zero drops", () => {
    expect(fixtureLines.length).toBe(200);
    const renderer = new ConsoleRenderer();
    const expectedOrder: Array<[number, string]> = [];
    fixtureLines.forEach((line, idx) => {
      renderer.apply(line, idx * 10); // 100 frames/second burst
      const env = parseEnvelope(decodeFrame(line));
      if (env && ["S", "A", "P", "E", "T", "X"].includes(line[0])) {
        expectedOrder.push([env.turn, line[0]]);
      }
    });
    expect(renderer.framesApplied).toBe(200);
    expect(renderer.overflowTrimmed).toBe(0);
    expect(renderer.entries.length).toBe(expectedOrder.length);
    // arrival order preserved: seq strictly increasing, turns match the log
    renderer.entries.forEach((entry, idx) => {
      expect(entry.seq).toBe(idx);
      expect(entry.turn).toBe(expectedOrder[idx][0]);
    });
  });

  it("final state badge equals the last X state in the log", () => {
    const renderer = new ConsoleRenderer();
    fixtureLines.forEach((line, idx) => renderer.apply(line, idx));
    expect(renderer.stateBadge).toBe(meta.final_state);
  });

  it("attaches a latency readout to end flags", () => {
    const renderer = new ConsoleRenderer();
    fixtureLines.forEach((line, idx) => renderer.apply(line, idx * 10));
    // prompt turns have no A/S to measure from; every command turn does
    const commandTurns = new Set(
      renderer.entries
        .filter((e) => e.kind === "robot-action" || e.kind === "assistant")
        .map((e) => e.turn),
    );
    const flags = renderer.entries.filter(
      (e) => e.kind === "end-flag" && commandTurns.has(e.turn),
    );
    expect(flags.length).toBeGreaterThan(10);
    for (const flag of flags) {
      expect(flag.latencyMs).toBeGreaterThan(0);
    }
  });
});

describe("bounded scrollback", () => {
  it("trims with a visible overflow indicator instead of silent loss", () => {
    const renderer = new ConsoleRenderer(50);
    fixtureLines.forEach((line, idx) => renderer.apply(line, idx));
    expect(renderer.framesApplied).toBe(200);
    expect(renderer.entries.length).toBe(50);
    expect(renderer.overflowed).toBe(true);
    expect(renderer.overflowTrimmed).toBeGreaterThan(0);
  });
});

describe("renderer state handling", () => {
  it("badge follows X frames and never invents state", () => {
    const renderer = new ConsoleRenderer();
    expect(renderer.stateBadge).toBe("unknown");
    renderer.apply('X|{"turn":3,"sender":"controller","state":"thinking"}', 0);
    expect(renderer.stateBadge).toBe("thinking");
    renderer.apply('S|{"turn":3,"sender":"pipeline","text":"hi"}', 1);
    expect(renderer.stateBadge).toBe("thinking");
  });

  it("renders garbage lines as visible entries without throwing", () => {
    const renderer = new ConsoleRenderer();
    renderer.apply("Z|nope", 0);
    renderer.apply("no separator at all", 1);
    expect(renderer.entries.map((e) => e.kind)).toEqual(["garbage", "garbage"]);
  });

  it("confirms the pending injection bubble on the next outcome frame", () => {
    const renderer = new ConsoleRenderer();
    const pending = renderer.injectPending("please wave", 100);
    expect(pending.kind).toBe("user-pending");
    renderer.apply('A|{"turn":1,"sender":"pipeline","action":"wave"}', 250);
    expect(pending.kind).toBe("user");
    expect(pending.confirmed).toBe(true);
    expect(pending.latencyMs).toBe(150);
  });
});

describe("frame grammar", () => {
  it("round-trips frames", () => {
    const line = 'A|{"turn":7,"sender":"pipeline","action":"wave"}';
    expect(encodeFrame(decodeFrame(line))).toBe(line);
  });

  it("rejects unknown prefixes and missing separators", () => {
    expect(() => decodeFrame("Q|{}")).toThrow();
    expect(() => decodeFrame("garbage")).toThrow();
  });
});
