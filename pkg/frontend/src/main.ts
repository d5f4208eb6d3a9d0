/** Terminal entry point: stream the timeline to stdout, inject via stdin.
 *
 *   node dist/main.js [host:port]      (default 127.0.0.1:8766)
 */

import * as readline from "node:readline";
import { ConsoleClient } from "./client.js";
import type { TimelineEntry } from "./renderer.js";

function formatEntry(entry: TimelineEntry, badge: string): string {
  const turn = entry.turn === null ? "-" : String(entry.turn);
  const latency = entry.latencyMs !== undefined ? ` (~${entry.latencyMs} ms)` : "";
  return `[${badge.padEnd(9)}] turn ${turn.padStart(3)} ${entry.kind}: ${entry.text}${latency}`;
}

async function main(): Promise<void> {
  const address = process.argv[2] ?? "127.0.0.1:8766";
  const client = new ConsoleClient(address);
  let printed = 0;
  setInterval(() => {
    const { entries, stateBadge } = client.renderer;
    for (const entry of entries) {
      if (entry.seq >= printed) {
        console.log(formatEntry(entry, stateBadge));
        printed = entry.seq + 1;
      }
    }
    if (client.renderer.overflowed) {
      console.log(`! scrollback trimmed (${client.renderer.overflowTrimmed} entries)`);
    }
  }, 100).unref();

  const rl = readline.createInterface({ input: process.stdin });
  rl.on("line", (line) => {
    try {
      client.injectUtterance(line);
    } catch (err) {
      console.error(`! ${String((err as Error).message)}`);
    }
  });
  rl.on("close", () => {
    client.close();
    process.exit(0);
  });

  await client.connect();
  console.log(`connected to ${client.url} — type to inject an utterance`);
}

main().catch((err) => {
  console.error(String(err));
  process.exit(1);
});
