"""Record a live observer-stream session log for the replay-fidelity test.

Runs the in-process mock stack, attaches a console over the WebSocket
observer endpoint, drives a multi-turn pipeline session, and writes the
first 200 captured frame lines to tests/fixtures/session.log together
with the expected final state badge in session.meta.json.

    python3 frontend/scripts/record_fixture.py
"""

import json
import sys
import threading
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from stack import MockStack, scripted_responder, ten_item_manifest

from pgpt.asr import MockBackend, MockManifestEntry
from pgpt.pipeline import Pipeline, PipelineConfig
from pgpt.robot_sim import default_registry


def main():
    import asyncio
    import websockets

    captured = []
    stack = MockStack()
    ready = threading.Event()
    done = threading.Event()

    async def observe():
        uri = f"ws://127.0.0.1:{stack.ws_port}/observe"
        async with websockets.connect(uri) as ws:
            await ws.send('R|{"turn": 0, "sender": "recorder", '
                          '"role": "console", "name": "recorder"}')
            ready.set()
            while not (done.is_set() and len(captured) >= 200):
                try:
                    msg = await asyncio.wait_for(ws.recv(), timeout=1.0)
                except asyncio.TimeoutError:
                    if done.is_set():
                        break
                    continue
                captured.append(msg if isinstance(msg, str) else msg.decode())

    observer = threading.Thread(target=lambda: asyncio.run(observe()), daemon=True)
    observer.start()
    if not ready.wait(5):
        raise RuntimeError("observer never registered")

    # four laps over the ten-item manifest gives comfortably over 200 frames
    manifest = []
    for lap in range(4):
        for entry in ten_item_manifest():
            manifest.append(MockManifestEntry(
                id=f"{entry.id}-l{lap}", group=entry.group,
                audio_path=entry.audio_path, reference_text=entry.reference_text,
                mock_hypothesis=entry.mock_hypothesis,
                mock_delay_ms=entry.mock_delay_ms))
    pipe = Pipeline(PipelineConfig(hub_port=stack.tcp_port),
                    MockBackend(manifest), scripted_responder(),
                    default_registry()).connect()
    try:
        pipe.run_loop(manifest)
    finally:
        pipe.close()
    time.sleep(0.5)
    done.set()
    observer.join(timeout=5)
    stack.stop()

    lines = captured[:200]
    if len(lines) < 200:
        raise RuntimeError(f"only captured {len(lines)} frames")
    last_state = None
    for line in lines:
        if line.startswith("X|"):
            body = json.loads(line[2:])
            if "state" in body:
                last_state = body["state"]

    out_dir = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "session.log").write_text("\n".join(lines) + "\n")
    (out_dir / "session.meta.json").write_text(json.dumps({
        "n_frames": len(lines),
        "final_state": last_state,
    }, indent=2) + "\n")
    print(f"wrote {len(lines)} frames, final state {last_state}")


if __name__ == "__main__":
    main()
