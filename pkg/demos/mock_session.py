"""Run a complete in-process session: hub, virtual-clock robot, pipeline.

Ten scripted utterances flow through the mock transcription backend and a
scripted responder; the per-turn summary prints as JSON at the end.

    python3 demos/mock_session.py
"""

import json
import sys
import threading
import time
from pathlib import Path

from pgpt.asr import MockBackend, MockManifestEntry
from pgpt.clock import VirtualClock
from pgpt.dialogue import MockResponder
from pgpt.hub import HubThread
from pgpt.pipeline import Pipeline, PipelineConfig
from pgpt.robot_sim import default_gesture_rules, default_registry, run_robot


def make_manifest():
    rows = [
        ("u01", "please wave to everyone", 15),
        ("u02", "tell me about yourself", 20),
        ("u03", "can you dance", 10),
        ("u04", "what is the weather like", 25),
        ("u05", "bow for the audience", 15),
    ]
    return [
        MockManifestEntry(uid, "demo", f"{uid}.wav", text, text, delay)
        for uid, text, delay in rows
    ]


def main():
    hub = HubThread().start()
    stop = threading.Event()
    robot = threading.Thread(
        target=run_robot,
        args=("127.0.0.1", hub.tcp_port, default_registry(),
              default_gesture_rules(), VirtualClock(), stop),
        daemon=True,
    )
    robot.start()
    time.sleep(0.2)

    manifest = make_manifest()
    responder = MockResponder([
        {"utterance": e.reference_text, "reply": f"Happy to chat about that."}
        for e in manifest
    ])
    pipe = Pipeline(PipelineConfig(hub_port=hub.tcp_port),
                    MockBackend(manifest), responder, default_registry()).connect()
    try:
        summary = pipe.run_loop(manifest)
    finally:
        pipe.close()
        stop.set()
        hub.stop()
    json.dump(summary, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
