"""Boot the in-process mock stack with a text-only pipeline for live tests.

Prints one JSON line with the hub ports once everything is registered,
then serves console-injected turns until stdin closes or SIGTERM.

    python3 frontend/scripts/live_stack.py
"""

import json
import signal
import sys
import threading
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from stack import MockStack

from pgpt.asr import MockBackend
from pgpt.dialogue import MockResponder
from pgpt.pipeline import Pipeline, PipelineConfig
from pgpt.robot_sim import default_registry


def main():
    stack = MockStack()
    pipe = Pipeline(
        PipelineConfig(hub_port=stack.tcp_port),
        MockBackend([]),
        MockResponder(default_reply="Happy to chat."),
        default_registry(),
    ).connect()

    stop = threading.Event()
    loop = threading.Thread(
        target=lambda: pipe.run_loop([], wait_for_injections=True), daemon=True)
    loop.start()

    print(json.dumps({"tcp_port": stack.tcp_port, "ws_port": stack.ws_port}),
          flush=True)

    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        while not stop.is_set():
            if sys.stdin.readline() == "":
                break
    except KeyboardInterrupt:
        pass
    pipe.close()
    stack.stop()


if __name__ == "__main__":
    main()
