"""Single entrypoint: ``pgpt hub|robot|pipeline|eval`` subcommands.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys

from .config import ConfigError, gate_config_from, load_config


def _host_port(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {value!r}")
    return host or "127.0.0.1", int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgpt", description=__doc__)
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    hub_p = sub.add_parser("hub", help="message hub").add_subparsers(dest="hub_cmd", required=True)
    serve_p = hub_p.add_parser("serve", help="run the hub until interrupted")
    serve_p.add_argument("--bind", type=_host_port, default=("127.0.0.1", 7350),
                         metavar="HOST:PORT", help="stream-socket endpoint (default 127.0.0.1:7350)")
    serve_p.add_argument("--ws-bind", type=_host_port, default=("127.0.0.1", 7351),
                         metavar="HOST:PORT", help="WebSocket observer endpoint (default 127.0.0.1:7351)")
    serve_p.add_argument("--config", help="config file")

    robot_p = sub.add_parser("robot", help="simulated robot controller") \
                 .add_subparsers(dest="robot_cmd", required=True)
    run_p = robot_p.add_parser("run", help="connect the simulator to a hub")
    run_p.add_argument("--hub", type=_host_port, required=True, metavar="HOST:PORT")
    run_p.add_argument("--registry", help="action registry JSON (default: built-in seed)")
    run_p.add_argument("--gestures", help="gesture rules JSON (default: built-in seed)")
    run_p.add_argument("--virtual-clock", action="store_true",
                       help="simulate durations instantly instead of sleeping")
    run_p.add_argument("--log", help="write the event log here on exit")

    pipe_p = sub.add_parser("pipeline", help="speech pipeline orchestrator") \
                .add_subparsers(dest="pipeline_cmd", required=True)
    prun_p = pipe_p.add_parser("run", help="run a turn-loop session")
    prun_p.add_argument("--hub", type=_host_port, required=True, metavar="HOST:PORT")
    prun_p.add_argument("--config", help="config file")
    prun_p.add_argument("--input", required=True,
                        help="wav-dir:PATH | manifest:PATH | text-only")
    prun_p.add_argument("--no-wait", action="store_true",
                        help="tolerate an absent controller (undeliverable turns)")
    prun_p.add_argument("--summary", help="write the session summary JSON here")

    eval_p = sub.add_parser("eval", help="WER scoring and benchmark runs") \
                .add_subparsers(dest="eval_cmd", required=True)
    wer_p = eval_p.add_parser("wer", help="score paired reference/hypothesis files")
    wer_p.add_argument("--ref", required=True, help="reference file, one utterance per line")
    wer_p.add_argument("--hyp", required=True, help="hypothesis file, paired line by line")
    bench_p = eval_p.add_parser("bench", help="run a manifest benchmark")
    bench_p.add_argument("--manifest", required=True)
    bench_p.add_argument("--backend", choices=["mock", "http"], default="mock")
    bench_p.add_argument("--endpoint", help="HTTP transcription endpoint (backend=http)")
    bench_p.add_argument("--model", default="whisper-small")
    bench_p.add_argument("--out", required=True)
    bench_p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _cmd_hub_serve(args) -> int:
    from .hub import HubConfig, serve

    flat = load_config(args.config)
    config = HubConfig(
        heartbeat_interval_s=float(flat.get("hub.heartbeat_interval_s", 5.0)),
        heartbeat_misses=int(flat.get("hub.heartbeat_misses", 2)),
    )
    host, port = args.bind
    _, ws_port = args.ws_bind
    try:
        asyncio.run(serve(host, port, ws_port, config))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_robot_run(args) -> int:
    from . import robot_sim
    from .clock import RealClock, VirtualClock

    registry = (robot_sim.load_action_registry(args.registry)
                if args.registry else robot_sim.default_registry())
    gestures = (robot_sim.load_gesture_rules(args.gestures)
                if args.gestures else robot_sim.default_gesture_rules())
    clock = VirtualClock() if args.virtual_clock else RealClock()
    host, port = args.hub
    core = None
    try:
        core = robot_sim.run_robot(host, port, registry, gestures, clock)
    except KeyboardInterrupt:
        pass
    finally:
        if args.log and core is not None:
            with open(args.log, "w", encoding="utf-8") as fh:
                fh.write("\n".join(core.event_log) + "\n")
    return 0


def _build_backend(flat: dict, manifest_entries):
    from .asr import HttpBackend, MockBackend

    backend_kind = flat.get("asr.backend", "mock")
    if backend_kind == "mock":
        return MockBackend(manifest_entries or [])
    endpoint = flat.get("asr.endpoint")
    if not endpoint:
        raise ConfigError("asr.backend=http requires asr.endpoint")
    return HttpBackend(endpoint, model=flat.get("asr.model", "whisper-small"))


def _build_responder(flat: dict):
    from .dialogue import HttpResponder, MockResponder

    llm_kind = flat.get("llm.backend", "mock")
    if llm_kind == "mock":
        scenario = flat.get("llm.scenario")
        return MockResponder.from_file(scenario) if scenario else MockResponder()
    endpoint = flat.get("llm.endpoint")
    if not endpoint:
        raise ConfigError("llm.backend=http requires llm.endpoint")
    return HttpResponder(endpoint, model=flat.get("llm.model", "gpt-3.5-turbo"))


def _cmd_pipeline_run(args) -> int:
    import glob
    import os

    from . import robot_sim
    from .asr import load_manifest
    from .pipeline import Pipeline, PipelineConfig

    flat = load_config(args.config)
    source, _, source_arg = args.input.partition(":")
    if source not in ("wav-dir", "manifest", "text-only"):
        raise ConfigError(f"unknown input source {source!r}")
    if source in ("wav-dir", "manifest") and not source_arg:
        raise ConfigError(f"input source {source} needs a path, e.g. {source}:PATH")

    manifest_entries = None
    if source == "manifest":
        manifest_entries = load_manifest(source_arg)
        items = manifest_entries
    elif source == "wav-dir":
        items = sorted(glob.glob(os.path.join(source_arg, "*.wav")))
        if flat.get("asr.manifest"):
            manifest_entries = load_manifest(flat["asr.manifest"])
    else:
        items = []

    host, port = args.hub
    config = PipelineConfig(
        hub_host=host,
        hub_port=port,
        gate=gate_config_from(flat),
        empty_retry_limit=int(flat.get("pipeline.empty_retry_limit", 3)),
        end_flag_timeout_s=float(flat.get("pipeline.end_flag_timeout_s", 60.0)),
        no_wait=args.no_wait,
    )
    phrases = flat.get("gate.hallucination_phrases")
    if phrases:
        config.hallucination_phrases = tuple(phrases)
    registry = (robot_sim.load_action_registry(flat["robot.registry"])
                if flat.get("robot.registry") else robot_sim.default_registry())

    pipe = Pipeline(config, _build_backend(flat, manifest_entries),
                    _build_responder(flat), registry).connect()
    try:
        summary = pipe.run_loop(items, wait_for_injections=(source == "text-only"))
    finally:
        pipe.close()
    if args.summary:
        pipe.write_summary(args.summary)
    print(f"session complete: {summary['n_turns']} turns")
    return 0


def _cmd_eval_wer(args) -> int:
    from .evalkit import AlignmentCounts, EmptyReference, align, compute_wer, normalize

    with open(args.ref, encoding="utf-8") as fh:
        refs = [line.rstrip("\n") for line in fh]
    with open(args.hyp, encoding="utf-8") as fh:
        hyps = [line.rstrip("\n") for line in fh]
    if len(refs) != len(hyps):
        print(f"eval wer: {len(refs)} reference lines but {len(hyps)} hypothesis lines",
              file=sys.stderr)
        return 1
    total = AlignmentCounts(0, 0, 0, 0)
    for ref, hyp in zip(refs, hyps):
        counts = align(normalize(ref), normalize(hyp))
        total = AlignmentCounts(total.S + counts.S, total.D + counts.D,
                                total.I + counts.I, total.N1 + counts.N1)
    try:
        result = compute_wer(total)
    except EmptyReference:
        print("eval wer: empty reference, WER undefined", file=sys.stderr)
        return 1
    print(f"wer {result.wer:.4f} (S={total.S} D={total.D} I={total.I} N1={total.N1})")
    return 0


def _cmd_eval_bench(args) -> int:
    from .asr import HttpBackend, MockBackend, load_manifest
    from .evalkit import bench_run, emit_report

    entries = load_manifest(args.manifest)
    if args.backend == "mock":
        backend = MockBackend(entries)
    else:
        if not args.endpoint:
            print("eval bench: --backend http requires --endpoint", file=sys.stderr)
            return 2
        backend = HttpBackend(args.endpoint, model=args.model)
    report = bench_run(entries, backend)
    emit_report(report, args.format, args.out)
    print(f"wrote {len(report.rows)} rows to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        if args.command == "hub":
            return _cmd_hub_serve(args)
        if args.command == "robot":
            return _cmd_robot_run(args)
        if args.command == "pipeline":
            return _cmd_pipeline_run(args)
        if args.command == "eval":
            if args.eval_cmd == "wer":
                return _cmd_eval_wer(args)
            return _cmd_eval_bench(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"pgpt: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:   # runtime failures are exit 1, not tracebacks
        logging.getLogger("pgpt").debug("unhandled", exc_info=True)
        print(f"pgpt: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
