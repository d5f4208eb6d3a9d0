"""Config file loading with a typo guard.

YAML file of nested sections; every consumed key is declared here and an
unknown key aborts startup so misspelled options never silently fall back to
defaults.  Precedence is flags > environment > file.
"""

from __future__ import annotations

import os

import yaml

CONFIG_PATH_ENV = "PGPT_CONFIG"

KNOWN_KEYS = {
    "hub.host",
    "hub.tcp_port",
    "hub.ws_port",
    "hub.heartbeat_interval_s",
    "hub.heartbeat_misses",
    "gate.threshold_dbfs",
    "gate.min_speech_ms",
    "gate.hangover_ms",
    "gate.max_utterance_s",
    "gate.hallucination_phrases",
    "asr.backend",
    "asr.endpoint",
    "asr.model",
    "asr.manifest",
    "llm.backend",
    "llm.endpoint",
    "llm.model",
    "llm.system_prompt",
    "llm.scenario",
    "pipeline.empty_retry_limit",
    "pipeline.end_flag_timeout_s",
    "robot.registry",
    "robot.gestures",
}


class ConfigError(Exception):
    pass


def load_config(path: str | None) -> dict:
    """Load the YAML config and flatten it to dotted keys; validate all keys."""
    if path is None:
        path = os.environ.get(CONFIG_PATH_ENV)
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    flat = {}
    for section, body in raw.items():
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section!r} must be a mapping")
        for key, value in body.items():
            dotted = f"{section}.{key}"
            if dotted not in KNOWN_KEYS:
                raise ConfigError(f"unknown config key: {dotted}")
            flat[dotted] = value
    return flat


def gate_config_from(flat: dict):
    from .audio_gate import GateConfig

    return GateConfig(
        threshold_dbfs=float(flat.get("gate.threshold_dbfs", -35.0)),
        min_speech_ms=int(flat.get("gate.min_speech_ms", 300)),
        hangover_ms=int(flat.get("gate.hangover_ms", 700)),
        max_utterance_s=float(flat.get("gate.max_utterance_s", 30.0)),
    )
