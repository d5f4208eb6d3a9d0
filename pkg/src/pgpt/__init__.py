"""Prefix-routed hub, speech pipeline, simulated robot controller and WER eval kit."""

__version__ = "0.1.0"
