"""Crash-discovery workbench for simulated Android-like apps.

Static contextual-feature analysis, multi-strategy GUI exploration with
crash-resilient ripping, natural-language crash reports, and replayable
crash scripts, all behind a pluggable device port whose reference backend
is a deterministic simulator.
"""

__version__ = "0.1.0"
