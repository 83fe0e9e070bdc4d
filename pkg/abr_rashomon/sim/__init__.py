"""Trace-driven, chunk-level ABR playback simulator."""
