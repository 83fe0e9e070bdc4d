"""Localization functions."""


def _L(s: str) -> str:
    """Mark `s` as user-facing text that a translation catalog may replace later."""
    return s
